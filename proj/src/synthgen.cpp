#include "pneumodef/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "pneumodef/errors.hpp"

namespace pneumodef {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// mt19937_64 output is fixed by the standard; the double conversion below is
// done by hand so results do not depend on the library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  Vec3 unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * kPi);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }

 private:
  std::mt19937_64 engine_;
};

// Largest-remainder split of `total` into parts proportional to `weights`,
// each at least `minimum`.
std::vector<int> apportion(const std::vector<double>& weights, int total, int minimum) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> out(weights.size());
  std::vector<double> frac(weights.size());
  int used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double q = total * weights[i] / sum;
    out[i] = std::max(minimum, static_cast<int>(std::floor(q)));
    frac[i] = q - std::floor(q);
    used += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; used < total; k = (k + 1) % order.size()) {
    ++out[order[k]];
    ++used;
  }
  while (used > total) {
    const auto it = std::max_element(out.begin(), out.end());
    --*it;
    --used;
  }
  return out;
}

struct ShapeNoise {
  std::array<Vec3, 4> direction;
  std::array<double, 4> frequency{};
  std::array<double, 4> phase{};
  std::array<double, 4> weight{};

  explicit ShapeNoise(Rng& rng) {
    double norm = 0.0;
    for (int k = 0; k < 4; ++k) {
      direction[k] = rng.unit_vector();
      frequency[k] = rng.uniform(1.5, 3.0);
      phase[k] = rng.uniform(0.0, 2.0 * kPi);
      weight[k] = rng.uniform(-1.0, 1.0);
      norm += std::abs(weight[k]);
    }
    for (double& w : weight) w /= norm;
  }

  // In [-1, 1].
  double operator()(const Vec3& u) const {
    double g = 0.0;
    for (int k = 0; k < 4; ++k) g += weight[k] * std::cos(frequency[k] * direction[k].dot(u) + phase[k]);
    return g;
  }
};

// w * log(1 + exp(t / w)) without overflow.
double softplus(double t, double w) {
  const double x = t / w;
  return x > 0.0 ? t + w * std::log1p(std::exp(-x)) : w * std::log1p(std::exp(x));
}

struct Frame {
  Vec3 f;  // toward the fissure face
  Vec3 e;  // in-plane perpendicular
  Vec3 z{0.0, 0.0, 1.0};
};

Frame make_frame(const Vec3& axis) {
  Frame fr;
  fr.f = Vec3(axis.x(), axis.y(), 0.0).normalized();
  fr.e = fr.z.cross(fr.f);
  return fr;
}

// Per-case shape parameters after jitter.
struct CaseShape {
  Vec3 radii;
  double triangularity = 0.0;
  double flatten_level = 0.0;  // fraction of the fissure-side radius
  double compression = 0.0;
  double compression_tilt = 0.0;
  double bend = 0.0;
  double bend_asymmetry = 0.0;
  double twist = 0.0;
  double saddle = 0.0;
  double saddle_phase = 0.0;
  double tilt = 0.0;
};

CaseShape jitter(const GeneratorParams& p, Rng& rng) {
  const double cv = p.case_variation;
  CaseShape s;
  for (int i = 0; i < 3; ++i) s.radii[i] = p.base_radii[i] * (1.0 + cv * rng.uniform(-1.0, 1.0));
  s.triangularity = 0.15 * (1.0 + cv * rng.uniform(-1.0, 1.0));
  s.flatten_level = 0.6 + 0.5 * cv * rng.uniform(-1.0, 1.0);
  s.compression = 1.1 * (1.0 - p.target_volume_ratio) * (1.0 + cv * rng.uniform(-1.0, 1.0));
  s.compression_tilt = rng.uniform(-0.5, 0.5);
  s.bend = p.bend_strength * (1.0 + 2.0 * cv * rng.uniform(-1.0, 1.0));
  s.bend_asymmetry = rng.uniform(-0.3, 0.3);
  s.twist = p.bend_strength * rng.uniform(0.3, 0.6);
  s.saddle = 0.3 * (1.0 + cv * rng.uniform(-1.0, 1.0));
  s.saddle_phase = rng.uniform(-0.4, 0.4);
  s.tilt = 0.1 * rng.uniform(-1.0, 1.0);
  return s;
}

std::vector<Vec3> inflate(const SphereLayout& layout, const Frame& fr, const CaseShape& s,
                          const ShapeNoise& noise, double perturbation) {
  const double rf = s.radii.x();
  const double h = s.flatten_level * rf * (1.0 - s.triangularity);
  const double width = 0.08 * rf;
  constexpr double kFlatSlope = 0.15;
  std::vector<Vec3> out;
  out.reserve(layout.unit_points.size());
  for (const Vec3& u : layout.unit_points) {
    const double st = std::hypot(u.x(), u.y());
    const double phi = std::atan2(u.y(), u.x());
    // Rounded triangle outline: corners at 60, 180 and 300 degrees, flat side at 0.
    double r = 1.0 + s.triangularity * st * std::cos(3.0 * (phi - kPi / 3.0));
    r *= 1.0 + perturbation * noise(u);
    double a = r * s.radii.x() * u.x();
    const double b = r * s.radii.y() * u.y();
    const double c = r * s.radii.z() * u.z();
    // Monotone squash of everything beyond h along the fissure axis.
    a -= (1.0 - kFlatSlope) * softplus(a - h, width);
    // Curve the sheet out of the contour plane (a shear in z, so still an
    // embedding); the outline becomes a non-planar loop.
    const double an = a / s.radii.x();
    const double bn = b / s.radii.y();
    const double lift = s.saddle * (0.5 * (an * an - bn * bn) * std::cos(s.saddle_phase) +
                                    an * bn * std::sin(s.saddle_phase)) +
                        s.tilt * an;
    out.push_back(a * fr.f + b * fr.e + (c + lift * s.radii.z()) * fr.z);
  }
  return out;
}

std::vector<Vec3> deflate(const std::vector<Vec3>& pts, const Frame& fr, const CaseShape& s) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double s_min = 0.0, s_max = 0.0, t_max = 0.0, z_max = 0.0;
  for (const Vec3& p : pts) {
    const Vec3 d = p - c;
    s_min = std::min(s_min, d.dot(fr.f));
    s_max = std::max(s_max, d.dot(fr.f));
    t_max = std::max(t_max, std::abs(d.dot(fr.e)));
    z_max = std::max(z_max, std::abs(d.dot(fr.z)));
  }
  const double span = s_max - s_min;
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) {
    const Vec3 d = p - c;
    const double t = d.dot(fr.e);
    const double z = d.dot(fr.z);
    const double depth = (s_max - d.dot(fr.f)) / span;  // 0 at the fissure face, 1 opposite

    // Collapse toward the fissure face, stronger on one side of z.
    const double weight = 0.7 + 0.3 * std::tanh(z / z_max + s.compression_tilt);
    const double ds = s.compression * weight * depth * span;
    const double dt_c = -0.35 * s.compression * depth * t;
    const double dz_c = -0.25 * s.compression * (1.0 - depth) * z;

    // Sag along -z growing with distance from the fissure, plus a twist
    // about the fissure axis.
    const double dz_b = -s.bend * z_max * depth * depth * (1.0 + s.bend_asymmetry * t / t_max);
    const double angle = s.twist * depth;
    const double ca = std::cos(angle) - 1.0;
    const double sa = std::sin(angle);
    const double dt_r = t * ca - z * sa;
    const double dz_r = t * sa + z * ca;

    out.push_back(p + ds * fr.f + (dt_c + dt_r) * fr.e + (dz_c + dz_b + dz_r) * fr.z);
  }
  return out;
}

std::vector<Vec3> scaled(const std::vector<Vec3>& pts, const Vec3& center, double k) {
  std::vector<Vec3> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = center + k * (pts[i] - center);
  return out;
}

std::vector<Vec3> rescale_to_ratio(const std::vector<Vec3>& pts, const std::vector<Triangle>& tris,
                                   double v_inf, double target) {
  auto ratio = [&](const std::vector<Vec3>& p) { return signed_volume(p, tris) / v_inf; };
  if (std::abs(ratio(pts) - target) <= 1e-12 * target) return pts;
  const Vec3 c = centroid(pts);
  double lo = 0.0, hi = 4.0;
  if (ratio(scaled(pts, c, hi)) < target) throw GenerationError("volume-ratio rescale bracket too small");
  double best_err = std::numeric_limits<double>::infinity();
  double best = 1.0;
  for (int step = 0; step < 50; ++step) {
    const double mid = 0.5 * (lo + hi);
    const double r = ratio(scaled(pts, c, mid));
    if (std::abs(r - target) < best_err) {
      best_err = std::abs(r - target);
      best = mid;
    }
    if (best_err <= 1e-13 * target) break;
    (r < target ? lo : hi) = mid;
  }
  if (best_err > 1e-4) {
    throw GenerationError("volume-ratio rescale did not converge (error " + std::to_string(best_err) + ")");
  }
  return scaled(pts, c, best);
}

std::uint64_t case_seed(const GeneratorParams& p, int case_index) {
  std::uint64_t s = splitmix64(p.seed);
  s = splitmix64(s ^ static_cast<std::uint64_t>(case_index));
  return splitmix64(s ^ (p.lobe == Lobe::upper ? 0x5550ULL : 0x4c4fULL));
}

}  // namespace

void GeneratorParams::validate() const {
  if (vertex_count < 50) throw ArgumentError("vertex_count must be at least 50");
  for (int i = 0; i < 3; ++i) {
    if (!(base_radii[i] > 0.0) || !std::isfinite(base_radii[i])) {
      throw ArgumentError("base radii must be positive");
    }
  }
  if (!(shape_perturbation >= 0.0 && shape_perturbation <= 0.3)) {
    throw ArgumentError("shape_perturbation must lie in [0, 0.3]");
  }
  if (!(target_volume_ratio > 0.0 && target_volume_ratio <= 1.0)) {
    throw ArgumentError("target_volume_ratio must lie in (0, 1]");
  }
  if (!(bend_strength >= 0.0 && bend_strength <= 0.5)) {
    throw ArgumentError("bend_strength must lie in [0, 0.5]");
  }
  if (std::abs(fissure_axis.norm() - 1.0) > 1e-6) throw ArgumentError("fissure_axis must be a unit vector");
  if (std::hypot(fissure_axis.x(), fissure_axis.y()) < 0.5) {
    throw ArgumentError("fissure_axis must lie mostly in the xy plane");
  }
  if (!(case_variation >= 0.0 && case_variation <= 0.3)) {
    throw ArgumentError("case_variation must lie in [0, 0.3]");
  }
}

GeneratorParams default_params(Lobe lobe, std::uint64_t seed) {
  GeneratorParams p;
  p.seed = seed;
  p.lobe = lobe;
  if (lobe == Lobe::lower) {
    p.base_radii = Vec3(55.0, 42.0, 27.0);
    p.fissure_axis = Vec3(-1.0, 0.0, 0.0);
    p.bend_strength = 0.3;
  }
  return p;
}

SphereLayout sphere_layout(int vertex_count) {
  if (vertex_count < 8) throw ArgumentError("sphere layout needs at least 8 vertices");
  int rings = static_cast<int>(std::lround(std::sqrt(kPi * vertex_count) / 2.0));
  if (rings % 2 == 0) --rings;
  rings = std::max(rings, 1);
  std::vector<double> w(static_cast<std::size_t>(rings));
  for (int i = 0; i < rings; ++i) w[static_cast<std::size_t>(i)] = std::sin(kPi * (i + 1) / (rings + 1));
  const std::vector<int> counts = apportion(w, vertex_count - 2, 3);
  const int middle = (rings - 1) / 2;

  SphereLayout out;
  out.unit_points.reserve(static_cast<std::size_t>(vertex_count));
  out.unit_points.emplace_back(0.0, 0.0, 1.0);
  std::vector<int> first(static_cast<std::size_t>(rings));
  std::vector<double> offset(static_cast<std::size_t>(rings));
  for (int i = 0; i < rings; ++i) {
    const double theta = kPi * (i + 1) / (rings + 1);
    const int n = counts[static_cast<std::size_t>(i)];
    first[static_cast<std::size_t>(i)] = static_cast<int>(out.unit_points.size());
    offset[static_cast<std::size_t>(i)] = (std::abs(i - middle) % 2) * 0.5;
    const double st = i == middle ? 1.0 : std::sin(theta);
    const double ct = i == middle ? 0.0 : std::cos(theta);
    for (int j = 0; j < n; ++j) {
      const double phi = 2.0 * kPi * (j + offset[static_cast<std::size_t>(i)]) / n;
      out.unit_points.emplace_back(st * std::cos(phi), st * std::sin(phi), ct);
    }
  }
  const int south = static_cast<int>(out.unit_points.size());
  out.unit_points.emplace_back(0.0, 0.0, -1.0);

  auto& tris = out.triangles;
  const int n0 = counts.front();
  for (int j = 0; j < n0; ++j) tris.push_back({0, first[0] + j, first[0] + (j + 1) % n0});
  for (int r = 0; r + 1 < rings; ++r) {
    const int na = counts[static_cast<std::size_t>(r)];
    const int nb = counts[static_cast<std::size_t>(r + 1)];
    const int fa = first[static_cast<std::size_t>(r)];
    const int fb = first[static_cast<std::size_t>(r + 1)];
    const double oa = offset[static_cast<std::size_t>(r)];
    const double ob = offset[static_cast<std::size_t>(r + 1)];
    int i = 0, j = 0;
    while (i < na || j < nb) {
      const double next_a = (i + 1 + oa) / na;
      const double next_b = (j + 1 + ob) / nb;
      if (j < nb && (i == na || next_b < next_a)) {
        tris.push_back({fa + i % na, fb + j % nb, fb + (j + 1) % nb});
        ++j;
      } else {
        tris.push_back({fa + i % na, fb + j % nb, fa + (i + 1) % na});
        ++i;
      }
    }
  }
  const int nl = counts.back();
  const int fl = first.back();
  for (int j = 0; j < nl; ++j) tris.push_back({fl + j, south, fl + (j + 1) % nl});

  const int ne = counts[static_cast<std::size_t>(middle)];
  out.equator.resize(static_cast<std::size_t>(ne));
  std::iota(out.equator.begin(), out.equator.end(), first[static_cast<std::size_t>(middle)]);
  return out;
}

SyntheticCase generate_case(const GeneratorParams& params, int case_index) {
  params.validate();
  if (case_index < 1) throw ArgumentError("case_index starts at 1");
  Rng rng(case_seed(params, case_index));
  const CaseShape shape = jitter(params, rng);
  const ShapeNoise noise(rng);
  const Frame frame = make_frame(params.fissure_axis);
  const SphereLayout layout = sphere_layout(params.vertex_count);

  std::vector<Vec3> inflated = inflate(layout, frame, shape, noise, params.shape_perturbation);
  const double v_inf = signed_volume(inflated, layout.triangles);
  if (!(v_inf > 0.0)) throw GenerationError("inflated surface is inside out");
  std::vector<Vec3> deflated = rescale_to_ratio(deflate(inflated, frame, shape), layout.triangles,
                                                v_inf, params.target_volume_ratio);

  SyntheticCase out;
  out.contour = layout.equator;
  // Corners of the outline; the equator ring starts at azimuth 0 (the fissure axis).
  const int ne = static_cast<int>(layout.equator.size());
  auto corner = [&](const std::vector<Vec3>& pts, double degrees) {
    const int j = static_cast<int>(std::lround(degrees / 360.0 * ne)) % ne;
    return pts[static_cast<std::size_t>(layout.equator[static_cast<std::size_t>((j + ne) % ne)])];
  };
  const bool upper = params.lobe == Lobe::upper;
  const std::array<double, 3> corner_deg{upper ? -60.0 : 60.0, upper ? 60.0 : -60.0, 180.0};
  for (int k = 0; k < 3; ++k) out.corner_hints[static_cast<std::size_t>(k)] = corner(inflated, corner_deg[static_cast<std::size_t>(k)]);

  // Landmarks are placed once on the unperturbed lobe so every case of a
  // cohort shares the same landmark vertices.
  CaseShape base;
  base.radii = params.base_radii;
  base.triangularity = 0.15;
  base.flatten_level = 0.6;
  base.saddle = 0.3;
  const std::vector<Vec3> tmpl = inflate(layout, frame, base, noise, 0.0);
  std::array<Vec3, 3> tmpl_hints;
  for (int k = 0; k < 3; ++k) tmpl_hints[static_cast<std::size_t>(k)] = corner(tmpl, corner_deg[static_cast<std::size_t>(k)]);
  out.landmarks = place_contour_landmarks(Mesh(tmpl, layout.triangles, params.lobe), out.contour, tmpl_hints);

  char id[32];
  std::snprintf(id, sizeof id, "case%02d", case_index);
  Mesh inf(std::move(inflated), layout.triangles, params.lobe);
  Mesh def(std::move(deflated), layout.triangles, params.lobe);
  out.record = make_case(id, std::move(inf), std::move(def));
  return out;
}

std::vector<SyntheticCase> generate_cohort(const GeneratorParams& params, int n_cases) {
  if (n_cases < 1) throw ArgumentError("a cohort needs at least one case");
  std::vector<SyntheticCase> out;
  out.reserve(static_cast<std::size_t>(n_cases));
  for (int i = 1; i <= n_cases; ++i) out.push_back(generate_case(params, i));
  return out;
}

}  // namespace pneumodef
