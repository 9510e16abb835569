#include "pneumodef/manifest.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "pneumodef/errors.hpp"

namespace pneumodef {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json entry_to_json(const ManifestEntry& e) {
  json j;
  j["case_id"] = e.case_id;
  j["lobe"] = std::string(to_string(e.lobe));
  j["inflated_ply"] = e.inflated_ply.generic_string();
  if (e.deflated_ply) j["deflated_ply"] = e.deflated_ply->generic_string();
  j["landmark_indices"] = e.landmark_indices;
  j["is_augmented"] = e.is_augmented;
  if (e.corner_hints) {
    json hints = json::array();
    for (const Vec3& h : *e.corner_hints) hints.push_back({h.x(), h.y(), h.z()});
    j["corner_hints"] = hints;
  }
  if (!e.contour.empty()) j["contour"] = e.contour;
  return j;
}

ManifestEntry entry_from_json(const json& j, std::size_t position) {
  const std::string where = "manifest entry " + std::to_string(position);
  try {
    ManifestEntry e;
    e.case_id = j.at("case_id").get<std::string>();
    e.lobe = lobe_from_string(j.at("lobe").get<std::string>());
    e.inflated_ply = j.at("inflated_ply").get<std::string>();
    if (j.contains("deflated_ply") && !j["deflated_ply"].is_null()) {
      e.deflated_ply = fs::path(j["deflated_ply"].get<std::string>());
    }
    const auto& idx = j.at("landmark_indices");
    if (!idx.is_array() || idx.size() != kLandmarkCount) {
      throw FormatError(where + ": landmark_indices must hold 12 integers", 0);
    }
    for (int k = 0; k < kLandmarkCount; ++k) e.landmark_indices[k] = idx[k].get<int>();
    e.is_augmented = j.value("is_augmented", false);
    if (j.contains("corner_hints")) {
      const auto& h = j["corner_hints"];
      if (!h.is_array() || h.size() != 3) throw FormatError(where + ": corner_hints must hold 3 points", 0);
      std::array<Vec3, 3> hints;
      for (int k = 0; k < 3; ++k) {
        const auto p = h[k].get<std::vector<double>>();
        if (p.size() != 3) throw FormatError(where + ": corner hint is not a 3-vector", 0);
        hints[k] = Vec3(p[0], p[1], p[2]);
      }
      e.corner_hints = hints;
    }
    if (j.contains("contour")) e.contour = j["contour"].get<std::vector<int>>();
    return e;
  } catch (const json::exception& ex) {
    throw FormatError(where + ": " + ex.what(), 0);
  } catch (const ArgumentError& ex) {
    throw FormatError(where + ": " + ex.what(), 0);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

json manifest_json(const std::vector<ManifestEntry>& entries, const std::string& generator) {
  json j;
  j["cases"] = json::array();
  for (const auto& e : entries) j["cases"].push_back(entry_to_json(e));
  j["generator"] = json::parse(generator);
  return j;
}

}  // namespace

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& ex) {
    throw FormatError("manifest " + path.string() + ": " + ex.what(), 0);
  }
  if (!j.is_object() || !j.contains("cases") || !j["cases"].is_array()) {
    throw FormatError("manifest " + path.string() + " has no \"cases\" array", 0);
  }
  Manifest m;
  m.base_dir = path.parent_path();
  for (std::size_t i = 0; i < j["cases"].size(); ++i) m.entries.push_back(entry_from_json(j["cases"][i], i));
  if (j.contains("generator")) m.generator_json = j["generator"].dump();
  return m;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  write_text(path, manifest_json(manifest.entries, manifest.generator_json).dump(2) + "\n");
}

std::vector<LoadedCase> load_cases(const Manifest& manifest, Lobe lobe) {
  std::vector<LoadedCase> out;
  for (const auto& e : manifest.entries) {
    if (e.lobe != lobe) continue;
    if (!e.deflated_ply) throw FormatError("case '" + e.case_id + "' has no deflated mesh", 0);
    Mesh inf = load_ply(manifest.base_dir / e.inflated_ply, lobe);
    Mesh def = load_ply(manifest.base_dir / *e.deflated_ply, lobe);
    LoadedCase c;
    try {
      c.record = make_case(e.case_id, std::move(inf), std::move(def));
    } catch (const ArgumentError& ex) {
      throw FormatError(ex.what(), 0);
    }
    c.record.is_augmented = e.is_augmented;
    LandmarkConfig cfg;
    cfg.full_indices = e.landmark_indices;
    try {
      cfg.validate(c.record.inflated.vertex_count());
    } catch (const ArgumentError& ex) {
      throw FormatError("case '" + e.case_id + "': " + ex.what(), 0);
    }
    c.landmark_indices = e.landmark_indices;
    out.push_back(std::move(c));
  }
  return out;
}

fs::path write_cohort(const std::vector<SyntheticCase>& cases, const fs::path& dir,
                      const std::string& generator_json) {
  fs::create_directories(dir);
  std::vector<ManifestEntry> all;
  std::map<std::string, std::vector<ManifestEntry>> per_case;
  for (const auto& sc : cases) {
    const CaseRecord& r = sc.record;
    const std::string lobe(to_string(r.lobe));
    const fs::path rel = fs::path(r.case_id);
    fs::create_directories(dir / rel);
    ManifestEntry e;
    e.case_id = r.case_id;
    e.lobe = r.lobe;
    e.inflated_ply = rel / (lobe + "_inflated.ply");
    e.deflated_ply = rel / (lobe + "_deflated.ply");
    e.landmark_indices = sc.landmarks.full_indices;
    e.is_augmented = r.is_augmented;
    e.corner_hints = sc.corner_hints;
    e.contour = sc.contour;
    save_ply(r.inflated, dir / e.inflated_ply);
    save_ply(r.deflated, dir / *e.deflated_ply);
    all.push_back(e);
    // Inside case.json the paths are relative to the case directory.
    e.inflated_ply = e.inflated_ply.filename();
    e.deflated_ply = e.deflated_ply->filename();
    per_case[r.case_id].push_back(std::move(e));
  }
  for (const auto& [id, entries] : per_case) {
    write_text(dir / id / "case.json", manifest_json(entries, generator_json).dump(2) + "\n");
  }
  const fs::path path = dir / "manifest.json";
  write_text(path, manifest_json(all, generator_json).dump(2) + "\n");
  return path;
}

}  // namespace pneumodef
