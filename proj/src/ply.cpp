// ASCII PLY reader/writer for triangle meshes.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pneumodef/errors.hpp"
#include "pneumodef/mesh.hpp"

namespace pneumodef {
namespace {

struct Property {
  std::string name;
  bool is_list = false;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

bool is_scalar_type(const std::string& t) {
  static const char* kTypes[] = {"char",  "uchar",  "short",  "ushort", "int",
                                 "uint",  "float",  "double", "int8",   "uint8",
                                 "int16", "uint16", "int32",  "uint32", "float32",
                                 "float64"};
  for (const char* k : kTypes) {
    if (t == k) return true;
  }
  return false;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

double parse_number(const std::string& token, std::size_t line) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw FormatError("invalid number '" + token + "'", line);
  }
  return value;
}

std::vector<Element> read_header(LineReader& reader) {
  std::string line;
  if (!reader.next(line) || line != "ply") {
    throw FormatError("missing 'ply' magic", reader.line_no());
  }
  std::vector<Element> elements;
  bool saw_format = false;
  while (true) {
    if (!reader.next(line)) throw FormatError("unterminated header", reader.line_no());
    std::istringstream ss(line);
    std::string keyword;
    ss >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "end_header") break;
    if (keyword == "format") {
      std::string fmt, version;
      ss >> fmt >> version;
      if (fmt != "ascii") {
        throw FormatError("only ASCII PLY is supported, got '" + fmt + "'", reader.line_no());
      }
      saw_format = true;
    } else if (keyword == "element") {
      Element e;
      long long count = -1;
      if (!(ss >> e.name >> count) || count < 0) {
        throw FormatError("malformed element declaration", reader.line_no());
      }
      e.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (elements.empty()) throw FormatError("property before element", reader.line_no());
      Property p;
      std::string type;
      ss >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ss >> count_type >> item_type;
        if (!is_scalar_type(count_type) || !is_scalar_type(item_type)) {
          throw FormatError("bad list property types", reader.line_no());
        }
        p.is_list = true;
      } else if (!is_scalar_type(type)) {
        throw FormatError("unknown property type '" + type + "'", reader.line_no());
      }
      ss >> p.name;
      if (p.name.empty()) throw FormatError("property without a name", reader.line_no());
      elements.back().properties.push_back(std::move(p));
    } else {
      throw FormatError("unexpected header keyword '" + keyword + "'", reader.line_no());
    }
  }
  if (!saw_format) throw FormatError("missing format line", reader.line_no());
  return elements;
}

}  // namespace

Mesh load_ply(const std::filesystem::path& path, Lobe lobe) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  LineReader reader(in);
  const auto elements = read_header(reader);

  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  bool saw_vertex = false;
  bool saw_face = false;
  std::string line;
  std::vector<std::string> tokens;

  for (const auto& e : elements) {
    int ix = -1, iy = -1, iz = -1, iface = -1;
    for (int k = 0; k < static_cast<int>(e.properties.size()); ++k) {
      const auto& p = e.properties[static_cast<std::size_t>(k)];
      if (p.name == "x") ix = k;
      if (p.name == "y") iy = k;
      if (p.name == "z") iz = k;
      if (p.is_list && (p.name == "vertex_indices" || p.name == "vertex_index")) iface = k;
    }
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    if (is_vertex) {
      if (ix < 0 || iy < 0 || iz < 0) {
        throw FormatError("vertex element lacks x/y/z", reader.line_no());
      }
      saw_vertex = true;
      vertices.reserve(e.count);
    }
    if (is_face) {
      if (iface < 0) throw FormatError("face element lacks vertex_indices", reader.line_no());
      saw_face = true;
      triangles.reserve(e.count);
    }

    for (std::size_t r = 0; r < e.count; ++r) {
      if (!reader.next(line)) throw FormatError("unexpected end of file", reader.line_no());
      tokens.clear();
      std::istringstream ss(line);
      for (std::string tok; ss >> tok;) tokens.push_back(std::move(tok));

      // Walk the properties in order; lists consume count+1 tokens.
      std::size_t pos = 0;
      Vec3 v = Vec3::Zero();
      for (int k = 0; k < static_cast<int>(e.properties.size()); ++k) {
        const auto& p = e.properties[static_cast<std::size_t>(k)];
        if (pos >= tokens.size()) throw FormatError("too few values", reader.line_no());
        if (!p.is_list) {
          if (is_vertex && (k == ix || k == iy || k == iz)) {
            const double value = parse_number(tokens[pos], reader.line_no());
            v[k == ix ? 0 : (k == iy ? 1 : 2)] = value;
          }
          ++pos;
          continue;
        }
        const double count_d = parse_number(tokens[pos], reader.line_no());
        const auto count = static_cast<long long>(count_d);
        if (count < 0 || static_cast<double>(count) != count_d) {
          throw FormatError("bad list count", reader.line_no());
        }
        if (pos + 1 + static_cast<std::size_t>(count) > tokens.size()) {
          throw FormatError("list shorter than its count", reader.line_no());
        }
        if (is_face && k == iface) {
          if (count != 3) {
            throw UnsupportedFaceError(
                "face with " + std::to_string(count) + " vertices; only triangles are supported",
                reader.line_no());
          }
          Triangle t{};
          for (int j = 0; j < 3; ++j) {
            const double idx = parse_number(tokens[pos + 1 + static_cast<std::size_t>(j)],
                                            reader.line_no());
            t[static_cast<std::size_t>(j)] = static_cast<int>(idx);
            if (static_cast<double>(t[static_cast<std::size_t>(j)]) != idx) {
              throw FormatError("non-integer vertex index", reader.line_no());
            }
          }
          triangles.push_back(t);
        }
        pos += 1 + static_cast<std::size_t>(count);
      }
      if (pos != tokens.size()) throw FormatError("too many values", reader.line_no());
      if (is_vertex) vertices.push_back(v);
    }
  }
  if (!saw_vertex || !saw_face) throw FormatError("PLY needs vertex and face elements", 0);
  try {
    return Mesh(std::move(vertices), std::move(triangles), lobe);
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("invalid mesh: ") + e.what(), 0);
  }
}

void save_ply(const Mesh& mesh, const std::filesystem::path& path,
              std::optional<std::span<const double>> vertex_scalars) {
  if (vertex_scalars && vertex_scalars->size() != mesh.vertex_count()) {
    throw ArgumentError("vertex scalar count does not match vertex count");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << mesh.vertex_count() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (vertex_scalars) {
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  out << "element face " << mesh.triangles().size() << "\n";
  out << "property list uchar int vertex_indices\nend_header\n";

  // %.17g round-trips doubles exactly.
  char buf[128];
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
    const auto& v = mesh.vertices()[i];
    int n = std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", v.x(), v.y(), v.z());
    out.write(buf, n);
    if (vertex_scalars) {
      const auto c = scalar_to_color((*vertex_scalars)[i]);
      n = std::snprintf(buf, sizeof buf, " %u %u %u", c[0], c[1], c[2]);
      out.write(buf, n);
    }
    out << '\n';
  }
  for (const auto& t : mesh.triangles()) {
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace pneumodef
