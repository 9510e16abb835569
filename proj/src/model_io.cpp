#include "pneumodef/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pneumodef/errors.hpp"

namespace pneumodef {

using nlohmann::json;

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

template <typename Matrix>
json matrix_json(const Matrix& m) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor rm = m;
  return {{"rows", rm.rows()},
          {"cols", rm.cols()},
          {"data", encode_doubles(std::span<const double>(rm.data(), static_cast<std::size_t>(rm.size())))}};
}

FeatureMatrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const std::vector<double> data = decode_doubles(j.at("data").get<std::string>());
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw FormatError("model matrix has " + std::to_string(data.size()) + " values, expected " +
                          std::to_string(rows * cols),
                      0);
  }
  return Eigen::Map<const FeatureMatrix>(data.data(), rows, cols);
}

json row_vector_json(const Eigen::RowVectorXd& v) {
  return encode_doubles(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t v = bytes[i] << 16;
    if (rest == 2) v |= bytes[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw FormatError("base64 length is not a multiple of 4", 0);
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      int d = 0;
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        ++pad;
      } else {
        if (pad > 0) throw FormatError("base64 padding in the middle of a block", 0);
        d = decode_char(c);
        if (d < 0) throw FormatError("invalid base64 character", 0);
      }
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::string encode_doubles(std::span<const double> values) {
  std::vector<std::uint8_t> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return base64_encode(bytes);
}

std::vector<double> decode_doubles(std::string_view text) {
  const std::vector<std::uint8_t> bytes = base64_decode(text);
  if (bytes.size() % 8 != 0) throw FormatError("encoded array is not a whole number of doubles", 0);
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

std::string model_to_json(const KernelModel& model) {
  json j;
  j["hyper"] = {{"ka", model.hyper.ka}, {"kb", model.hyper.kb}, {"lambda", model.hyper.lambda}};
  j["N"] = model.input_dim();
  j["M"] = model.output_dim();
  j["landmark_count"] = model.landmark_count;
  j["feature_order_tag"] = model.feature_order_tag;
  j["lobe_label"] = std::string(to_string(model.lobe));
  if (model.scaling.is_identity()) {
    j["scaling"] = nullptr;
  } else {
    j["scaling"] = {{"shift", row_vector_json(model.scaling.shift)},
                    {"scale", row_vector_json(model.scaling.scale)}};
  }
  j["train_x"] = matrix_json(model.train_x);
  j["weights"] = matrix_json(model.weights);
  return j.dump(2) + "\n";
}

KernelModel model_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    KernelModel m;
    m.hyper.ka = j.at("hyper").at("ka").get<double>();
    m.hyper.kb = j.at("hyper").at("kb").get<double>();
    m.hyper.lambda = j.at("hyper").at("lambda").get<double>();
    m.hyper.validate();
    m.landmark_count = j.at("landmark_count").get<int>();
    m.feature_order_tag = j.at("feature_order_tag").get<std::string>();
    m.lobe = lobe_from_string(j.at("lobe_label").get<std::string>());
    m.train_x = matrix_from_json(j.at("train_x"));
    m.weights = matrix_from_json(j.at("weights"));
    const auto n = j.at("N").get<Eigen::Index>();
    const auto mm = j.at("M").get<Eigen::Index>();
    if (m.train_x.cols() != n || m.weights.cols() != mm || m.weights.rows() != m.train_x.rows()) {
      throw FormatError("model arrays disagree with N, M or each other", 0);
    }
    if (j.contains("scaling") && !j["scaling"].is_null()) {
      const auto shift = decode_doubles(j["scaling"].at("shift").get<std::string>());
      const auto scale = decode_doubles(j["scaling"].at("scale").get<std::string>());
      if (static_cast<Eigen::Index>(shift.size()) != n || static_cast<Eigen::Index>(scale.size()) != n) {
        throw FormatError("model scaling has the wrong length", 0);
      }
      m.scaling.shift = Eigen::Map<const Eigen::RowVectorXd>(shift.data(), n);
      m.scaling.scale = Eigen::Map<const Eigen::RowVectorXd>(scale.data(), n);
    }
    return m;
  } catch (const json::exception& ex) {
    throw FormatError(std::string("model file: ") + ex.what(), 0);
  } catch (const ArgumentError& ex) {
    throw FormatError(std::string("model file: ") + ex.what(), 0);
  }
}

void save_model(const KernelModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << model_to_json(model);
  if (!out) throw IoError("write failed for " + path.string());
}

KernelModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace pneumodef
