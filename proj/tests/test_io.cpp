#include <cstring>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "json.hpp"
#include "pneumodef/errors.hpp"
#include "pneumodef/manifest.hpp"
#include "pneumodef/model_io.hpp"
#include "pneumodef/synthgen.hpp"
#include "test_util.hpp"

namespace pneumodef {
namespace {

std::vector<std::uint8_t> bytes(std::string_view s) { return {s.begin(), s.end()}; }

TEST(Base64, Rfc4648Vectors) {
  const std::pair<const char*, const char*> vectors[] = {
      {"", ""},         {"f", "Zg=="},         {"fo", "Zm8="},        {"foo", "Zm9v"},
      {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"},
  };
  for (const auto& [plain, encoded] : vectors) {
    EXPECT_EQ(base64_encode(bytes(plain)), encoded);
    EXPECT_EQ(base64_decode(encoded), bytes(plain));
  }
  EXPECT_THROW(base64_decode("Zm9"), FormatError);
  EXPECT_THROW(base64_decode("Zm9v!A=="), FormatError);
}

TEST(Base64, DoublesRoundTrip) {
  const std::vector<double> v = {0.0, -0.0, 1.0, -2.5, 1e-300, 6.02214076e23,
                                 std::numeric_limits<double>::denorm_min()};
  const auto back = decode_doubles(encode_doubles(v));
  ASSERT_EQ(back.size(), v.size());
  EXPECT_EQ(std::memcmp(back.data(), v.data(), v.size() * sizeof(double)), 0);
  // 1.0 in little-endian IEEE-754.
  EXPECT_EQ(encode_doubles(std::vector<double>{1.0}), "AAAAAAAA8D8=");
  EXPECT_THROW(decode_doubles("AAAA"), FormatError);
}

TEST(ModelIo, RoundTripIsExact) {
  const auto cases = generate_cohort(default_params(Lobe::lower, 1), 2);
  LandmarkConfig cfg = cases[0].landmarks;
  cfg.active_count = 3;
  const auto lm = select_landmarks(cfg);
  const SampleSet set = build_dataset({cases[0].record, cases[1].record}, lm, false);
  KernelModel m = fit(set.x, set.y, KernelHyperparams{1.0, 0.02, 1e-2}, FitOptions{FeatureScaling::landmark_blocks});
  m.landmark_count = 3;
  m.lobe = Lobe::lower;
  m.feature_order_tag = std::string(kFeatureOrderTag);

  testing::TempDir dir("model");
  save_model(m, dir.path() / "m.json");
  const KernelModel back = load_model(dir.path() / "m.json");
  EXPECT_EQ(back.hyper, m.hyper);
  EXPECT_TRUE(back.train_x == m.train_x);
  EXPECT_TRUE(back.weights == m.weights);
  EXPECT_TRUE(back.scaling.shift == m.scaling.shift);
  EXPECT_TRUE(back.scaling.scale == m.scaling.scale);
  EXPECT_EQ(back.landmark_count, 3);
  EXPECT_EQ(back.lobe, Lobe::lower);
  EXPECT_EQ(back.feature_order_tag, kFeatureOrderTag);

  const auto j = nlohmann::json::parse(model_to_json(m));
  EXPECT_EQ(j["N"], 20);
  EXPECT_EQ(j["M"], 3);
  EXPECT_EQ(j["lobe_label"], "lower");
  EXPECT_EQ(j["hyper"]["kb"], 0.02);

  const FeatureMatrix q = set.x.topRows(5);
  EXPECT_TRUE(predict_batch(back, q) == predict_batch(m, q));
  EXPECT_THROW(model_from_json("{\"hyper\": 3}"), FormatError);
  EXPECT_THROW(load_model(dir.path() / "none.json"), IoError);
}

TEST(Manifest, WriteCohortAndLoad) {
  testing::TempDir dir("manifest");
  const auto cohort = generate_cohort(default_params(Lobe::upper, 5), 3);
  const auto path = write_cohort(cohort, dir.path(), R"({"seed": 5})");
  EXPECT_EQ(path, dir.path() / "manifest.json");
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "case02" / "upper_deflated.ply"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "case02" / "case.json"));

  const Manifest m = read_manifest(path);
  ASSERT_EQ(m.entries.size(), 3u);
  EXPECT_EQ(m.entries[1].case_id, "case02");
  EXPECT_EQ(m.entries[1].landmark_indices, cohort[1].landmarks.full_indices);
  EXPECT_FALSE(m.entries[1].is_augmented);
  ASSERT_TRUE(m.entries[1].corner_hints.has_value());
  EXPECT_EQ(m.entries[1].contour, cohort[1].contour);
  EXPECT_EQ(nlohmann::json::parse(m.generator_json)["seed"], 5);

  const auto loaded = load_cases(m, Lobe::upper);
  ASSERT_EQ(loaded.size(), 3u);
  EXPECT_EQ(loaded[2].record.deflated.vertices(), cohort[2].record.deflated.vertices());
  EXPECT_EQ(loaded[2].record.inflated.lobe(), Lobe::upper);
  EXPECT_NEAR(loaded[2].record.volume_ratio, 0.6, 1e-4);
  EXPECT_TRUE(load_cases(m, Lobe::lower).empty());

  // Rewriting the manifest elsewhere keeps the mesh paths resolvable.
  Manifest copy = m;
  write_manifest(copy, dir.path() / "again.json");
  EXPECT_EQ(read_manifest(dir.path() / "again.json").entries.size(), 3u);
}

TEST(Manifest, Errors) {
  testing::TempDir dir("manifest");
  EXPECT_THROW(read_manifest(dir.path() / "missing.json"), IoError);
  {
    std::ofstream(dir.path() / "bad.json") << "{not json";
  }
  EXPECT_THROW(read_manifest(dir.path() / "bad.json"), FormatError);
  {
    std::ofstream(dir.path() / "schema.json") << R"({"cases": [{"case_id": "a"}]})";
  }
  EXPECT_THROW(read_manifest(dir.path() / "schema.json"), FormatError);

  const auto cohort = generate_cohort(default_params(Lobe::upper, 5), 1);
  Manifest m = read_manifest(write_cohort(cohort, dir.path() / "c"));
  m.entries[0].deflated_ply.reset();
  EXPECT_THROW(load_cases(m, Lobe::upper), FormatError);
}

}  // namespace
}  // namespace pneumodef
