#pragma once

// JSON case manifests. Paths inside a manifest are relative to the
// manifest's directory.
//
//   {"cases": [{"case_id": "case01", "lobe": "upper",
//               "inflated_ply": "case01/upper_inflated.ply",
//               "deflated_ply": "case01/upper_deflated.ply",
//               "landmark_indices": [12 ints, landmark numbers 1..12],
//               "is_augmented": false,
//               "corner_hints": [[x,y,z] x3], "contour": [ints]}, ...],
//    "generator": {...}}

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pneumodef/dataset.hpp"
#include "pneumodef/landmarks.hpp"
#include "pneumodef/synthgen.hpp"

namespace pneumodef {

struct ManifestEntry {
  std::string case_id;
  Lobe lobe = Lobe::upper;
  std::filesystem::path inflated_ply;
  std::optional<std::filesystem::path> deflated_ply;
  std::array<int, kLandmarkCount> landmark_indices{};
  bool is_augmented = false;
  std::optional<std::array<Vec3, 3>> corner_hints;
  std::vector<int> contour;
};

struct Manifest {
  std::filesystem::path base_dir;  // directory the relative paths resolve against
  std::vector<ManifestEntry> entries;
  std::string generator_json = "{}";  // free-form provenance block, kept verbatim
};

// Throws IoError when the file cannot be read, FormatError on schema errors.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

struct LoadedCase {
  CaseRecord record;
  std::array<int, kLandmarkCount> landmark_indices{};
};

// Loads the meshes of every entry of one lobe, in manifest order. Throws
// FormatError when an entry lacks a deflated mesh.
std::vector<LoadedCase> load_cases(const Manifest& manifest, Lobe lobe);

// Writes <dir>/<case_id>/{upper,lower}_{inflated,deflated}.ply, a case.json
// per case directory and <dir>/manifest.json. Returns the manifest path.
std::filesystem::path write_cohort(const std::vector<SyntheticCase>& cases,
                                   const std::filesystem::path& dir,
                                   const std::string& generator_json = "{}");

}  // namespace pneumodef
