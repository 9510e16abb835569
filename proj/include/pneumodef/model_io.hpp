#pragma once

// Trained kernel models as JSON. Matrices are stored row-major as base64 of
// little-endian IEEE-754 doubles.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pneumodef/krr.hpp"

namespace pneumodef {

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws FormatError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(std::string_view text);

std::string model_to_json(const KernelModel& model);
KernelModel model_from_json(std::string_view text);

void save_model(const KernelModel& model, const std::filesystem::path& path);
KernelModel load_model(const std::filesystem::path& path);

}  // namespace pneumodef
