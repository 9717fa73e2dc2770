#pragma once

// Binary model files and JSON recipes.
//
// .inrw layout (little-endian):
//   "INRW" | u8 version = 1 | u32 I | u32 O | u32 n | u32 D | f32 omega0
//   | per layer l = 0..n: W^(l) row-major f32, then b^(l) f32
//
// .inrq (int8 weights) layout:
//   "INRQ" | u8 version = 1 | same spec fields
//   | per tensor (W0, b0, W1, b1, ...): f64 scale | i32 zero_point | int8 values

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "inrsteg/robustness.hpp"
#include "inrsteg/siren.hpp"
#include "inrsteg/steg.hpp"

namespace inrsteg {

inline constexpr std::size_t kModelHeaderSize = 4 + 1 + 4 * 4 + 4;

struct Model {
    SirenSpec spec;
    WeightSet weights;
};

std::vector<std::uint8_t> encode_model(const SirenSpec& spec, const WeightSet& ws);
/// Throws FormatError on bad magic, version, truncation, trailing bytes or
/// non-finite entries.
Model decode_model(std::span<const std::uint8_t> bytes);

void save_model(const SirenSpec& spec, const WeightSet& ws, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_quantized(const QuantizedModel& qm);
QuantizedModel decode_quantized(std::span<const std::uint8_t> bytes);
void save_quantized(const QuantizedModel& qm, const std::filesystem::path& path);
QuantizedModel load_quantized(const std::filesystem::path& path);

/// Pretty-printed JSON document; schema in docs/recipe.md.
std::string recipe_to_json(const Recipe& recipe);
/// Throws FormatError on schema violations and PlanError on inconsistent
/// placements.
Recipe recipe_from_json(std::string_view text);

void save_recipe(const Recipe& recipe, const std::filesystem::path& path);
Recipe load_recipe(const std::filesystem::path& path);

}  // namespace inrsteg
