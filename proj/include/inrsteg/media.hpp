#pragma once

// Media containers, file codecs (Netpbm, WAV PCM16, PPM frame directories,
// .sdfs samples) and the mapping between media and coordinate datasets.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "inrsteg/siren.hpp"

namespace inrsteg {

enum class Modality { image, audio, video, sdf };

std::string_view to_string(Modality m);
/// Throws ArgumentError for unknown names.
Modality parse_modality(std::string_view name);

/// Input and output dims of the network that represents a modality.
/// `channels` only matters for image and video (1 for grayscale, 3 for RGB).
std::uint32_t modality_in_dim(Modality m);
std::uint32_t modality_out_dim(Modality m, std::size_t channels = 3);

struct ValueRange {
    double lo = 0.0;
    double hi = 0.0;
    friend bool operator==(const ValueRange&, const ValueRange&) = default;
};

inline constexpr ValueRange kPixelRange{0.0, 255.0};
inline constexpr ValueRange kPcm16Range{-32768.0, 32767.0};

/// Decoded media in source units.
///
/// Shapes: image {H, W, C}, audio {N, 1}, video {T, H, W, C}, sdf {K}.
/// For sdf, `values` holds the K signed distances and `points` the K x,y,z
/// sample positions.
struct MediaTensor {
    Modality modality = Modality::image;
    std::vector<std::size_t> shape;
    std::vector<float> values;
    ValueRange range;
    std::vector<float> points;
    std::uint32_t sample_rate = 0;

    std::size_t element_count() const;
    /// Channel count for image/video; 1 otherwise.
    std::size_t channels() const;
    void validate() const;
};

MediaTensor load_media(const std::filesystem::path& path, Modality modality);
void save_media(const MediaTensor& tensor, const std::filesystem::path& path);

// Individual codecs, exposed for tests and tools.
MediaTensor decode_netpbm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_netpbm(const MediaTensor& image);
MediaTensor decode_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_wav(const MediaTensor& audio);
MediaTensor decode_sdfs(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_sdfs(const MediaTensor& sdf);

/// Clamp to [lo, hi] then round to nearest (ties away from zero).
std::int32_t quantize_sample(double v, double lo, double hi);

/// Source units -> network target in [-1, 1].
float normalize_value(Modality m, double v);
/// Network output -> source units, clamped to the range for bounded formats.
double denormalize_value(Modality m, double v, const ValueRange& range);

/// Evenly spaced coordinates over [-1, 1]; a single-element axis maps to 0.
std::vector<float> axis_coords(std::size_t length);

/// Row-major coordinate grid for a modality/shape. Axis order is (t), y, x
/// for image and video. Not defined for sdf (samples carry their own points).
std::vector<float> coordinate_grid(Modality m, std::span<const std::size_t> shape);

CoordDataset coord_dataset(const MediaTensor& tensor);

/// Evaluates the network on the media grid and maps outputs back to source
/// units. For sdf, `sdf_points` supplies the query positions.
MediaTensor reconstruct(const SirenSpec& spec, const WeightSet& ws, Modality modality,
                        std::span<const std::size_t> shape, const ValueRange& range,
                        std::span<const float> sdf_points = {});

/// Regular res^3 lattice over [-1,1]^3, x fastest.
std::vector<float> sdf_lattice(std::size_t res);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace inrsteg
