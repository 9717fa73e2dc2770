#pragma once

// Embedding secret networks inside a larger stego network.
//
// Each secret owns a band of hidden nodes [row_offset, row_offset + D_s).
// Its layer k lands in stego layer start_layer + k as a dense rectangle:
//   * hidden rows use the band, except in the stego output layer where each
//     secret gets its own run of output rows;
//   * columns use the band, except in the stego input layer where each
//     secret gets its own run of input columns.
// A secret whose inputs do not fit the remaining stego input columns starts
// one layer deeper (start_layer = 1) and stores its input matrix inside the
// band of stego hidden layer 1. A secret that ends before the stego output
// layer stores its output matrix inside the band of a hidden layer.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "inrsteg/media.hpp"
#include "inrsteg/siren.hpp"
#include "inrsteg/train.hpp"

namespace inrsteg {

struct Rect {
    std::uint32_t row0 = 0;
    std::uint32_t col0 = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    friend bool operator==(const Rect&, const Rect&) = default;
};

/// Where one secret layer lives. Its bias occupies rows
/// [weight.row0, weight.row0 + weight.rows) of the stego bias vector.
struct LayerCell {
    std::uint32_t stego_layer = 0;
    Rect weight;
    friend bool operator==(const LayerCell&, const LayerCell&) = default;
};

struct SecretPlacement {
    SirenSpec spec;
    std::uint32_t row_offset = 0;
    std::uint32_t start_layer = 0;
    /// cells[k] holds secret layer k.
    std::vector<LayerCell> cells;
    friend bool operator==(const SecretPlacement&, const SecretPlacement&) = default;
};

struct StegoPlan {
    SirenSpec stego_spec;
    std::vector<SecretPlacement> placements;
    /// Padded hidden nodes divided by the summed secret widths.
    double padding_rate = 0.0;
};

struct PlanOptions {
    double padding_rate = 1.0;
    std::uint32_t hidden_layers = 5;
    float omega0 = 30.0f;
    /// First hidden node of the first secret band. Non-zero values place a
    /// single secret in the interior of the stego layers.
    std::uint32_t row_offset = 0;
    /// Explicit stego width; must hold row_offset + sum of secret widths.
    std::optional<std::uint32_t> width;
    /// Channels of the cover (image/video).
    std::size_t cover_channels = 3;
};

/// Throws PlanError when the secrets cannot be placed.
StegoPlan plan_stego(std::span<const SirenSpec> secrets, Modality cover, const PlanOptions& options);

/// Checks bounds, shapes, layer spans and pairwise disjointness of placements
/// against the stego spec. Throws PlanError on the first violation.
void validate_placements(const SirenSpec& stego, std::span<const SecretPlacement> placements);

/// Mask that is true exactly on the placement rectangles.
FreezeMask secret_mask(const SirenSpec& stego, std::span<const SecretPlacement> placements);

struct Allocation {
    WeightSet weights;
    FreezeMask mask;
};

/// Fresh SIREN-initialized stego weights with every secret copied into its
/// placement.
Allocation allocate(const StegoPlan& plan, std::span<const WeightSet> secrets, std::uint64_t init_seed);

/// Fits the stego network to the cover while keeping masked entries fixed.
FitResult hide(const SirenSpec& stego_spec, WeightSet stego, const FreezeMask& mask, const MediaTensor& cover,
               const TrainConfig& cfg);

/// Copies every placement back out into standalone secret weights.
std::vector<WeightSet> extract(const SirenSpec& stego_spec, const WeightSet& stego,
                               std::span<const SecretPlacement> placements);

/// What the recipient needs to render a revealed secret.
struct SecretMedia {
    Modality modality = Modality::image;
    std::vector<std::size_t> shape;
    ValueRange range;
    std::uint32_t sample_rate = 0;
    /// Lattice resolution used to render sdf secrets (shape = {res^3}).
    std::uint32_t sdf_resolution = 0;
    friend bool operator==(const SecretMedia&, const SecretMedia&) = default;
};

struct Recipe {
    static constexpr int kVersion = 1;
    int version = kVersion;
    SirenSpec stego_spec;
    std::vector<SecretPlacement> placements;
    std::vector<SecretMedia> media;

    /// Placement invariants plus one media entry per placement with matching dims.
    void validate() const;
};

std::vector<WeightSet> extract(const WeightSet& stego, const Recipe& recipe);

/// Renders a revealed secret according to its media metadata.
MediaTensor render_secret(const SirenSpec& spec, const WeightSet& ws, const SecretMedia& media);

}  // namespace inrsteg
