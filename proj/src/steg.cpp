#include "inrsteg/steg.hpp"

#include <cmath>
#include <string>

namespace inrsteg {

namespace {

std::string secret_label(std::size_t s) { return "secret " + std::to_string(s); }

}  // namespace

StegoPlan plan_stego(std::span<const SirenSpec> secrets, Modality cover, const PlanOptions& options)
{
    if (secrets.empty()) throw PlanError("need at least one secret network");
    if (!(options.padding_rate >= 0.0) || !std::isfinite(options.padding_rate))
        throw PlanError("padding rate must be >= 0");
    if (secrets.size() == 1 && !options.width && options.padding_rate <= 0.0)
        throw PlanError("a single secret needs a positive padding rate to leave trainable capacity");

    std::uint64_t sum_width = 0;
    for (const auto& s : secrets) {
        s.validate();
        sum_width += s.width;
    }
    // The epsilon keeps e.g. 0.3 * 10 from rounding up to 4.
    const auto padding = static_cast<std::uint64_t>(
        std::ceil(options.padding_rate * static_cast<double>(sum_width) - 1e-9));
    std::uint64_t width = sum_width + padding;
    if (options.width) {
        if (std::uint64_t{options.row_offset} + sum_width > *options.width)
            throw PlanError("secret widths (" + std::to_string(sum_width) + ") plus offset exceed the requested width " +
                            std::to_string(*options.width));
        width = *options.width;
    }
    if (std::uint64_t{options.row_offset} + sum_width > width)
        throw PlanError("row offset " + std::to_string(options.row_offset) + " leaves no room for the secret bands");

    StegoPlan plan;
    plan.stego_spec.in_dim = modality_in_dim(cover);
    plan.stego_spec.out_dim = modality_out_dim(cover, options.cover_channels);
    plan.stego_spec.hidden_layers = options.hidden_layers;
    plan.stego_spec.width = static_cast<std::uint32_t>(width);
    plan.stego_spec.omega0 = options.omega0;
    plan.stego_spec.validate();
    plan.padding_rate = static_cast<double>(width - sum_width) / static_cast<double>(sum_width);

    const SirenSpec& stego = plan.stego_spec;
    const std::uint32_t n = stego.hidden_layers;
    std::uint32_t in_used = 0, out_used = 0;
    std::uint32_t band = options.row_offset;

    for (std::size_t s = 0; s < secrets.size(); ++s) {
        const SirenSpec& sec = secrets[s];
        SecretPlacement p;
        p.spec = sec;
        p.row_offset = band;
        band += sec.width;

        std::uint32_t in_col = 0;
        if (sec.in_dim <= stego.in_dim - in_used) {
            p.start_layer = 0;
            in_col = in_used;
            in_used += sec.in_dim;
        } else {
            p.start_layer = 1;
            if (sec.in_dim > sec.width)
                throw PlanError(secret_label(s) + ": input dim " + std::to_string(sec.in_dim) +
                                " exceeds its width and cannot be embedded in a hidden layer");
        }

        const std::uint32_t end = p.start_layer + sec.hidden_layers;
        if (end > n)
            throw PlanError(secret_label(s) + " spans " + std::to_string(sec.hidden_layers + 1) +
                            " layers from stego layer " + std::to_string(p.start_layer) + " but the stego net has only " +
                            std::to_string(n + 1));
        std::uint32_t out_row = 0;
        if (end == n) {
            if (sec.out_dim > stego.out_dim - out_used)
                throw PlanError(secret_label(s) + ": stego output rows exhausted; use a secret with one fewer hidden layer");
            out_row = out_used;
            out_used += sec.out_dim;
        } else if (sec.out_dim > sec.width) {
            throw PlanError(secret_label(s) + ": output dim exceeds its width and cannot be embedded in a hidden layer");
        }

        for (std::uint32_t k = 0; k <= sec.hidden_layers; ++k) {
            const std::uint32_t layer = p.start_layer + k;
            LayerCell cell;
            cell.stego_layer = layer;
            cell.weight.rows = static_cast<std::uint32_t>(sec.rows(k));
            cell.weight.cols = static_cast<std::uint32_t>(sec.cols(k));
            cell.weight.row0 = layer == n ? out_row : p.row_offset;
            cell.weight.col0 = layer == 0 ? in_col : p.row_offset;
            p.cells.push_back(cell);
        }
        plan.placements.push_back(std::move(p));
    }
    validate_placements(stego, plan.placements);
    return plan;
}

void validate_placements(const SirenSpec& stego, std::span<const SecretPlacement> placements)
{
    stego.validate();
    FreezeMask claimed = FreezeMask::zeros(stego);
    for (std::size_t s = 0; s < placements.size(); ++s) {
        const auto& p = placements[s];
        p.spec.validate();
        if (std::uint64_t{p.row_offset} + p.spec.width > stego.width)
            throw PlanError(secret_label(s) + ": band [" + std::to_string(p.row_offset) + ", " +
                            std::to_string(p.row_offset + p.spec.width) + ") exceeds stego width " +
                            std::to_string(stego.width));
        if (p.cells.size() != p.spec.layer_count())
            throw PlanError(secret_label(s) + ": expected " + std::to_string(p.spec.layer_count()) + " layer cells");
        if (std::uint64_t{p.start_layer} + p.spec.hidden_layers > stego.hidden_layers)
            throw PlanError(secret_label(s) + ": layer span exceeds stego depth");
        for (std::size_t k = 0; k < p.cells.size(); ++k) {
            const auto& cell = p.cells[k];
            const auto& r = cell.weight;
            if (cell.stego_layer != p.start_layer + k)
                throw PlanError(secret_label(s) + ": layer cells are not consecutive from the start layer");
            if (r.rows != p.spec.rows(k) || r.cols != p.spec.cols(k))
                throw PlanError(secret_label(s) + ": cell " + std::to_string(k) + " does not match the secret layer shape");
            const std::size_t L = cell.stego_layer;
            if (std::uint64_t{r.row0} + r.rows > stego.rows(L) || std::uint64_t{r.col0} + r.cols > stego.cols(L))
                throw PlanError(secret_label(s) + ": cell " + std::to_string(k) + " falls outside stego layer " +
                                std::to_string(L));
            auto& m = claimed.layers[L];
            for (std::uint32_t i = 0; i < r.rows; ++i) {
                for (std::uint32_t j = 0; j < r.cols; ++j) {
                    auto& flag = m.w(r.row0 + i, r.col0 + j);
                    if (flag) throw PlanError("placements overlap in stego layer " + std::to_string(L));
                    flag = 1;
                }
                auto& bflag = m.bias[r.row0 + i];
                if (bflag) throw PlanError("placements overlap in stego bias " + std::to_string(L));
                bflag = 1;
            }
        }
    }
}

FreezeMask secret_mask(const SirenSpec& stego, std::span<const SecretPlacement> placements)
{
    FreezeMask mask = FreezeMask::zeros(stego);
    for (const auto& p : placements) {
        for (const auto& cell : p.cells) {
            auto& m = mask.layers[cell.stego_layer];
            const auto& r = cell.weight;
            for (std::uint32_t i = 0; i < r.rows; ++i) {
                for (std::uint32_t j = 0; j < r.cols; ++j) m.w(r.row0 + i, r.col0 + j) = 1;
                m.bias[r.row0 + i] = 1;
            }
        }
    }
    return mask;
}

Allocation allocate(const StegoPlan& plan, std::span<const WeightSet> secrets, std::uint64_t init_seed)
{
    if (secrets.size() != plan.placements.size())
        throw ShapeError("plan has " + std::to_string(plan.placements.size()) + " placements but " +
                         std::to_string(secrets.size()) + " secret weight sets were given");
    validate_placements(plan.stego_spec, plan.placements);
    Allocation out{init_siren(plan.stego_spec, init_seed), secret_mask(plan.stego_spec, plan.placements)};
    for (std::size_t s = 0; s < secrets.size(); ++s) {
        const auto& p = plan.placements[s];
        if (!secrets[s].conforms(p.spec)) throw ShapeError(secret_label(s) + " weights do not match its placement spec");
        for (std::size_t k = 0; k < p.cells.size(); ++k) {
            const auto& src = secrets[s].layers[k];
            const auto& r = p.cells[k].weight;
            auto& dst = out.weights.layers[p.cells[k].stego_layer];
            for (std::uint32_t i = 0; i < r.rows; ++i) {
                for (std::uint32_t j = 0; j < r.cols; ++j) dst.w(r.row0 + i, r.col0 + j) = src.w(i, j);
                dst.bias[r.row0 + i] = src.bias[i];
            }
        }
    }
    return out;
}

FitResult hide(const SirenSpec& stego_spec, WeightSet stego, const FreezeMask& mask, const MediaTensor& cover,
               const TrainConfig& cfg)
{
    if (stego_spec.in_dim != modality_in_dim(cover.modality) ||
        stego_spec.out_dim != modality_out_dim(cover.modality, cover.channels()))
        throw ShapeError("stego network dims do not match the cover modality");
    const CoordDataset data = coord_dataset(cover);
    return fit(stego_spec, std::move(stego), data, cfg, &mask);
}

std::vector<WeightSet> extract(const SirenSpec& stego_spec, const WeightSet& stego,
                               std::span<const SecretPlacement> placements)
{
    if (!stego.conforms(stego_spec)) throw ShapeError("stego weights do not match the recipe's stego spec");
    validate_placements(stego_spec, placements);
    std::vector<WeightSet> out;
    out.reserve(placements.size());
    for (const auto& p : placements) {
        WeightSet ws = WeightSet::zeros(p.spec);
        for (std::size_t k = 0; k < p.cells.size(); ++k) {
            const auto& r = p.cells[k].weight;
            const auto& src = stego.layers[p.cells[k].stego_layer];
            auto& dst = ws.layers[k];
            for (std::uint32_t i = 0; i < r.rows; ++i) {
                for (std::uint32_t j = 0; j < r.cols; ++j) dst.w(i, j) = src.w(r.row0 + i, r.col0 + j);
                dst.bias[i] = src.bias[r.row0 + i];
            }
        }
        out.push_back(std::move(ws));
    }
    return out;
}

std::vector<WeightSet> extract(const WeightSet& stego, const Recipe& recipe)
{
    return extract(recipe.stego_spec, stego, recipe.placements);
}

void Recipe::validate() const
{
    if (version != kVersion) throw PlanError("unsupported recipe version " + std::to_string(version));
    validate_placements(stego_spec, placements);
    if (media.size() != placements.size()) throw PlanError("recipe needs one media entry per placement");
    for (std::size_t s = 0; s < media.size(); ++s) {
        const auto& m = media[s];
        const auto& spec = placements[s].spec;
        const std::size_t channels = (m.modality == Modality::image || m.modality == Modality::video) && !m.shape.empty()
                                         ? m.shape.back()
                                         : 1;
        if (spec.in_dim != modality_in_dim(m.modality) || spec.out_dim != modality_out_dim(m.modality, channels))
            throw PlanError(secret_label(s) + ": network dims do not match its media modality");
        if (m.modality == Modality::sdf && m.sdf_resolution == 0)
            throw PlanError(secret_label(s) + ": sdf media needs a render resolution");
    }
}

MediaTensor render_secret(const SirenSpec& spec, const WeightSet& ws, const SecretMedia& media)
{
    if (media.modality == Modality::sdf) {
        const std::size_t res = media.sdf_resolution;
        const auto pts = sdf_lattice(res);
        const std::size_t k = res * res * res;
        return reconstruct(spec, ws, Modality::sdf, std::span<const std::size_t>(&k, 1), media.range, pts);
    }
    MediaTensor t = reconstruct(spec, ws, media.modality, media.shape, media.range);
    t.sample_rate = media.sample_rate;
    return t;
}

}  // namespace inrsteg
