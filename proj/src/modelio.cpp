#include "inrsteg/modelio.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "json.hpp"

namespace inrsteg {

namespace {

using nlohmann::json;

constexpr std::uint8_t kVersion = 1;
constexpr std::uint32_t kMaxDim = 1u << 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t pos)
{
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[pos + static_cast<std::size_t>(i)];
    return v;
}

std::uint64_t get_u64(std::span<const std::uint8_t> b, std::size_t pos)
{
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[pos + static_cast<std::size_t>(i)];
    return v;
}

void put_header(std::vector<std::uint8_t>& out, const char* magic, const SirenSpec& spec)
{
    out.insert(out.end(), magic, magic + 4);
    out.push_back(kVersion);
    put_u32(out, spec.in_dim);
    put_u32(out, spec.out_dim);
    put_u32(out, spec.hidden_layers);
    put_u32(out, spec.width);
    put_u32(out, std::bit_cast<std::uint32_t>(spec.omega0));
}

SirenSpec read_header(std::span<const std::uint8_t> b, const char* magic, const char* kind)
{
    if (b.size() < 4 || std::memcmp(b.data(), magic, 4) != 0)
        throw FormatError(std::string("bad magic: not an ") + kind + " file");
    if (b.size() < kModelHeaderSize)
        throw FormatError(std::string("truncated ") + kind + " header: expected " + std::to_string(kModelHeaderSize) +
                          " bytes, got " + std::to_string(b.size()));
    if (b[4] != kVersion)
        throw FormatError(std::string(kind) + " version mismatch: file has " + std::to_string(b[4]) + ", reader supports " +
                          std::to_string(kVersion));
    SirenSpec spec;
    spec.in_dim = get_u32(b, 5);
    spec.out_dim = get_u32(b, 9);
    spec.hidden_layers = get_u32(b, 13);
    spec.width = get_u32(b, 17);
    spec.omega0 = std::bit_cast<float>(get_u32(b, 21));
    if (spec.in_dim > kMaxDim || spec.out_dim > kMaxDim || spec.width > kMaxDim || spec.hidden_layers > kMaxDim)
        throw FormatError(std::string(kind) + " header has implausible dimensions");
    try {
        spec.validate();
    } catch (const ArgumentError& e) {
        throw FormatError(std::string(kind) + " header: " + e.what());
    }
    return spec;
}

json spec_json(const SirenSpec& s)
{
    return {{"in_dim", s.in_dim}, {"out_dim", s.out_dim}, {"hidden_layers", s.hidden_layers},
            {"width", s.width}, {"omega0", s.omega0}};
}

SirenSpec spec_from(const json& j)
{
    SirenSpec s;
    s.in_dim = j.at("in_dim").get<std::uint32_t>();
    s.out_dim = j.at("out_dim").get<std::uint32_t>();
    s.hidden_layers = j.at("hidden_layers").get<std::uint32_t>();
    s.width = j.at("width").get<std::uint32_t>();
    s.omega0 = j.at("omega0").get<float>();
    s.validate();
    return s;
}

}  // namespace

std::vector<std::uint8_t> encode_model(const SirenSpec& spec, const WeightSet& ws)
{
    if (!ws.conforms(spec)) throw ShapeError("weight set does not conform to the network spec");
    std::vector<std::uint8_t> out;
    out.reserve(kModelHeaderSize + 4 * spec.parameter_count());
    put_header(out, "INRW", spec);
    ws.for_each([&](float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); });
    return out;
}

Model decode_model(std::span<const std::uint8_t> bytes)
{
    Model m;
    m.spec = read_header(bytes, "INRW", ".inrw");
    const std::size_t expected = kModelHeaderSize + 4 * m.spec.parameter_count();
    if (bytes.size() < expected)
        throw FormatError("truncated .inrw payload: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()));
    if (bytes.size() > expected)
        throw FormatError(".inrw file has trailing bytes: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()));
    m.weights = WeightSet::zeros(m.spec);
    std::size_t pos = kModelHeaderSize;
    bool finite = true;
    m.weights.for_each([&](float& v) {
        v = std::bit_cast<float>(get_u32(bytes, pos));
        finite = finite && std::isfinite(v);
        pos += 4;
    });
    if (!finite) throw FormatError(".inrw file contains non-finite weights");
    return m;
}

void save_model(const SirenSpec& spec, const WeightSet& ws, const std::filesystem::path& path)
{
    write_file(path, encode_model(spec, ws));
}

Model load_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

std::vector<std::uint8_t> encode_quantized(const QuantizedModel& qm)
{
    std::vector<std::uint8_t> out;
    put_header(out, "INRQ", qm.spec);
    for (const auto& t : qm.tensors) {
        put_u64(out, std::bit_cast<std::uint64_t>(t.scale));
        put_u32(out, static_cast<std::uint32_t>(t.zero_point));
        for (auto v : t.values) out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

QuantizedModel decode_quantized(std::span<const std::uint8_t> bytes)
{
    QuantizedModel qm;
    qm.spec = read_header(bytes, "INRQ", ".inrq");
    std::size_t pos = kModelHeaderSize;
    for (std::size_t l = 0; l < qm.spec.layer_count(); ++l) {
        for (const std::size_t count : {qm.spec.rows(l) * qm.spec.cols(l), qm.spec.rows(l)}) {
            if (bytes.size() < pos + 12 + count)
                throw FormatError("truncated .inrq payload at tensor " + std::to_string(qm.tensors.size()));
            QuantizedTensor t;
            t.scale = std::bit_cast<double>(get_u64(bytes, pos));
            t.zero_point = static_cast<std::int32_t>(get_u32(bytes, pos + 8));
            pos += 12;
            if (!(t.scale > 0.0) || !std::isfinite(t.scale)) throw FormatError(".inrq tensor has an invalid scale");
            t.values.resize(count);
            for (std::size_t i = 0; i < count; ++i) t.values[i] = static_cast<std::int8_t>(bytes[pos + i]);
            pos += count;
            qm.tensors.push_back(std::move(t));
        }
    }
    if (pos != bytes.size()) throw FormatError(".inrq file has trailing bytes");
    return qm;
}

void save_quantized(const QuantizedModel& qm, const std::filesystem::path& path)
{
    write_file(path, encode_quantized(qm));
}

QuantizedModel load_quantized(const std::filesystem::path& path) { return decode_quantized(read_file(path)); }

std::string recipe_to_json(const Recipe& recipe)
{
    json secrets = json::array();
    for (std::size_t s = 0; s < recipe.placements.size(); ++s) {
        const auto& p = recipe.placements[s];
        json cells = json::array();
        for (const auto& c : p.cells)
            cells.push_back({{"stego_layer", c.stego_layer}, {"row0", c.weight.row0}, {"col0", c.weight.col0},
                             {"rows", c.weight.rows}, {"cols", c.weight.cols}});
        json entry = {{"spec", spec_json(p.spec)}, {"row_offset", p.row_offset}, {"start_layer", p.start_layer},
                      {"cells", cells}};
        if (s < recipe.media.size()) {
            const auto& m = recipe.media[s];
            entry["media"] = {{"modality", std::string(to_string(m.modality))}, {"shape", m.shape},
                              {"range", {m.range.lo, m.range.hi}}, {"sample_rate", m.sample_rate},
                              {"sdf_resolution", m.sdf_resolution}};
        }
        secrets.push_back(std::move(entry));
    }
    const json doc = {{"format", "inrsteg-recipe"}, {"version", recipe.version},
                      {"stego", spec_json(recipe.stego_spec)}, {"secrets", secrets}};
    return doc.dump(2) + "\n";
}

Recipe recipe_from_json(std::string_view text)
{
    Recipe r;
    try {
        const json doc = json::parse(text);
        if (doc.at("format").get<std::string>() != "inrsteg-recipe") throw FormatError("not an inrsteg recipe");
        r.version = doc.at("version").get<int>();
        if (r.version != Recipe::kVersion) throw FormatError("unsupported recipe version " + std::to_string(r.version));
        r.stego_spec = spec_from(doc.at("stego"));
        for (const auto& e : doc.at("secrets")) {
            SecretPlacement p;
            p.spec = spec_from(e.at("spec"));
            p.row_offset = e.at("row_offset").get<std::uint32_t>();
            p.start_layer = e.at("start_layer").get<std::uint32_t>();
            for (const auto& c : e.at("cells")) {
                LayerCell cell;
                cell.stego_layer = c.at("stego_layer").get<std::uint32_t>();
                cell.weight = {c.at("row0").get<std::uint32_t>(), c.at("col0").get<std::uint32_t>(),
                               c.at("rows").get<std::uint32_t>(), c.at("cols").get<std::uint32_t>()};
                p.cells.push_back(cell);
            }
            r.placements.push_back(std::move(p));

            const auto& m = e.at("media");
            SecretMedia media;
            media.modality = parse_modality(m.at("modality").get<std::string>());
            media.shape = m.at("shape").get<std::vector<std::size_t>>();
            const auto range = m.at("range").get<std::vector<double>>();
            if (range.size() != 2) throw FormatError("recipe media range needs two entries");
            media.range = {range[0], range[1]};
            media.sample_rate = m.value("sample_rate", 0u);
            media.sdf_resolution = m.value("sdf_resolution", 0u);
            r.media.push_back(std::move(media));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("recipe schema violation: ") + e.what());
    } catch (const ArgumentError& e) {
        throw FormatError(std::string("recipe schema violation: ") + e.what());
    }
    r.validate();
    return r;
}

void save_recipe(const Recipe& recipe, const std::filesystem::path& path)
{
    recipe.validate();
    const std::string text = recipe_to_json(recipe);
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Recipe load_recipe(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    return recipe_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace inrsteg
