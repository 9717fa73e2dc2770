#include "inrsteg/media.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace inrsteg {

namespace fs = std::filesystem;

namespace {

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t position() const { return pos_; }

    void need(std::size_t n, const char* what) const
    {
        if (remaining() < n)
            throw FormatError(std::string("truncated ") + what + ": need " + std::to_string(n) + " bytes, have " +
                              std::to_string(remaining()));
    }

    std::uint32_t u32(const char* what)
    {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
        pos_ += 4;
        return v;
    }

    std::uint16_t u16(const char* what)
    {
        need(2, what);
        const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }

    std::uint8_t u8(const char* what)
    {
        need(1, what);
        return bytes_[pos_++];
    }

    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

    std::span<const std::uint8_t> take(std::size_t n, const char* what)
    {
        need(n, what);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    void skip(std::size_t n, const char* what) { take(n, what); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v)
{
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_tag(std::vector<std::uint8_t>& out, const char (&tag)[5]) { out.insert(out.end(), tag, tag + 4); }

// Netpbm header token, skipping whitespace and '#' comments.
std::size_t pnm_number(std::span<const std::uint8_t> b, std::size_t& pos)
{
    auto is_space = [](std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; };
    for (;;) {
        while (pos < b.size() && is_space(b[pos])) ++pos;
        if (pos < b.size() && b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    if (pos >= b.size() || b[pos] < '0' || b[pos] > '9') throw FormatError("malformed Netpbm header");
    std::size_t v = 0;
    while (pos < b.size() && b[pos] >= '0' && b[pos] <= '9') {
        v = v * 10 + (b[pos] - '0');
        if (v > (1u << 24)) throw FormatError("Netpbm header value out of range");
        ++pos;
    }
    return v;
}

}  // namespace

std::string_view to_string(Modality m)
{
    switch (m) {
        case Modality::image: return "image";
        case Modality::audio: return "audio";
        case Modality::video: return "video";
        case Modality::sdf: return "sdf";
    }
    return "unknown";
}

Modality parse_modality(std::string_view name)
{
    if (name == "image") return Modality::image;
    if (name == "audio") return Modality::audio;
    if (name == "video") return Modality::video;
    if (name == "sdf") return Modality::sdf;
    throw ArgumentError("unknown modality '" + std::string(name) + "' (expected image, audio, video or sdf)");
}

std::uint32_t modality_in_dim(Modality m)
{
    switch (m) {
        case Modality::audio: return 1;
        case Modality::image: return 2;
        case Modality::video:
        case Modality::sdf: return 3;
    }
    return 0;
}

std::uint32_t modality_out_dim(Modality m, std::size_t channels)
{
    if (m == Modality::image || m == Modality::video) return static_cast<std::uint32_t>(channels);
    return 1;
}

std::size_t MediaTensor::element_count() const
{
    std::size_t n = shape.empty() ? 0 : 1;
    for (auto d : shape) n *= d;
    return n;
}

std::size_t MediaTensor::channels() const
{
    if ((modality == Modality::image || modality == Modality::video) && !shape.empty()) return shape.back();
    return 1;
}

void MediaTensor::validate() const
{
    const std::size_t rank = modality == Modality::image ? 3 : modality == Modality::audio ? 2
                           : modality == Modality::video ? 4 : 1;
    if (shape.size() != rank)
        throw ShapeError("media shape rank " + std::to_string(shape.size()) + " does not match modality " +
                         std::string(to_string(modality)));
    if (element_count() != values.size()) throw ShapeError("media shape product does not match value count");
    if (element_count() == 0) throw ShapeError("media tensor is empty");
    if (modality == Modality::audio && shape[1] != 1) throw ShapeError("audio must be mono (shape N x 1)");
    if ((modality == Modality::image || modality == Modality::video) && channels() != 1 && channels() != 3)
        throw ShapeError("image and video need 1 or 3 channels");
    if (modality == Modality::sdf && points.size() != 3 * values.size())
        throw ShapeError("sdf samples need one x,y,z point per distance");
    for (float v : values)
        if (!std::isfinite(v)) throw ShapeError("media contains non-finite values");
}

std::int32_t quantize_sample(double v, double lo, double hi)
{
    if (std::isnan(v)) v = lo;
    return static_cast<std::int32_t>(std::round(std::clamp(v, lo, hi)));
}

// --- Netpbm ---------------------------------------------------------------

MediaTensor decode_netpbm(std::span<const std::uint8_t> b)
{
    if (b.size() < 2 || b[0] != 'P' || (b[1] != '5' && b[1] != '6'))
        throw FormatError("not a binary Netpbm file (expected P5 or P6)");
    const std::size_t channels = b[1] == '6' ? 3 : 1;
    std::size_t pos = 2;
    const std::size_t width = pnm_number(b, pos);
    const std::size_t height = pnm_number(b, pos);
    const std::size_t maxval = pnm_number(b, pos);
    if (width == 0 || height == 0) throw FormatError("Netpbm image has zero size");
    if (maxval != 255) throw FormatError("unsupported Netpbm maxval " + std::to_string(maxval) + " (need 255)");
    if (pos >= b.size()) throw FormatError("truncated Netpbm header");
    ++pos;  // single whitespace before the raster
    const std::size_t need = width * height * channels;
    if (b.size() - pos < need)
        throw FormatError("truncated Netpbm payload: expected " + std::to_string(need) + " bytes, got " +
                          std::to_string(b.size() - pos));
    MediaTensor t;
    t.modality = Modality::image;
    t.shape = {height, width, channels};
    t.range = kPixelRange;
    t.values.assign(b.begin() + static_cast<std::ptrdiff_t>(pos), b.begin() + static_cast<std::ptrdiff_t>(pos + need));
    return t;
}

std::vector<std::uint8_t> encode_netpbm(const MediaTensor& image)
{
    if (image.shape.size() != 3) throw ShapeError("Netpbm encoding needs an H x W x C image");
    const std::size_t h = image.shape[0], w = image.shape[1], c = image.shape[2];
    if (c != 1 && c != 3) throw ShapeError("Netpbm encoding needs 1 or 3 channels");
    const std::string header = (c == 3 ? "P6\n" : "P5\n") + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + h * w * c);
    for (float v : image.values) out.push_back(static_cast<std::uint8_t>(quantize_sample(v, 0.0, 255.0)));
    return out;
}

// --- WAV ------------------------------------------------------------------

MediaTensor decode_wav(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    auto tag = [&](const char* what) {
        auto s = r.take(4, what);
        return std::string(s.begin(), s.end());
    };
    if (tag("RIFF header") != "RIFF") throw FormatError("not a RIFF file");
    r.u32("RIFF size");
    if (tag("RIFF type") != "WAVE") throw FormatError("RIFF file is not WAVE");

    bool have_fmt = false;
    std::uint32_t rate = 0;
    while (r.remaining() >= 8) {
        const std::string id = tag("chunk id");
        const std::uint32_t size = r.u32("chunk size");
        if (id == "fmt ") {
            if (size < 16) throw FormatError("WAV fmt chunk too small");
            const std::uint16_t format = r.u16("fmt");
            const std::uint16_t channels = r.u16("fmt");
            rate = r.u32("fmt");
            r.u32("fmt");
            r.u16("fmt");
            const std::uint16_t bits = r.u16("fmt");
            if (format != 1) throw FormatError("WAV must be PCM (format tag 1), got " + std::to_string(format));
            if (channels != 1) throw FormatError("WAV must be mono, got " + std::to_string(channels) + " channels");
            if (bits != 16) throw FormatError("unsupported WAV bit depth " + std::to_string(bits) + " (need 16)");
            r.skip(size - 16 + (size & 1u), "fmt chunk");
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw FormatError("WAV data chunk precedes fmt chunk");
            if (size % 2 != 0) throw FormatError("WAV data chunk has odd length");
            auto payload = r.take(size, "WAV data");
            MediaTensor t;
            t.modality = Modality::audio;
            t.range = kPcm16Range;
            t.sample_rate = rate;
            t.values.resize(size / 2);
            for (std::size_t i = 0; i < t.values.size(); ++i) {
                const auto raw = static_cast<std::uint16_t>(payload[2 * i] | (payload[2 * i + 1] << 8));
                t.values[i] = static_cast<float>(static_cast<std::int16_t>(raw));
            }
            t.shape = {t.values.size(), 1};
            if (t.values.empty()) throw FormatError("WAV file has no samples");
            return t;
        } else {
            r.skip(size + (size & 1u), "WAV chunk");
        }
    }
    throw FormatError("WAV file has no data chunk");
}

std::vector<std::uint8_t> encode_wav(const MediaTensor& audio)
{
    const std::uint32_t rate = audio.sample_rate ? audio.sample_rate : 8000;
    const auto data_bytes = static_cast<std::uint32_t>(audio.values.size() * 2);
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, 1);
    put_u16(out, 1);
    put_u32(out, rate);
    put_u32(out, rate * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    put_tag(out, "data");
    put_u32(out, data_bytes);
    for (float v : audio.values) put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(quantize_sample(v, -32768.0, 32767.0))));
    return out;
}

// --- SDF samples ----------------------------------------------------------

MediaTensor decode_sdfs(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    auto magic = r.take(4, "sdfs magic");
    if (std::memcmp(magic.data(), "SDFS", 4) != 0) throw FormatError("bad .sdfs magic");
    const std::uint8_t version = r.u8("sdfs version");
    if (version != 1) throw FormatError("unsupported .sdfs version " + std::to_string(version));
    const std::uint32_t k = r.u32("sdfs count");
    if (k == 0) throw FormatError(".sdfs file has no samples");
    r.need(std::size_t{k} * 16, "sdfs payload");
    MediaTensor t;
    t.modality = Modality::sdf;
    t.shape = {k};
    t.values.resize(k);
    t.points.resize(std::size_t{k} * 3);
    for (std::size_t i = 0; i < k; ++i) {
        for (int c = 0; c < 3; ++c) t.points[3 * i + static_cast<std::size_t>(c)] = r.f32("sdfs payload");
        t.values[i] = r.f32("sdfs payload");
    }
    if (r.remaining() != 0) throw FormatError(".sdfs file has trailing bytes");
    for (float v : t.points)
        if (!std::isfinite(v)) throw FormatError(".sdfs contains non-finite coordinates");
    for (float v : t.values)
        if (!std::isfinite(v)) throw FormatError(".sdfs contains non-finite distances");
    const auto [lo, hi] = std::minmax_element(t.values.begin(), t.values.end());
    t.range = {*lo, *hi};
    return t;
}

std::vector<std::uint8_t> encode_sdfs(const MediaTensor& sdf)
{
    if (sdf.points.size() != 3 * sdf.values.size()) throw ShapeError("sdf samples need one point per distance");
    std::vector<std::uint8_t> out{'S', 'D', 'F', 'S', 1};
    put_u32(out, static_cast<std::uint32_t>(sdf.values.size()));
    for (std::size_t i = 0; i < sdf.values.size(); ++i) {
        for (int c = 0; c < 3; ++c) put_u32(out, std::bit_cast<std::uint32_t>(sdf.points[3 * i + static_cast<std::size_t>(c)]));
        put_u32(out, std::bit_cast<std::uint32_t>(sdf.values[i]));
    }
    return out;
}

// --- files ----------------------------------------------------------------

std::vector<std::uint8_t> read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

MediaTensor load_media(const fs::path& path, Modality modality)
{
    switch (modality) {
        case Modality::image: return decode_netpbm(read_file(path));
        case Modality::audio: return decode_wav(read_file(path));
        case Modality::sdf: return decode_sdfs(read_file(path));
        case Modality::video: {
            if (!fs::is_directory(path)) throw FormatError("video input must be a directory of PPM frames");
            std::vector<fs::path> frames;
            for (const auto& e : fs::directory_iterator(path)) {
                const auto ext = e.path().extension();
                if (e.is_regular_file() && (ext == ".ppm" || ext == ".pgm")) frames.push_back(e.path());
            }
            if (frames.empty()) throw FormatError("video directory '" + path.string() + "' has no frames");
            std::sort(frames.begin(), frames.end());
            MediaTensor video;
            video.modality = Modality::video;
            video.range = kPixelRange;
            for (const auto& f : frames) {
                MediaTensor frame = decode_netpbm(read_file(f));
                if (video.shape.empty()) {
                    video.shape = {0, frame.shape[0], frame.shape[1], frame.shape[2]};
                } else if (!std::equal(frame.shape.begin(), frame.shape.end(), video.shape.begin() + 1)) {
                    throw FormatError("video frame '" + f.string() + "' has a different size");
                }
                video.values.insert(video.values.end(), frame.values.begin(), frame.values.end());
                ++video.shape[0];
            }
            return video;
        }
    }
    throw ArgumentError("unsupported modality");
}

void save_media(const MediaTensor& tensor, const fs::path& path)
{
    tensor.validate();
    switch (tensor.modality) {
        case Modality::image: write_file(path, encode_netpbm(tensor)); return;
        case Modality::audio: write_file(path, encode_wav(tensor)); return;
        case Modality::sdf: write_file(path, encode_sdfs(tensor)); return;
        case Modality::video: {
            std::error_code ec;
            fs::create_directories(path, ec);
            if (!fs::is_directory(path)) throw Error("cannot create video directory '" + path.string() + "'");
            const std::size_t t = tensor.shape[0];
            const std::size_t frame_size = tensor.values.size() / t;
            const char* ext = tensor.channels() == 3 ? ".ppm" : ".pgm";
            for (std::size_t i = 0; i < t; ++i) {
                MediaTensor frame;
                frame.modality = Modality::image;
                frame.shape = {tensor.shape[1], tensor.shape[2], tensor.shape[3]};
                frame.range = kPixelRange;
                frame.values.assign(tensor.values.begin() + static_cast<std::ptrdiff_t>(i * frame_size),
                                    tensor.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * frame_size));
                char name[32];
                std::snprintf(name, sizeof name, "frame_%04zu%s", i, ext);
                write_file(path / name, encode_netpbm(frame));
            }
            return;
        }
    }
}

// --- coordinates ----------------------------------------------------------

float normalize_value(Modality m, double v)
{
    switch (m) {
        case Modality::image:
        case Modality::video: return static_cast<float>(v / 127.5 - 1.0);
        case Modality::audio: return static_cast<float>(v / 32768.0);
        case Modality::sdf: return static_cast<float>(std::clamp(v, -1.0, 1.0));
    }
    return 0.0f;
}

double denormalize_value(Modality m, double v, const ValueRange& range)
{
    switch (m) {
        case Modality::image:
        case Modality::video: return std::clamp((v + 1.0) * 127.5, range.lo, range.hi);
        case Modality::audio: return std::clamp(v * 32768.0, range.lo, range.hi);
        case Modality::sdf: return v;
    }
    return v;
}

std::vector<float> axis_coords(std::size_t length)
{
    std::vector<float> c(length);
    if (length == 1) {
        c[0] = 0.0f;
        return c;
    }
    for (std::size_t i = 0; i < length; ++i)
        c[i] = static_cast<float>(-1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(length - 1));
    return c;
}

std::vector<float> coordinate_grid(Modality m, std::span<const std::size_t> shape)
{
    std::vector<std::size_t> axes;
    switch (m) {
        case Modality::audio: axes = {shape[0]}; break;
        case Modality::image: axes = {shape[0], shape[1]}; break;
        case Modality::video: axes = {shape[0], shape[1], shape[2]}; break;
        case Modality::sdf: throw ArgumentError("sdf samples carry their own coordinates");
    }
    std::vector<std::vector<float>> per_axis;
    std::size_t count = 1;
    for (auto a : axes) {
        per_axis.push_back(axis_coords(a));
        count *= a;
    }
    const std::size_t dims = axes.size();
    std::vector<float> grid(count * dims);
    std::vector<std::size_t> idx(dims, 0);
    for (std::size_t p = 0; p < count; ++p) {
        for (std::size_t d = 0; d < dims; ++d) grid[p * dims + d] = per_axis[d][idx[d]];
        for (std::size_t d = dims; d-- > 0;) {
            if (++idx[d] < axes[d]) break;
            idx[d] = 0;
        }
    }
    return grid;
}

CoordDataset coord_dataset(const MediaTensor& tensor)
{
    tensor.validate();
    CoordDataset ds;
    ds.in_dim = modality_in_dim(tensor.modality);
    ds.out_dim = modality_out_dim(tensor.modality, tensor.channels());
    ds.coords = tensor.modality == Modality::sdf ? tensor.points : coordinate_grid(tensor.modality, tensor.shape);
    ds.targets.resize(tensor.values.size());
    for (std::size_t i = 0; i < tensor.values.size(); ++i)
        ds.targets[i] = normalize_value(tensor.modality, tensor.values[i]);
    return ds;
}

std::vector<float> sdf_lattice(std::size_t res)
{
    const auto axis = axis_coords(res);
    std::vector<float> pts;
    pts.reserve(res * res * res * 3);
    for (std::size_t z = 0; z < res; ++z)
        for (std::size_t y = 0; y < res; ++y)
            for (std::size_t x = 0; x < res; ++x) pts.insert(pts.end(), {axis[x], axis[y], axis[z]});
    return pts;
}

MediaTensor reconstruct(const SirenSpec& spec, const WeightSet& ws, Modality modality,
                        std::span<const std::size_t> shape, const ValueRange& range,
                        std::span<const float> sdf_points)
{
    MediaTensor t;
    t.modality = modality;
    t.shape.assign(shape.begin(), shape.end());
    t.range = range;
    if (spec.in_dim != modality_in_dim(modality) || spec.out_dim != modality_out_dim(modality, t.channels()))
        throw ShapeError("network dims (" + std::to_string(spec.in_dim) + "->" + std::to_string(spec.out_dim) +
                         ") do not match modality " + std::string(to_string(modality)));
    std::vector<float> grid;
    if (modality == Modality::sdf) {
        if (shape.size() != 1 || sdf_points.size() != 3 * shape[0])
            throw ShapeError("sdf reconstruction needs one query point per sample");
        grid.assign(sdf_points.begin(), sdf_points.end());
        t.points = grid;
    } else {
        grid = coordinate_grid(modality, shape);
    }
    const auto out = forward<float>(spec, ws, grid);
    t.values.resize(out.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        t.values[i] = static_cast<float>(denormalize_value(modality, out[i], range));
    t.validate();
    return t;
}

}  // namespace inrsteg
