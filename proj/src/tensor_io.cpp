#include "fedpmg/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "fedpmg/errors.hpp"

namespace fedpmg {

namespace {

constexpr char kMagic[4] = {'F', 'P', 'M', 'G'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::size_t tensor_byte_size(const std::vector<std::uint32_t>& dims) {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return 8 + 4 * dims.size() + 4 * n;
}

std::size_t tensor_byte_size(const Tensor& t) { return tensor_byte_size(t.dims); }

std::vector<std::uint8_t> serialize_tensor(const Tensor& t) {
    if (t.dims.empty() || t.dims.size() > 255)
        throw InvalidInput("tensor rank must lie in [1, 255]");
    if (t.values.size() != t.numel())
        throw ShapeError("tensor payload does not match its dims");
    std::vector<std::uint8_t> out;
    out.reserve(tensor_byte_size(t));
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(kVersion);
    out.push_back(kDtypeF32);
    out.push_back(static_cast<std::uint8_t>(t.dims.size()));
    out.push_back(0);
    for (auto d : t.dims) put_u32(out, d);
    for (float f : t.values) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
        put_u32(out, bits);
    }
    return out;
}

Tensor deserialize_tensor(const std::vector<std::uint8_t>& buf, std::size_t* offset) {
    std::size_t pos = offset ? *offset : 0;
    auto need = [&](std::size_t n) {
        if (buf.size() - pos < n) throw FormatError("tensor data truncated");
    };
    need(8);
    if (std::memcmp(buf.data() + pos, kMagic, 4) != 0)
        throw FormatError("bad tensor magic");
    if (buf[pos + 4] != kVersion) throw FormatError("unsupported tensor version");
    if (buf[pos + 5] != kDtypeF32) throw FormatError("unsupported tensor dtype");
    const std::size_t ndim = buf[pos + 6];
    if (ndim == 0) throw FormatError("tensor rank must be positive");
    pos += 8;
    need(4 * ndim);
    Tensor t;
    t.dims.resize(ndim);
    for (std::size_t i = 0; i < ndim; ++i) {
        t.dims[i] = get_u32(buf.data() + pos);
        pos += 4;
    }
    const std::size_t n = t.numel();
    need(4 * n);
    t.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.values[i] = std::bit_cast<float>(get_u32(buf.data() + pos));
        pos += 4;
    }
    if (offset) *offset = pos;
    return t;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw FormatError("short write: " + path);
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw FormatError("cannot open for reading: " + path);
    const std::streamsize size = f.tellg();
    f.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    f.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!f) throw FormatError("short read: " + path);
    return bytes;
}

void save_tensor(const std::string& path, const Tensor& t) {
    write_file_bytes(path, serialize_tensor(t));
}

Tensor load_tensor(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    std::size_t offset = 0;
    Tensor t = deserialize_tensor(bytes, &offset);
    if (offset != bytes.size()) throw FormatError("trailing bytes after tensor: " + path);
    return t;
}

Tensor tensor_from_image(const Image2D& img) {
    Tensor t;
    t.dims = {static_cast<std::uint32_t>(img.height), static_cast<std::uint32_t>(img.width)};
    t.values.resize(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i)
        t.values[i] = static_cast<float>(img.data[i]);
    return t;
}

Image2D image_from_tensor(const Tensor& t) {
    if (t.dims.size() != 2) throw ShapeError("expected a rank-2 tensor");
    Image2D img(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
    for (std::size_t i = 0; i < t.values.size(); ++i)
        img.data[i] = static_cast<double>(t.values[i]);
    return img;
}

Tensor tensor_from_amplitude(const AmplitudeSpectrum& amp) {
    Tensor t;
    t.dims = {static_cast<std::uint32_t>(amp.height), static_cast<std::uint32_t>(amp.width)};
    t.values.resize(amp.data.size());
    for (std::size_t i = 0; i < amp.data.size(); ++i)
        t.values[i] = static_cast<float>(amp.data[i]);
    return t;
}

AmplitudeSpectrum amplitude_from_tensor(const Tensor& t) {
    if (t.dims.size() != 2) throw ShapeError("expected a rank-2 tensor");
    AmplitudeSpectrum amp(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
    for (std::size_t i = 0; i < t.values.size(); ++i)
        amp.data[i] = static_cast<double>(t.values[i]);
    return amp;
}

std::vector<std::uint8_t> serialize_params(const ModelParams& params) {
    Tensor tag;
    tag.dims = {1};
    tag.values = {static_cast<float>(params.in_ch)};
    Tensor body;
    body.dims = {static_cast<std::uint32_t>(params.values.size())};
    body.values.resize(params.values.size());
    for (std::size_t i = 0; i < params.values.size(); ++i)
        body.values[i] = static_cast<float>(params.values[i]);
    std::vector<std::uint8_t> out = serialize_tensor(tag);
    const auto b = serialize_tensor(body);
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

ModelParams deserialize_params(const std::vector<std::uint8_t>& buf) {
    std::size_t offset = 0;
    Tensor tag = deserialize_tensor(buf, &offset);
    Tensor body = deserialize_tensor(buf, &offset);
    if (tag.values.size() != 1) throw FormatError("checkpoint tag must hold one value");
    ModelParams params;
    params.in_ch = static_cast<int>(tag.values[0]);
    if (params.in_ch != 1 && params.in_ch != 2)
        throw FormatError("checkpoint in_ch tag must be 1 or 2");
    if (body.values.size() != param_count(params.in_ch))
        throw FormatError("checkpoint parameter count does not match its tag");
    params.values.assign(body.values.begin(), body.values.end());
    return params;
}

void save_checkpoint(const std::string& path, const ModelParams& params) {
    write_file_bytes(path, serialize_params(params));
}

ModelParams load_checkpoint(const std::string& path) {
    return deserialize_params(read_file_bytes(path));
}

void export_pgm(const Image2D& img, const std::string& path) {
    require_finite(img, "pgm export");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open for writing: " + path);
    f << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width));
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double v = img.at(y, x);
            v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
            row[static_cast<std::size_t>(x)] =
                static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
        }
        f.write(reinterpret_cast<const char*>(row.data()), img.width);
    }
    if (!f) throw FormatError("short write: " + path);
}

}  // namespace fedpmg
