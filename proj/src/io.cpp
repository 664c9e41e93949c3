#include "cslsm/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

namespace cslsm {

namespace {

void put_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void put_u64le(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_f32le(std::vector<unsigned char>& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32le(out, bits);
}

void put_f64le(std::vector<unsigned char>& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64le(out, bits);
}

class Reader {
public:
    Reader(std::vector<unsigned char> bytes, std::string path)
        : bytes_(std::move(bytes)), path_(std::move(path)) {}

    void expect_magic(const char* magic) {
        if (bytes_.size() < 4 || std::memcmp(bytes_.data(), magic, 4) != 0)
            throw format_error(format_error::kind::bad_magic,
                               path_ + ": bad magic, expected " + magic);
        pos_ = 4;
    }

    void expect_version(unsigned char version) {
        if (remaining() < 1)
            throw format_error(format_error::kind::truncated, path_ + ": missing version");
        const unsigned char got = bytes_[pos_++];
        if (got != version)
            throw format_error(format_error::kind::bad_version,
                               path_ + ": unsupported version " + std::to_string(got));
    }

    std::uint32_t u32le() {
        need(4, "header field");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64le() {
        need(8, "header field");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    float f32le() {
        const std::uint32_t bits = u32le();
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }

    double f64le() {
        const std::uint64_t bits = u64le();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }

    const unsigned char* payload(std::size_t n) {
        if (remaining() != n)
            throw format_error(format_error::kind::truncated,
                               path_ + ": payload is " + std::to_string(remaining()) +
                                   " bytes, header implies " + std::to_string(n));
        return bytes_.data() + pos_;
    }

    const std::string& path() const { return path_; }

private:
    std::size_t remaining() const { return bytes_.size() - pos_; }

    void need(std::size_t n, const char* what) {
        if (remaining() < n)
            throw format_error(format_error::kind::truncated,
                               path_ + ": truncated " + what);
    }

    std::vector<unsigned char> bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

Reader open_reader(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (in.bad()) throw io_error("read failure on " + path);
    return Reader(std::move(bytes), path);
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("write failure on " + path);
}

std::uint32_t checked_dim(std::uint32_t v, const std::string& path, const char* name) {
    if (v == 0 || v > 0x7fffffffu)
        throw format_error(format_error::kind::invalid_data,
                           path + ": implausible " + name + " = " + std::to_string(v));
    return v;
}

} // namespace

void write_volume(const Volume& v, const std::string& path) {
    for (float x : v.voxels)
        if (!std::isfinite(x))
            throw format_error(format_error::kind::invalid_data,
                               path + ": refusing to write non-finite voxel");
    std::vector<unsigned char> out;
    out.reserve(17 + v.voxel_count() * 4);
    out.insert(out.end(), {'C', 'S', 'L', 'V', 0x01});
    put_u32le(out, static_cast<std::uint32_t>(v.nx));
    put_u32le(out, static_cast<std::uint32_t>(v.ny));
    put_u32le(out, static_cast<std::uint32_t>(v.nz));
    for (float x : v.voxels) put_f32le(out, x);
    write_bytes(path, out);
}

Volume read_volume(const std::string& path) {
    Reader r = open_reader(path);
    r.expect_magic("CSLV");
    r.expect_version(0x01);
    Volume v;
    v.nx = static_cast<int>(checked_dim(r.u32le(), path, "nx"));
    v.ny = static_cast<int>(checked_dim(r.u32le(), path, "ny"));
    v.nz = static_cast<int>(checked_dim(r.u32le(), path, "nz"));
    const std::size_t n = v.voxel_count();
    const unsigned char* p = r.payload(n * 4);
    v.voxels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b)
            bits |= static_cast<std::uint32_t>(p[4 * i + b]) << (8 * b);
        float f;
        std::memcpy(&f, &bits, 4);
        if (!std::isfinite(f))
            throw format_error(format_error::kind::invalid_data,
                               path + ": non-finite voxel at index " + std::to_string(i));
        v.voxels[i] = f;
    }
    return v;
}

void write_masks(const MaskSet& m, const std::string& path) {
    for (std::uint8_t b : m.bits)
        if (b > 1)
            throw format_error(format_error::kind::invalid_mask,
                               path + ": mask entry is not 0/1");
    std::vector<unsigned char> out;
    out.reserve(25 + m.bits.size());
    out.insert(out.end(), {'C', 'S', 'L', 'M', 0x01});
    put_u32le(out, static_cast<std::uint32_t>(m.count));
    put_u32le(out, static_cast<std::uint32_t>(m.nx));
    put_u32le(out, static_cast<std::uint32_t>(m.ny));
    put_u64le(out, m.seed);
    out.insert(out.end(), m.bits.begin(), m.bits.end());
    write_bytes(path, out);
}

MaskSet read_masks(const std::string& path) {
    Reader r = open_reader(path);
    r.expect_magic("CSLM");
    r.expect_version(0x01);
    MaskSet m;
    m.count = static_cast<int>(checked_dim(r.u32le(), path, "R"));
    m.nx = static_cast<int>(checked_dim(r.u32le(), path, "nx"));
    m.ny = static_cast<int>(checked_dim(r.u32le(), path, "ny"));
    m.seed = r.u64le();
    const std::size_t n = static_cast<std::size_t>(m.count) * m.pixels_per_mask();
    const unsigned char* p = r.payload(n);
    m.bits.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (p[i] > 1)
            throw format_error(format_error::kind::invalid_mask,
                               path + ": mask byte " + std::to_string(p[i]) +
                                   " at index " + std::to_string(i));
        m.bits[i] = p[i];
    }
    return m;
}

void write_measurements(const MeasurementSet& ms, const std::string& path) {
    for (float x : ms.data)
        if (!std::isfinite(x))
            throw format_error(format_error::kind::invalid_data,
                               path + ": refusing to write non-finite measurement");
    std::vector<unsigned char> out;
    out.reserve(45 + ms.data.size() * 4);
    out.insert(out.end(), {'C', 'S', 'L', 'B', 0x01});
    put_u32le(out, static_cast<std::uint32_t>(ms.shots));
    put_u32le(out, static_cast<std::uint32_t>(ms.nx));
    put_u32le(out, static_cast<std::uint32_t>(ms.ny));
    put_u32le(out, static_cast<std::uint32_t>(ms.compression_ratio));
    put_f64le(out, ms.noise_variance);
    put_u64le(out, ms.noise_seed);
    put_u64le(out, ms.mask_seed);
    for (float x : ms.data) put_f32le(out, x);
    write_bytes(path, out);
}

MeasurementSet read_measurements(const std::string& path) {
    Reader r = open_reader(path);
    r.expect_magic("CSLB");
    r.expect_version(0x01);
    MeasurementSet ms;
    ms.shots = static_cast<int>(checked_dim(r.u32le(), path, "N"));
    ms.nx = static_cast<int>(checked_dim(r.u32le(), path, "nx"));
    ms.ny = static_cast<int>(checked_dim(r.u32le(), path, "ny"));
    ms.compression_ratio = static_cast<int>(checked_dim(r.u32le(), path, "R"));
    ms.noise_variance = r.f64le();
    ms.noise_seed = r.u64le();
    ms.mask_seed = r.u64le();
    if (!(ms.noise_variance >= 0.0) || !std::isfinite(ms.noise_variance))
        throw format_error(format_error::kind::invalid_data,
                           path + ": negative or non-finite noise variance");
    const std::size_t n = static_cast<std::size_t>(ms.shots) * ms.pixels_per_shot();
    const unsigned char* p = r.payload(n * 4);
    ms.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b)
            bits |= static_cast<std::uint32_t>(p[4 * i + b]) << (8 * b);
        float f;
        std::memcpy(&f, &bits, 4);
        if (!std::isfinite(f))
            throw format_error(format_error::kind::invalid_data,
                               path + ": non-finite measurement at index " +
                                   std::to_string(i));
        ms.data[i] = f;
    }
    return ms;
}

void export_slice_pgm(const Slice& s, const std::string& path) {
    char header[64];
    const int len = std::snprintf(header, sizeof header, "P5\n%d %d\n65535\n", s.nx, s.ny);
    std::vector<unsigned char> out(header, header + len);
    out.reserve(out.size() + s.pixel_count() * 2);
    for (double v : s.values) {
        double t = v;
        if (!(t > 0.0)) t = 0.0; // NaN clamps to 0
        if (t > 1.0) t = 1.0;
        const long sample = std::lround(t * 65535.0);
        out.push_back(static_cast<unsigned char>((sample >> 8) & 0xff)); // big-endian
        out.push_back(static_cast<unsigned char>(sample & 0xff));
    }
    write_bytes(path, out);
}

} // namespace cslsm
