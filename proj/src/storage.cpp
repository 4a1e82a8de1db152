// SPDX-License-Identifier: Apache-2.0
#include "ptqtp/storage.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <system_error>
#include <unistd.h>

namespace ptqtp {

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kScaleFloat16 = 1;

class ByteWriter {
public:
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void magic(const char (&m)[5]) {
        out_.insert(out_.end(), m, m + 4);
    }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void put(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> in, const char* what) : in_(in), what_(what) {}

    std::span<const std::uint8_t> bytes(std::size_t count) {
        if (count > remaining()) {
            throw TruncatedDataError(std::string(what_) + ": truncated at offset " +
                                     std::to_string(pos_) + " (need " + std::to_string(count) +
                                     " more bytes, have " + std::to_string(remaining()) + ")");
        }
        auto s = in_.subspan(pos_, count);
        pos_ += count;
        return s;
    }
    std::uint8_t u8() { return bytes(1)[0]; }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::size_t remaining() const noexcept { return in_.size() - pos_; }
    std::size_t offset() const noexcept { return pos_; }

    void expect_magic(const char (&m)[5]) {
        if (remaining() < 4) {
            throw CorruptDataError(std::string(what_) + ": stream too short for magic");
        }
        const auto b = bytes(4);
        if (std::memcmp(b.data(), m, 4) != 0) {
            throw CorruptDataError(std::string(what_) + ": bad magic, expected \"" + m + "\"");
        }
    }
    void expect_end() const {
        if (remaining() != 0) {
            throw CorruptDataError(std::string(what_) + ": " + std::to_string(remaining()) +
                                   " trailing bytes");
        }
    }

private:
    std::uint64_t get(int width) {
        const auto b = bytes(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= std::uint64_t{b[i]} << (8 * i);
        return v;
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
    const char* what_;
};

// a * b, or throw if it does not fit.
std::size_t checked_mul(std::uint64_t a, std::uint64_t b, const char* what) {
    if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) {
        throw CorruptDataError(std::string(what) + ": dimensions overflow");
    }
    return static_cast<std::size_t>(a * b);
}

}  // namespace

std::uint16_t half_from_double(double v) noexcept {
    const std::uint16_t sign = std::signbit(v) ? 0x8000 : 0x0000;
    if (std::isnan(v)) return sign | 0x7E00;
    const double a = std::abs(v);
    // 65520 is the midpoint between 65504 (max finite) and 2^16; ties go even, to inf.
    if (a >= 65520.0) return sign | 0x7C00;
    if (a < 0x1p-14) {
        // Subnormal range: units of 2^-24, exact scaling then one rounding.
        // A result of 1024 spills correctly into the smallest normal.
        return sign | static_cast<std::uint16_t>(std::nearbyint(a * 0x1p24));
    }
    int exp = 0;
    const double frac = std::frexp(a, &exp);  // a = frac * 2^exp, frac in [0.5, 1)
    int e = exp - 1;
    // (frac*2 - 1) * 1024 is exact in double; nearbyint rounds half to even.
    auto mant = static_cast<std::uint32_t>(std::nearbyint((frac * 2.0 - 1.0) * 1024.0));
    if (mant == 1024) {
        mant = 0;
        ++e;
    }
    return sign | static_cast<std::uint16_t>(((e + 15) << 10) | mant);
}

double half_to_double(std::uint16_t h) noexcept {
    const bool neg = (h & 0x8000) != 0;
    const int exp = (h >> 10) & 0x1F;
    const int mant = h & 0x3FF;
    double v;
    if (exp == 0) {
        v = std::ldexp(static_cast<double>(mant), -24);
    } else if (exp == 31) {
        v = mant == 0 ? std::numeric_limits<double>::infinity()
                      : std::numeric_limits<double>::quiet_NaN();
    } else {
        v = std::ldexp(static_cast<double>(mant + 1024), exp - 25);
    }
    return neg ? -v : v;
}

double round_to_half(double v) noexcept { return half_to_double(half_from_double(v)); }

std::vector<std::uint8_t> write_tensor(const WeightMatrix& w, TensorDType dtype) {
    ByteWriter out;
    out.magic("FPT1");
    out.u32(kVersion);
    out.u8(static_cast<std::uint8_t>(dtype));
    out.u8(2);
    out.u64(w.rows());
    out.u64(w.cols());
    for (double v : w.data()) {
        if (dtype == TensorDType::Float32) {
            out.f32(static_cast<float>(v));
        } else {
            out.u16(half_from_double(v));
        }
    }
    return out.take();
}

WeightMatrix read_tensor(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes, "FPT1");
    in.expect_magic("FPT1");
    if (const auto version = in.u32(); version != kVersion) {
        throw CorruptDataError("FPT1: unsupported version " + std::to_string(version));
    }
    const std::uint8_t dtype = in.u8();
    if (dtype > 1) throw CorruptDataError("FPT1: unknown dtype code " + std::to_string(dtype));
    if (const auto rank = in.u8(); rank != 2) {
        throw CorruptDataError("FPT1: rank must be 2, got " + std::to_string(rank));
    }
    const std::uint64_t n = in.u64();
    const std::uint64_t d = in.u64();
    if (n == 0 || d == 0) throw CorruptDataError("FPT1: zero dimension");
    const std::size_t count = checked_mul(n, d, "FPT1");
    const std::size_t elem = dtype == 0 ? 4 : 2;
    checked_mul(count, elem, "FPT1");
    if (in.remaining() < count * elem) {
        throw TruncatedDataError("FPT1: payload holds " + std::to_string(in.remaining()) +
                                 " bytes, header requires " + std::to_string(count * elem));
    }
    std::vector<double> data(count);
    for (auto& v : data) v = dtype == 0 ? static_cast<double>(in.f32()) : half_to_double(in.u16());
    in.expect_end();
    try {
        return WeightMatrix(n, d, std::move(data));
    } catch (const DataError& e) {
        throw CorruptDataError(std::string("FPT1: ") + e.what());
    }
}

std::vector<std::uint8_t> write_quantized(const QuantizedLayer& q) {
    q.validate();
    const GroupLayout& layout = q.layout;
    if (layout.group_size() > std::numeric_limits<std::uint32_t>::max() ||
        q.meta.iterations > std::numeric_limits<std::uint32_t>::max()) {
        throw ArgumentError("PTQ1: group size or iteration count exceeds 32 bits");
    }
    ByteWriter out;
    out.magic("PTQ1");
    out.u32(kVersion);
    out.u8(kScaleFloat16);
    out.u8(0);
    out.u8(0);
    out.u8(0);
    out.u64(layout.n());
    out.u64(layout.d());
    out.u32(static_cast<std::uint32_t>(layout.group_size()));
    out.u32(static_cast<std::uint32_t>(q.meta.iterations));
    out.f64(q.meta.final_error);
    out.bytes(pack_trits(q.plane1.values()));
    out.bytes(pack_trits(q.plane2.values()));
    for (const auto* scales : {&q.scale1.values, &q.scale2.values}) {
        for (double s : *scales) {
            const std::uint16_t h = half_from_double(s);
            if ((h & 0x7C00) == 0x7C00) {
                throw ArgumentError("PTQ1: scale " + std::to_string(s) + " overflows float16");
            }
            out.u16(h);
        }
    }
    return out.take();
}

QuantizedLayer read_quantized(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes, "PTQ1");
    in.expect_magic("PTQ1");
    if (const auto version = in.u32(); version != kVersion) {
        throw CorruptDataError("PTQ1: unsupported version " + std::to_string(version));
    }
    if (const auto sd = in.u8(); sd != kScaleFloat16) {
        throw CorruptDataError("PTQ1: unsupported scale dtype " + std::to_string(sd));
    }
    for (int i = 0; i < 3; ++i) {
        if (in.u8() != 0) throw CorruptDataError("PTQ1: reserved header bytes must be zero");
    }
    const std::uint64_t n = in.u64();
    const std::uint64_t d = in.u64();
    const std::uint32_t group = in.u32();
    const std::uint32_t iterations = in.u32();
    const double final_error = in.f64();
    if (n == 0 || d == 0 || group == 0) throw CorruptDataError("PTQ1: zero dimension");
    if (!std::isfinite(final_error) || final_error < 0.0) {
        throw CorruptDataError("PTQ1: invalid final error");
    }
    const std::uint64_t gpr = (d + group - 1) / group;
    const std::size_t m = checked_mul(n, gpr, "PTQ1");
    const std::size_t trits = checked_mul(m, group, "PTQ1");
    const std::size_t plane_bytes = packed_size(trits);
    const std::size_t needed = 2 * plane_bytes + 4 * m;
    if (in.remaining() < needed) {
        throw TruncatedDataError("PTQ1: payload holds " + std::to_string(in.remaining()) +
                                 " bytes, header requires " + std::to_string(needed));
    }

    QuantizedLayer q;
    q.layout = GroupLayout(n, d, group);
    q.plane1 = TritPlane(m, group, unpack_trits(in.bytes(plane_bytes), trits));
    q.plane2 = TritPlane(m, group, unpack_trits(in.bytes(plane_bytes), trits));
    q.scale1 = {std::vector<double>(m), 1};
    q.scale2 = {std::vector<double>(m), 2};
    for (auto& s : q.scale1.values) s = half_to_double(in.u16());
    for (auto& s : q.scale2.values) s = half_to_double(in.u16());
    in.expect_end();
    q.meta.iterations = iterations;
    q.meta.final_error = final_error;
    q.meta.config.group_size = group;
    try {
        q.validate();
    } catch (const DimensionError& e) {
        throw CorruptDataError(std::string("PTQ1: ") + e.what());
    } catch (const CorruptDataError&) {
        throw;
    } catch (const DataError& e) {
        throw CorruptDataError(std::string("PTQ1: ") + e.what());
    }
    return q;
}

QuantizedLayer with_half_scales(QuantizedLayer q) {
    for (auto& s : q.scale1.values) s = round_to_half(s);
    for (auto& s : q.scale2.values) s = round_to_half(s);
    return q;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path.string());
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (f.bad()) throw DataError("error reading " + path.string());
    return data;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot open " + tmp.string() + " for writing");
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
        if (!f) throw Error("error writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

}  // namespace ptqtp
