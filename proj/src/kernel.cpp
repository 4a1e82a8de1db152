// SPDX-License-Identifier: Apache-2.0
#include "ptqtp/kernel.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "ptqtp/decomposer.hpp"

namespace ptqtp {

namespace {

void check_input(const GroupLayout& layout, std::span<const double> x) {
    if (x.size() != layout.d()) {
        throw DimensionError("forward: activation length " + std::to_string(x.size()) +
                             " != layer input size " + std::to_string(layout.d()));
    }
}

// Contribution of one element: +x, -x or +0.0 for code 01, 10, 00, built
// by flipping the sign bit and masking. No multiplies, no data-dependent
// branches.
inline double signed_term(double x, unsigned code) noexcept {
    const std::uint64_t sign = static_cast<std::uint64_t>(code >> 1) << 63;
    const std::uint64_t keep = std::uint64_t{0} - static_cast<std::uint64_t>(code != 0);
    return std::bit_cast<double>((std::bit_cast<std::uint64_t>(x) ^ sign) & keep);
}

inline unsigned trit_code(Trit t) noexcept {
    return static_cast<unsigned>(t > 0) | (static_cast<unsigned>(t < 0) << 1);
}

// Every dot product here is a sum over element pairs (2p, 2p+1), pair value
// term(x0, c0) + term(x1, c1), folded into four interleaved accumulators.
// A missing odd element contributes +0.0. The packed path reads whole pair
// values from a table built with the same expression, so all paths round
// identically.
inline double pair_value(double x0, unsigned c0, double x1, unsigned c1) noexcept {
    return signed_term(x0, c0) + signed_term(x1, c1);
}

template <class Pair>
inline double lane_sum(std::size_t pairs, Pair pair) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t p = 0;
    for (; p + 4 <= pairs; p += 4) {
        a0 += pair(p);
        a1 += pair(p + 1);
        a2 += pair(p + 2);
        a3 += pair(p + 3);
    }
    if (p < pairs) a0 += pair(p++);
    if (p < pairs) a1 += pair(p++);
    if (p < pairs) a2 += pair(p);
    return (a0 + a1) + (a2 + a3);
}

// 2-bit code of trit `index` in a packed plane.
inline unsigned packed_code(const std::uint8_t* bytes, std::size_t index) noexcept {
    return (bytes[index >> 2] >> ((index & 3) << 1)) & 0b11u;
}

// Nonzero iff a nibble (two codes) contains the reserved code 11.
inline unsigned reserved_in(unsigned nibble) noexcept { return nibble & (nibble >> 1) & 0b0101u; }

// For each pair of activations, the 16 pair values indexed by the nibble
// (c0 | c1 << 2) that holds their two codes. Built from additions only.
class PairTable {
public:
    explicit PairTable(std::span<const double> x, std::size_t padded_len) {
        std::vector<double> xp(x.begin(), x.end());
        xp.resize(padded_len + (padded_len & 1), 0.0);
        table_.resize(xp.size() / 2 * 16);
        for (std::size_t p = 0; p < xp.size() / 2; ++p) {
            for (unsigned nib = 0; nib < 16; ++nib) {
                table_[p * 16 + nib] = pair_value(xp[2 * p], nib & 3u, xp[2 * p + 1], nib >> 2);
            }
        }
    }
    const double* pair(std::size_t p) const noexcept { return table_.data() + p * 16; }

private:
    std::vector<double> table_;
};

// Group dot product from a packed plane. `base` is the group's first trit
// index, `col` its first activation column, `width` its live length.
double packed_group_dot(const std::uint8_t* bytes, std::size_t base, std::size_t col,
                        std::size_t width, std::span<const double> x, const PairTable* table,
                        unsigned& reserved) {
    const std::size_t pairs = (width + 1) / 2;
    if (table != nullptr) {
        // base and col are even, so each pair is one aligned nibble.
        const double* t = table->pair(col / 2);
        return lane_sum(pairs, [&](std::size_t p) {
            const std::size_t index = base + 2 * p;
            const unsigned nib = (bytes[index >> 2] >> ((index & 3) << 1)) & 0xFu;
            reserved |= reserved_in(nib);
            return t[p * 16 + nib];
        });
    }
    return lane_sum(pairs, [&](std::size_t p) {
        const std::size_t j = 2 * p;
        const unsigned c0 = packed_code(bytes, base + j);
        reserved |= c0 == 0b11u;
        if (j + 1 == width) return pair_value(x[col + j], c0, 0.0, 0);
        const unsigned c1 = packed_code(bytes, base + j + 1);
        reserved |= c1 == 0b11u;
        return pair_value(x[col + j], c0, x[col + j + 1], c1);
    });
}

double relative_inf_diff(std::span<const double> got, std::span<const double> want) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i) {
        num = std::max(num, std::abs(got[i] - want[i]));
        den = std::max(den, std::abs(want[i]));
    }
    return num / std::max(den, std::numeric_limits<double>::min());
}

}  // namespace

double ternary_dot(std::span<const Trit> t, std::span<const double> x) {
    if (t.size() != x.size()) {
        throw DimensionError("ternary_dot: length mismatch");
    }
    const std::size_t len = t.size();
    return lane_sum((len + 1) / 2, [&](std::size_t p) {
        const std::size_t j = 2 * p;
        if (j + 1 == len) return pair_value(x[j], trit_code(t[j]), 0.0, 0);
        return pair_value(x[j], trit_code(t[j]), x[j + 1], trit_code(t[j + 1]));
    });
}

std::vector<double> forward(const QuantizedLayer& q, std::span<const double> x,
                            MultiplyCensus* census) {
    const GroupLayout& layout = q.layout;
    check_input(layout, x);
    const std::size_t gpr = layout.groups_per_row();
    std::vector<double> y(layout.n(), 0.0);
    for (std::size_t i = 0; i < layout.n(); ++i) {
        double yi = 0.0;
        for (std::size_t k = 0; k < gpr; ++k) {
            const std::size_t g = i * gpr + k;
            const std::size_t width = layout.width(g);
            const auto xs = x.subspan(layout.source_col(g), width);
            const double p1 = ternary_dot(q.plane1.row(g).first(width), xs);
            const double p2 = ternary_dot(q.plane2.row(g).first(width), xs);
            yi += q.scale1.values[g] * p1 + q.scale2.values[g] * p2;
            if (census != nullptr) census->multiplies += 2;
        }
        y[i] = yi;
    }
    return y;
}

WeightMatrix forward_batch(const QuantizedLayer& q, const WeightMatrix& x) {
    if (x.rows() != q.layout.d()) {
        throw DimensionError("forward_batch: activation rows != layer input size");
    }
    WeightMatrix y(q.layout.n(), x.cols());
    std::vector<double> column(x.rows());
    for (std::size_t b = 0; b < x.cols(); ++b) {
        for (std::size_t j = 0; j < x.rows(); ++j) column[j] = x(j, b);
        const auto out = forward(q, column);
        for (std::size_t i = 0; i < out.size(); ++i) y(i, b) = out[i];
    }
    return y;
}

PackedLayer pack_layer(const QuantizedLayer& q) {
    q.validate();
    return {q.layout, pack_trits(q.plane1.values()), pack_trits(q.plane2.values()),
            q.scale1.values, q.scale2.values};
}

QuantizedLayer unpack_layer(const PackedLayer& p) {
    const std::size_t m = p.layout.grouped_rows();
    const std::size_t g = p.layout.group_size();
    QuantizedLayer q;
    q.layout = p.layout;
    q.plane1 = TritPlane(m, g, unpack_trits(p.plane1, m * g));
    q.plane2 = TritPlane(m, g, unpack_trits(p.plane2, m * g));
    q.scale1 = {p.scale1, 1};
    q.scale2 = {p.scale2, 2};
    q.validate();
    return q;
}

std::vector<double> forward_packed(const PackedLayer& p, std::span<const double> x) {
    const GroupLayout& layout = p.layout;
    check_input(layout, x);
    const std::size_t m = layout.grouped_rows();
    const std::size_t group = layout.group_size();
    const std::size_t need = packed_size(m * group);
    if (p.plane1.size() < need || p.plane2.size() < need || p.scale1.size() != m ||
        p.scale2.size() != m) {
        throw DimensionError("forward_packed: section sizes do not match layout");
    }
    const std::size_t gpr = layout.groups_per_row();
    // The pair table needs pairs to line up with nibbles, i.e. an even group
    // size. It costs 8 doubles per activation, paid once for all n rows.
    std::optional<PairTable> table;
    if (group % 2 == 0) table.emplace(x, gpr * group);
    const PairTable* tp = table ? &*table : nullptr;
    unsigned reserved = 0;
    std::vector<double> y(layout.n(), 0.0);
    for (std::size_t i = 0; i < layout.n(); ++i) {
        double yi = 0.0;
        for (std::size_t k = 0; k < gpr; ++k) {
            const std::size_t g = i * gpr + k;
            const std::size_t base = g * group;
            const std::size_t col = layout.source_col(g);
            const std::size_t width = layout.width(g);
            const double p1 = packed_group_dot(p.plane1.data(), base, col, width, x, tp, reserved);
            const double p2 = packed_group_dot(p.plane2.data(), base, col, width, x, tp, reserved);
            yi += p.scale1[g] * p1 + p.scale2[g] * p2;
        }
        y[i] = yi;
    }
    if (reserved) throw CorruptDataError("forward_packed: reserved trit code 0b11");
    return y;
}

BenchReport bench_matvec(std::size_t n, std::size_t d, std::size_t group_size, std::size_t reps,
                         std::uint64_t seed) {
    if (n == 0 || d == 0 || group_size == 0) {
        throw ArgumentError("bench_matvec: sizes must be >= 1");
    }
    if (reps == 0) throw ArgumentError("bench_matvec: repetitions must be >= 1");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> wdata(n * d);
    for (auto& v : wdata) v = normal(rng);
    std::vector<double> x(d);
    for (auto& v : x) v = normal(rng);

    DecomposeConfig cfg;
    cfg.group_size = group_size;
    const auto [q, trace] = decompose(WeightMatrix(n, d, std::move(wdata)), cfg);
    const WeightMatrix dense = reconstruct(q);
    const PackedLayer packed = pack_layer(q);

    using clock = std::chrono::steady_clock;
    std::vector<double> y_dense(n);
    double sink = 0.0;
    auto t0 = clock::now();
    for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = dense.row(i);
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += row[j] * x[j];
            y_dense[i] = acc;
        }
        sink += y_dense[r % n];
    }
    auto t1 = clock::now();
    std::vector<double> y_ternary;
    for (std::size_t r = 0; r < reps; ++r) {
        y_ternary = forward_packed(packed, x);
        sink += y_ternary[r % n];
    }
    auto t2 = clock::now();
    volatile double keep = sink;
    (void)keep;

    BenchReport rep;
    rep.n = n;
    rep.d = d;
    rep.group_size = group_size;
    rep.reps = reps;
    const double r = static_cast<double>(reps);
    rep.ns_dense = std::max(1.0, std::chrono::duration<double, std::nano>(t1 - t0).count() / r);
    rep.ns_ternary = std::max(1.0, std::chrono::duration<double, std::nano>(t2 - t1).count() / r);
    rep.ratio = rep.ns_dense / rep.ns_ternary;
    rep.sparsity1 = sparsity(q.plane1, q.layout);
    rep.sparsity2 = sparsity(q.plane2, q.layout);
    rep.max_rel_diff = relative_inf_diff(y_ternary, y_dense);
    if (rep.max_rel_diff > 1e-5) {
        throw Error("bench_matvec: ternary result deviates from dense by " +
                    std::to_string(rep.max_rel_diff));
    }
    return rep;
}

}  // namespace ptqtp
