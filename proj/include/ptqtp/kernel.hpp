// SPDX-License-Identifier: Apache-2.0
//
// Multiplication-free forward pass over a quantized layer. The element loop
// only adds, subtracts or skips activations; the two per-group scales are the
// only true multiplies, 2 * n * ceil(d/G) of them per matvec.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ptqtp/linalg.hpp"
#include "ptqtp/trit.hpp"

namespace ptqtp {

/// Counts scalar multiplies issued by the reference forward path.
struct MultiplyCensus {
    std::uint64_t multiplies = 0;
};

/// sum_j t_j * x_j using only additions and subtractions.
double ternary_dot(std::span<const Trit> t, std::span<const double> x);

/// y = W_hat x, length n. Throws DimensionError if x.size() != d.
std::vector<double> forward(const QuantizedLayer& q, std::span<const double> x,
                            MultiplyCensus* census = nullptr);

/// Y = W_hat X for X of shape d x batch (row-major); returns n x batch.
WeightMatrix forward_batch(const QuantizedLayer& q, const WeightMatrix& x);

/// The 2-bit on-disk representation of a layer, usable directly by the kernel.
struct PackedLayer {
    GroupLayout layout;
    std::vector<std::uint8_t> plane1;  // packed_size(m * G) bytes
    std::vector<std::uint8_t> plane2;
    std::vector<double> scale1;
    std::vector<double> scale2;
};

PackedLayer pack_layer(const QuantizedLayer& q);
/// Throws CorruptDataError on code 11 or nonzero padding.
QuantizedLayer unpack_layer(const PackedLayer& p);

/// Same contract and accumulation order as forward(), reading the 2-bit planes
/// directly. For even G it first tabulates the 16 signed sums of every
/// activation pair (additions only), then spends one lookup and one add per
/// pair of trits. Results are bit-identical to forward(). Throws
/// CorruptDataError on code 11.
std::vector<double> forward_packed(const PackedLayer& p, std::span<const double> x);

struct BenchReport {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t group_size = 0;
    std::size_t reps = 0;
    double ns_dense = 0.0;    // per call
    double ns_ternary = 0.0;  // per call
    double ratio = 0.0;       // ns_dense / ns_ternary
    double sparsity1 = 0.0;
    double sparsity2 = 0.0;
    double max_rel_diff = 0.0;  // ternary vs dense output
};

/// Quantizes a seeded Gaussian n x d matrix, then times a dense double matvec
/// against forward_packed on the same input. Throws ArgumentError on zero
/// sizes or reps, and Error if the two results disagree beyond 1e-5 relative.
BenchReport bench_matvec(std::size_t n, std::size_t d, std::size_t group_size, std::size_t reps,
                         std::uint64_t seed = 0);

}  // namespace ptqtp
