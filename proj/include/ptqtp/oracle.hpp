// SPDX-License-Identifier: Apache-2.0
//
// Slow reference implementations that certify the fast path. Nothing here
// calls into the decomposer or the 2x2 solver in linalg.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ptqtp/linalg.hpp"
#include "ptqtp/trit.hpp"

namespace ptqtp::oracle {

inline constexpr std::size_t kMaxRowLength = 6;

struct OracleResult {
    double objective = 0.0;       // ||w - S a||^2 + lambda ||a||^2 at the optimum
    double squared_error = 0.0;   // ||w - S a||^2 at the optimum
    std::vector<Trit> plane1;
    std::vector<Trit> plane2;
    std::array<double, 2> alpha{};
    std::uint64_t enumerated = 0;  // 9^d
};

/// Global minimizer of the regularized objective over every trit pair row
/// (t1, t2) in {-1,0,1}^{2d}, each with its closed-form ridge scales.
/// Ties go to the smaller total |t1|+|t2|, then lexicographic order of the
/// interleaved pairs (t1[0], t2[0], t1[1], ...) with -1 < 0 < 1.
/// Throws ArgumentError if d > kMaxRowLength or lambda <= 0.
OracleResult global_optimum_row(std::span<const double> w, double lambda);

/// ||W - W_hat||_F from a plain element loop over (i, j).
double naive_reconstruct_error(const WeightMatrix& w, const QuantizedLayer& q);

}  // namespace ptqtp::oracle
