// SPDX-License-Identifier: Apache-2.0
#include "ptqtp/oracle.hpp"

#include <cmath>
#include <string>

namespace ptqtp::oracle {

namespace {

// Pair index p in [0, 9): p / 3 and p % 3 map 0,1,2 -> -1,0,1. Index order is
// therefore lexicographic over (c1, c2).
inline int first_of(int p) { return p / 3 - 1; }
inline int second_of(int p) { return p % 3 - 1; }

}  // namespace

OracleResult global_optimum_row(std::span<const double> w, double lambda) {
    const std::size_t d = w.size();
    if (d > kMaxRowLength) {
        throw ArgumentError("oracle: row length " + std::to_string(d) + " exceeds " +
                            std::to_string(kMaxRowLength));
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ArgumentError("oracle: lambda must be finite and > 0");
    }

    std::uint64_t total = 1;
    for (std::size_t j = 0; j < d; ++j) total *= 9;

    OracleResult best;
    bool have_best = false;
    int best_l1 = 0;
    std::vector<int> best_pairs(d, 0);
    std::vector<int> pairs(d, 0);  // mixed-radix counter, element 0 most significant

    for (std::uint64_t code = 0; code < total; ++code) {
        // Normal equations by direct summation.
        double g11 = lambda, g12 = 0.0, g22 = lambda, r1 = 0.0, r2 = 0.0;
        int l1 = 0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c1 = first_of(pairs[j]);
            const double c2 = second_of(pairs[j]);
            g11 += c1 * c1;
            g12 += c1 * c2;
            g22 += c2 * c2;
            r1 += c1 * w[j];
            r2 += c2 * w[j];
            l1 += std::abs(first_of(pairs[j])) + std::abs(second_of(pairs[j]));
        }
        // Cramer's rule; the system is positive definite for lambda > 0.
        const double det = g11 * g22 - g12 * g12;
        const double a1 = (r1 * g22 - g12 * r2) / det;
        const double a2 = (g11 * r2 - g12 * r1) / det;
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double r = w[j] - (a1 * first_of(pairs[j]) + a2 * second_of(pairs[j]));
            sq += r * r;
        }
        const double obj = sq + lambda * (a1 * a1 + a2 * a2);

        // Enumeration runs in lexicographic order, so an exact tie with equal
        // L1 weight keeps the earlier candidate.
        if (!have_best || obj < best.objective || (obj == best.objective && l1 < best_l1)) {
            have_best = true;
            best.objective = obj;
            best.squared_error = sq;
            best.alpha = {a1, a2};
            best_l1 = l1;
            best_pairs = pairs;
        }

        for (std::size_t j = d; j-- > 0;) {
            if (++pairs[j] < 9) break;
            pairs[j] = 0;
        }
    }

    best.enumerated = total;
    best.plane1.resize(d);
    best.plane2.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        best.plane1[j] = static_cast<Trit>(first_of(best_pairs[j]));
        best.plane2[j] = static_cast<Trit>(second_of(best_pairs[j]));
    }
    return best;
}

double naive_reconstruct_error(const WeightMatrix& w, const QuantizedLayer& q) {
    const std::size_t n = q.layout.n();
    const std::size_t d = q.layout.d();
    const std::size_t group = q.layout.group_size();
    if (w.rows() != n || w.cols() != d) {
        throw DimensionError("naive_reconstruct_error: shape mismatch");
    }
    const std::size_t gpr = (d + group - 1) / group;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const std::size_t g = i * gpr + j / group;
            const std::size_t c = j % group;
            const double approx = q.scale1.values.at(g) * q.plane1(g, c) +
                                  q.scale2.values.at(g) * q.plane2(g, c);
            const double diff = w(i, j) - approx;
            sum += diff * diff;
        }
    }
    return std::sqrt(sum);
}

}  // namespace ptqtp::oracle
