// SPDX-License-Identifier: Apache-2.0
//
// Alternating decomposition of a weight matrix into two trit-planes with
// per-group scales. Each iteration solves a 2x2 ridge system per grouped row
// for the scales (escalating lambda on ill-conditioned systems), then picks
// every trit pair by exhaustive search over {-1,0,1}^2 with the scales fixed.
#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "ptqtp/config.hpp"
#include "ptqtp/linalg.hpp"
#include "ptqtp/trit.hpp"

namespace ptqtp {

struct IterationRecord {
    std::size_t iteration = 0;      // 1-based
    double error_after_alpha = 0.0;  // ||W - W_hat||_F after the scale update
    double error_after_trits = 0.0;  // ||W - W_hat||_F after the trit update
    double max_delta_alpha = 0.0;    // max over grouped rows of ||alpha_t - alpha_{t-1}||_2
    std::size_t lambda_escalations = 0;
};

struct IterationTrace {
    std::vector<IterationRecord> records;
    // Error of the sign(W) planes with the first ridge solve.
    double initial_error = 0.0;
};

struct InitialState {
    TritPlane plane1;
    TritPlane plane2;
    std::vector<Vec2> alphas;
    std::vector<double> lambdas;
};

/// Both planes = sign(w) with sign(0) -> +1, padding -> 0. Scales (1,1).
InitialState init_planes(const WeightMatrix& grouped, const GroupLayout& layout,
                         const DecomposeConfig& cfg);

/// lambda * sqrt(kappa / threshold) once kappa reaches the threshold, clamped
/// to lambda_max; otherwise lambda unchanged.
double adapt_lambda(double lambda, double kappa, const DecomposeConfig& cfg);

/// Per-element search over the 9 trit pairs minimizing (w - a1 c1 - a2 c2)^2.
/// Ties go to the smaller |c1|+|c2|, then lexicographic (c1, c2) with
/// -1 < 0 < 1. Positions at or beyond `width` are padding and get (0, 0).
void update_trits_row(std::span<const double> w, const Vec2& alpha, std::size_t width,
                      std::span<Trit> t1, std::span<Trit> t2);
std::pair<std::vector<Trit>, std::vector<Trit>> update_trits_row(std::span<const double> w,
                                                                 const Vec2& alpha);

std::pair<QuantizedLayer, IterationTrace> decompose(const WeightMatrix& w,
                                                     const DecomposeConfig& cfg = {});

/// The iteration loop of decompose() on an already grouped matrix, starting
/// from an explicit state instead of init_planes(). `layout` must match
/// `grouped`; padding positions of `start` must hold zero trits.
std::pair<QuantizedLayer, IterationTrace> decompose_grouped(const WeightMatrix& grouped,
                                                            const GroupLayout& layout,
                                                            InitialState start,
                                                            const DecomposeConfig& cfg = {});

/// Dense n x d reconstruction.
WeightMatrix reconstruct(const QuantizedLayer& q);

/// Worker count used when cfg.threads == 0: PTQTP_THREADS if set, else 1.
std::size_t default_thread_count();

}  // namespace ptqtp
