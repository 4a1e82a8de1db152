// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

namespace ptqtp {

/// Tunables of the trit-plane decomposition.
struct DecomposeConfig {
    std::size_t group_size = 128;
    std::size_t max_iterations = 50;
    double tolerance = 1e-4;
    double lambda_init = 1e-8;
    double lambda_max = 1.0;
    double condition_threshold = 1e12;
    // One more ridge pass after the last trit update.
    bool final_refit = false;
    // Worker count for the per-row maps; 0 picks PTQTP_THREADS or 1.
    std::size_t threads = 1;

    /// Throws ArgumentError describing the first violated constraint.
    void validate() const;
};

}  // namespace ptqtp
