// SPDX-License-Identifier: Apache-2.0
#include <random>
#include <string>

#include "ptqtp/app.hpp"
#include "ptqtp/decomposer.hpp"
#include "ptqtp/memory_model.hpp"

namespace ptqtp::app {

Distribution parse_distribution(std::string_view name) {
    if (name == "zeros") return Distribution::Zeros;
    if (name == "gaussian") return Distribution::Gaussian;
    if (name == "representable") return Distribution::Representable;
    throw ArgumentError("unknown distribution '" + std::string(name) +
                        "' (expected zeros, gaussian or representable)");
}

WeightMatrix generate_matrix(std::size_t n, std::size_t d, Distribution dist, std::uint64_t seed) {
    WeightMatrix w(n, d);
    std::mt19937_64 rng(seed);
    switch (dist) {
        case Distribution::Zeros:
            break;
        case Distribution::Gaussian: {
            std::normal_distribution<double> normal(0.0, 1.0);
            for (auto& v : w.data()) v = normal(rng);
            break;
        }
        case Distribution::Representable: {
            std::uniform_int_distribution<int> trit(-1, 1);
            for (auto& v : w.data()) {
                const int t1 = trit(rng);
                const int t2 = trit(rng);
                v = 2.0 * t1 + 1.0 * t2;
            }
            break;
        }
    }
    return w;
}

nlohmann::json config_to_json(const DecomposeConfig& cfg) {
    return {
        {"group_size", cfg.group_size},
        {"max_iterations", cfg.max_iterations},
        {"tolerance", cfg.tolerance},
        {"lambda_init", cfg.lambda_init},
        {"lambda_max", cfg.lambda_max},
        {"condition_threshold", cfg.condition_threshold},
        {"final_refit", cfg.final_refit},
    };
}

nlohmann::json layer_stats(const WeightMatrix& w, const QuantizedLayer& q) {
    const WeightMatrix w_hat = reconstruct(q);
    const double err = frobenius_error(w, w_hat);
    const double norm = frobenius_norm(w);
    const auto n = q.layout.n();
    const auto d = q.layout.d();
    const Bits bits = ptqtp_memory_bits(n, d, q.layout.group_size());
    const Bits fp16 = fp16_memory_bits(n, d);

    nlohmann::json j;
    j["n"] = n;
    j["d"] = d;
    j["group_size"] = q.layout.group_size();
    j["iterations"] = q.meta.iterations;
    j["final_error"] = err;
    j["weight_norm"] = norm;
    if (err == 0.0) {
        j["relative_error"] = 0.0;
    } else if (norm > 0.0) {
        j["relative_error"] = err / norm;
    } else {
        j["relative_error"] = nullptr;
    }
    j["sparsity1"] = sparsity(q.plane1, q.layout);
    j["sparsity2"] = sparsity(q.plane2, q.layout);
    j["memory_bits"] = bits;
    j["fp16_bits"] = fp16;
    j["compression_ratio"] = static_cast<double>(fp16) / static_cast<double>(bits);
    return j;
}

}  // namespace ptqtp::app
