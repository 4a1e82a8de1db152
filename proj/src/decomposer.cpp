// SPDX-License-Identifier: Apache-2.0
#include "ptqtp/decomposer.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <string>

#include "parallel.hpp"

namespace ptqtp {

namespace {

struct TritPair {
    Trit c1;
    Trit c2;
};

// Candidate order encodes the tie-break: L1 weight first, then lexicographic.
constexpr std::array<TritPair, 9> kCandidates{{
    {0, 0},
    {-1, 0}, {0, -1}, {0, 1}, {1, 0},
    {-1, -1}, {-1, 1}, {1, -1}, {1, 1},
}};

inline double pair_value(const Vec2& alpha, Trit c1, Trit c2) noexcept {
    return alpha[0] * c1 + alpha[1] * c2;
}

double row_squared_error(std::span<const double> w, const Vec2& alpha, std::span<const Trit> t1,
                         std::span<const Trit> t2) {
    double sum = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double r = w[j] - pair_value(alpha, t1[j], t2[j]);
        sum += r * r;
    }
    return sum;
}

std::size_t resolve_threads(const DecomposeConfig& cfg) {
    return cfg.threads == 0 ? default_thread_count() : cfg.threads;
}

}  // namespace

void DecomposeConfig::validate() const {
    if (group_size < 1) throw ArgumentError("group_size must be >= 1");
    if (max_iterations < 1) throw ArgumentError("max_iterations must be >= 1");
    if (!(tolerance > 0.0) || !std::isfinite(tolerance)) {
        throw ArgumentError("tolerance must be finite and > 0");
    }
    if (!(lambda_init > 0.0) || !std::isfinite(lambda_init)) {
        throw ArgumentError("lambda_init must be finite and > 0");
    }
    if (!(lambda_max >= lambda_init) || !std::isfinite(lambda_max)) {
        throw ArgumentError("lambda_max must be finite and >= lambda_init");
    }
    if (!(condition_threshold > 0.0) || std::isnan(condition_threshold)) {
        throw ArgumentError("condition_threshold must be > 0");
    }
}

std::size_t default_thread_count() {
    if (const char* env = std::getenv("PTQTP_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return 1;
}

InitialState init_planes(const WeightMatrix& grouped, const GroupLayout& layout,
                         const DecomposeConfig& cfg) {
    if (grouped.rows() != layout.grouped_rows() || grouped.cols() != layout.group_size()) {
        throw DimensionError("init_planes: grouped shape does not match layout");
    }
    require_finite(grouped.data(), "init_planes");
    const std::size_t m = grouped.rows();
    InitialState s{TritPlane(m, grouped.cols()), TritPlane(m, grouped.cols()),
                   std::vector<Vec2>(m, Vec2{1.0, 1.0}), std::vector<double>(m, cfg.lambda_init)};
    for (std::size_t g = 0; g < m; ++g) {
        const std::size_t width = layout.width(g);
        for (std::size_t c = 0; c < width; ++c) {
            const Trit t = grouped(g, c) < 0.0 ? Trit{-1} : Trit{1};
            s.plane1(g, c) = t;
            s.plane2(g, c) = t;
        }
    }
    return s;
}

double adapt_lambda(double lambda, double kappa, const DecomposeConfig& cfg) {
    if (kappa < cfg.condition_threshold) return lambda;
    const double raised = lambda * std::sqrt(kappa / cfg.condition_threshold);
    return std::min(raised, cfg.lambda_max);
}

void update_trits_row(std::span<const double> w, const Vec2& alpha, std::size_t width,
                      std::span<Trit> t1, std::span<Trit> t2) {
    if (t1.size() != w.size() || t2.size() != w.size()) {
        throw DimensionError("update_trits_row: plane rows must match target length");
    }
    std::array<double, kCandidates.size()> values;
    for (std::size_t k = 0; k < kCandidates.size(); ++k) {
        values[k] = pair_value(alpha, kCandidates[k].c1, kCandidates[k].c2);
    }
    const std::size_t live = std::min(width, w.size());
    for (std::size_t j = 0; j < live; ++j) {
        std::size_t best = 0;
        double best_err = (w[j] - values[0]) * (w[j] - values[0]);
        for (std::size_t k = 1; k < values.size(); ++k) {
            const double r = w[j] - values[k];
            const double err = r * r;
            if (err < best_err) {
                best_err = err;
                best = k;
            }
        }
        t1[j] = kCandidates[best].c1;
        t2[j] = kCandidates[best].c2;
    }
    for (std::size_t j = live; j < w.size(); ++j) {
        t1[j] = 0;
        t2[j] = 0;
    }
}

std::pair<std::vector<Trit>, std::vector<Trit>> update_trits_row(std::span<const double> w,
                                                                 const Vec2& alpha) {
    std::vector<Trit> t1(w.size());
    std::vector<Trit> t2(w.size());
    update_trits_row(w, alpha, w.size(), t1, t2);
    return {std::move(t1), std::move(t2)};
}

std::pair<QuantizedLayer, IterationTrace> decompose(const WeightMatrix& w,
                                                     const DecomposeConfig& cfg) {
    cfg.validate();
    require_finite(w.data(), "decompose");
    const auto [grouped, layout] = group_reshape(w, cfg.group_size);
    return decompose_grouped(grouped, layout, init_planes(grouped, layout, cfg), cfg);
}

std::pair<QuantizedLayer, IterationTrace> decompose_grouped(const WeightMatrix& grouped,
                                                            const GroupLayout& layout,
                                                            InitialState state,
                                                            const DecomposeConfig& cfg) {
    cfg.validate();
    require_finite(grouped.data(), "decompose");
    const std::size_t m = layout.grouped_rows();
    if (grouped.rows() != m || grouped.cols() != layout.group_size() ||
        layout.group_size() != cfg.group_size || state.plane1.rows() != m ||
        state.plane2.rows() != m || state.plane1.cols() != grouped.cols() ||
        state.plane2.cols() != grouped.cols() || state.alphas.size() != m ||
        state.lambdas.size() != m) {
        throw DimensionError("decompose_grouped: state does not match layout");
    }
    for (std::size_t g = 0; g < m; ++g) {
        if (!(state.lambdas[g] > 0.0)) throw ArgumentError("decompose_grouped: lambda must be > 0");
        for (std::size_t c = layout.width(g); c < layout.group_size(); ++c) {
            if (state.plane1(g, c) != 0 || state.plane2(g, c) != 0) {
                throw ArgumentError("decompose_grouped: nonzero trit in padding");
            }
        }
    }
    const std::size_t workers = resolve_threads(cfg);

    std::vector<Vec2>& alphas = state.alphas;
    std::vector<double>& lambdas = state.lambdas;
    std::vector<double> row_err(m, 0.0);
    std::vector<double> row_delta(m, 0.0);
    std::vector<unsigned char> escalated(m, 0);

    auto alpha_step = [&](std::size_t begin, std::size_t end) {
        for (std::size_t g = begin; g < end; ++g) {
            const TritBasis basis{state.plane1.row(g), state.plane2.row(g)};
            RidgeSystem sys(basis, grouped.row(g), lambdas[g]);
            const double kappa = condition_estimate(sys.matrix());
            const double lambda = adapt_lambda(lambdas[g], kappa, cfg);
            escalated[g] = lambda != lambdas[g];
            if (escalated[g]) {
                sys.set_lambda(lambda);
                lambdas[g] = lambda;
            }
            const Vec2 next = sys.solve();
            row_delta[g] = std::hypot(next[0] - alphas[g][0], next[1] - alphas[g][1]);
            alphas[g] = next;
            row_err[g] = row_squared_error(grouped.row(g), next, basis.col1, basis.col2);
        }
    };
    auto trit_step = [&](std::size_t begin, std::size_t end) {
        for (std::size_t g = begin; g < end; ++g) {
            update_trits_row(grouped.row(g), alphas[g], layout.width(g), state.plane1.row(g),
                             state.plane2.row(g));
            row_err[g] =
                row_squared_error(grouped.row(g), alphas[g], state.plane1.row(g), state.plane2.row(g));
        }
    };
    // Sequential in row order so totals do not depend on the worker count.
    auto total = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    };

    IterationTrace trace;
    LayerMeta meta;
    meta.config = cfg;
    double err_sq = 0.0;
    for (std::size_t t = 1; t <= cfg.max_iterations; ++t) {
        detail::parallel_for(m, workers, alpha_step);
        IterationRecord rec;
        rec.iteration = t;
        rec.error_after_alpha = std::sqrt(total(row_err));
        for (std::size_t g = 0; g < m; ++g) {
            rec.max_delta_alpha = std::max(rec.max_delta_alpha, row_delta[g]);
            rec.lambda_escalations += escalated[g];
        }
        if (t == 1) trace.initial_error = rec.error_after_alpha;

        detail::parallel_for(m, workers, trit_step);
        err_sq = total(row_err);
        rec.error_after_trits = std::sqrt(err_sq);
        trace.records.push_back(rec);

        meta.iterations = t;
        meta.final_delta_alpha = rec.max_delta_alpha;
        if (rec.max_delta_alpha < cfg.tolerance || err_sq == 0.0) {
            meta.converged = true;
            break;
        }
    }
    if (cfg.final_refit) {
        detail::parallel_for(m, workers, alpha_step);
        err_sq = total(row_err);
    }
    meta.final_error = std::sqrt(err_sq);
    meta.lambdas = lambdas;

    QuantizedLayer q;
    q.layout = layout;
    q.plane1 = std::move(state.plane1);
    q.plane2 = std::move(state.plane2);
    q.scale1.plane_index = 1;
    q.scale2.plane_index = 2;
    q.scale1.values.resize(m);
    q.scale2.values.resize(m);
    for (std::size_t g = 0; g < m; ++g) {
        q.scale1.values[g] = alphas[g][0];
        q.scale2.values[g] = alphas[g][1];
    }
    q.meta = std::move(meta);
    return {std::move(q), std::move(trace)};
}

WeightMatrix reconstruct(const QuantizedLayer& q) {
    q.validate();
    const GroupLayout& layout = q.layout;
    WeightMatrix grouped(layout.grouped_rows(), layout.group_size());
    for (std::size_t g = 0; g < layout.grouped_rows(); ++g) {
        const Vec2 alpha{q.scale1.values[g], q.scale2.values[g]};
        for (std::size_t c = 0; c < layout.width(g); ++c) {
            grouped(g, c) = pair_value(alpha, q.plane1(g, c), q.plane2(g, c));
        }
    }
    return ungroup(grouped, layout);
}

}  // namespace ptqtp
