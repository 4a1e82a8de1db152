// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ptqtp/app.hpp"
#include "ptqtp/decomposer.hpp"
#include "ptqtp/kernel.hpp"
#include "ptqtp/memory_model.hpp"
#include "ptqtp/oracle.hpp"
#include "ptqtp/storage.hpp"

namespace ptqtp::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct ConfigFlags {
    DecomposeConfig cfg;
    std::size_t threads = 0;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--group", cfg.group_size, "Columns per group (G)")->capture_default_str();
        cmd.add_option("--tmax", cfg.max_iterations, "Maximum iterations")->capture_default_str();
        cmd.add_option("--eps", cfg.tolerance, "Convergence tolerance on max |delta alpha|")
            ->capture_default_str();
        cmd.add_option("--lambda-init", cfg.lambda_init, "Initial ridge lambda")
            ->capture_default_str();
        cmd.add_option("--lambda-max", cfg.lambda_max, "Upper clamp for lambda")
            ->capture_default_str();
        cmd.add_option("--cond-threshold", cfg.condition_threshold,
                       "Condition estimate that triggers lambda escalation")
            ->capture_default_str();
        cmd.add_flag("--final-refit", cfg.final_refit, "Refit scales after the last trit update");
        cmd.add_option("--threads", threads, "Worker threads (0: PTQTP_THREADS or 1)")
            ->capture_default_str();
    }

    DecomposeConfig resolved() const {
        DecomposeConfig c = cfg;
        c.threads = threads == 0 ? default_thread_count() : threads;
        c.validate();
        return c;
    }
};

WeightMatrix load_tensor(const fs::path& path) { return read_tensor(read_file(path)); }
QuantizedLayer load_layer(const fs::path& path) { return read_quantized(read_file(path)); }

json read_json_file(const fs::path& path) {
    const auto bytes = read_file(path);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

fs::path resolve(const fs::path& base_dir, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
}

// Decomposes `w`, rounds the scales to their stored precision and returns the
// stored layer together with its run report.
std::pair<QuantizedLayer, json> quantize_matrix(const WeightMatrix& w, const DecomposeConfig& cfg) {
    const auto start = Clock::now();
    auto [q, trace] = decompose(w, cfg);
    const double wall = seconds_since(start);
    const double fp64_error = q.meta.final_error;
    QuantizedLayer stored = with_half_scales(std::move(q));
    json stats = layer_stats(w, stored);
    stored.meta.final_error = stats["final_error"].get<double>();

    json report;
    report["schema"] = kRunReportSchema;
    report["config"] = config_to_json(cfg);
    report["iterations"] = stored.meta.iterations;
    report["converged"] = stored.meta.converged;
    report["final_error"] = stats["final_error"];
    report["final_error_unrounded"] = fp64_error;
    report["relative_error"] = stats["relative_error"];
    report["sparsity1"] = stats["sparsity1"];
    report["sparsity2"] = stats["sparsity2"];
    report["memory_bits"] = stats["memory_bits"];
    report["compression_ratio"] = stats["compression_ratio"];
    report["wall_time_s"] = wall;
    return {std::move(stored), std::move(report)};
}

void write_json_file(const fs::path& path, const json& j) {
    const std::string text = j.dump(2) + "\n";
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                      text.size()));
}

double parse_number(const std::string& s, const char* what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) {
        throw ArgumentError(std::string(what) + ": cannot parse '" + s + "'");
    }
    return v;
}

TensorDType parse_dtype(const std::string& s) {
    if (s == "f32") return TensorDType::Float32;
    if (s == "f16") return TensorDType::Float16;
    throw ArgumentError("unknown dtype '" + s + "' (expected f32 or f16)");
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 2;
    return v.size() % 2 == 1 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Regularized objective of a decomposed single row, computed locally so the
// oracle check does not lean on the library's own bookkeeping.
double row_objective(std::span<const double> w, const QuantizedLayer& q) {
    const double a1 = q.scale1.values[0];
    const double a2 = q.scale2.values[0];
    double sq = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double r = w[j] - (a1 * q.plane1(0, j) + a2 * q.plane2(0, j));
        sq += r * r;
    }
    return sq + q.meta.lambdas[0] * (a1 * a1 + a2 * a2);
}

std::vector<LayerShape> shapes_from_json(const json& j) {
    std::vector<LayerShape> shapes;
    try {
        for (const auto& e : j.at("layers")) {
            LayerShape s;
            s.name = e.value("name", "");
            s.n = e.at("n").get<std::uint64_t>();
            s.d = e.at("d").get<std::uint64_t>();
            s.quantized = e.value("quantized", true);
            s.count = e.value("count", std::uint64_t{1});
            if (s.n == 0 || s.d == 0) throw DataError("layer '" + s.name + "' has a zero extent");
            shapes.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("shape manifest: ") + e.what());
    }
    return shapes;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Ternary trit-plane post-training quantization", "ptqtp"};
    app.require_subcommand(1);
    std::function<int()> action;

    // gen
    struct {
        std::vector<std::size_t> shape;
        std::string dist = "gaussian";
        std::uint64_t seed = 0;
        std::string out;
        std::string dtype = "f32";
    } gen;
    auto* gen_cmd = app.add_subcommand("gen", "Write a seeded fixture matrix as FPT1");
    gen_cmd->add_option("--shape", gen.shape, "Rows and columns")->expected(2)->required();
    gen_cmd->add_option("--dist", gen.dist, "zeros | gaussian | representable")
        ->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "Output FPT1 path")->required();
    gen_cmd->add_option("--dtype", gen.dtype, "f32 | f16")->capture_default_str();
    gen_cmd->callback([&] {
        action = [&] {
            const auto dist = parse_distribution(gen.dist);
            const auto dtype = parse_dtype(gen.dtype);
            if (gen.shape[0] == 0 || gen.shape[1] == 0) throw ArgumentError("shape must be >= 1");
            const auto w = generate_matrix(gen.shape[0], gen.shape[1], dist, gen.seed);
            write_file_atomic(gen.out, write_tensor(w, dtype));
            return kExitOk;
        };
    });

    // quantize
    ConfigFlags qflags;
    struct {
        std::string input, output, report, manifest, output_dir;
    } quant;
    auto* quant_cmd = app.add_subcommand("quantize", "Decompose an FPT1 matrix into a PTQ1 layer");
    quant_cmd->add_option("--input", quant.input, "Input FPT1 path");
    quant_cmd->add_option("--output", quant.output, "Output PTQ1 path");
    quant_cmd->add_option("--report", quant.report, "Write the JSON run report here");
    quant_cmd->add_option("--manifest", quant.manifest,
                          "JSON layer manifest {\"layers\":[{\"name\",\"path\"}]}");
    quant_cmd->add_option("--output-dir", quant.output_dir, "Output directory for --manifest");
    qflags.add_to(*quant_cmd);
    quant_cmd->callback([&] {
        action = [&] {
            const DecomposeConfig cfg = qflags.resolved();
            if (!quant.manifest.empty()) {
                if (quant.output_dir.empty() || !quant.input.empty() || !quant.output.empty()) {
                    throw ArgumentError("--manifest needs --output-dir and excludes --input/--output");
                }
                const fs::path mpath(quant.manifest);
                const json manifest = read_json_file(mpath);
                const fs::path base = mpath.parent_path();
                fs::create_directories(quant.output_dir);
                json reports = json::array();
                json pairs = json::array();
                try {
                    for (const auto& entry : manifest.at("layers")) {
                        const auto name = entry.at("name").get<std::string>();
                        const fs::path in = resolve(base, entry.at("path").get<std::string>());
                        const fs::path outp = fs::path(quant.output_dir) / (name + ".ptq");
                        const auto w = load_tensor(in);
                        auto [layer, report] = quantize_matrix(w, cfg);
                        write_file_atomic(outp, write_quantized(layer));
                        report["name"] = name;
                        report["input"] = {{"path", in.string()}, {"n", w.rows()}, {"d", w.cols()}};
                        report["output"] = outp.string();
                        reports.push_back(std::move(report));
                        pairs.push_back({{"name", name},
                                         {"weights", fs::absolute(in).string()},
                                         {"quantized", fs::absolute(outp).string()}});
                    }
                } catch (const json::exception& e) {
                    throw DataError(std::string("layer manifest: ") + e.what());
                }
                write_json_file(fs::path(quant.output_dir) / "manifest.json", {{"layers", pairs}});
                if (!quant.report.empty()) {
                    write_json_file(quant.report, {{"schema", kRunReportSchema}, {"layers", reports}});
                }
                return kExitOk;
            }
            if (quant.input.empty() || quant.output.empty()) {
                throw ArgumentError("quantize needs --input and --output (or --manifest)");
            }
            const auto w = load_tensor(quant.input);
            auto [layer, report] = quantize_matrix(w, cfg);
            write_file_atomic(quant.output, write_quantized(layer));
            report["input"] = {{"path", quant.input}, {"n", w.rows()}, {"d", w.cols()}};
            report["output"] = quant.output;
            if (!quant.report.empty()) write_json_file(quant.report, report);
            return kExitOk;
        };
    });

    // dequantize
    struct {
        std::string input, output, dtype = "f32";
    } deq;
    auto* deq_cmd = app.add_subcommand("dequantize", "Expand a PTQ1 layer to a dense FPT1 matrix");
    deq_cmd->add_option("--input", deq.input, "Input PTQ1 path")->required();
    deq_cmd->add_option("--output", deq.output, "Output FPT1 path")->required();
    deq_cmd->add_option("--dtype", deq.dtype, "f32 | f16")->capture_default_str();
    deq_cmd->callback([&] {
        action = [&] {
            const auto dtype = parse_dtype(deq.dtype);
            const auto q = load_layer(deq.input);
            write_file_atomic(deq.output, write_tensor(reconstruct(q), dtype));
            return kExitOk;
        };
    });

    // stats
    struct {
        std::string weights, quantized, manifest;
    } st;
    auto* stats_cmd = app.add_subcommand("stats", "Error, sparsity and memory summary as JSON");
    stats_cmd->add_option("--weights", st.weights, "Original FPT1 path");
    stats_cmd->add_option("--quantized", st.quantized, "PTQ1 path");
    stats_cmd->add_option("--manifest", st.manifest,
                          "JSON manifest {\"layers\":[{\"name\",\"weights\",\"quantized\"}]}");
    stats_cmd->callback([&] {
        action = [&] {
            if (!st.manifest.empty()) {
                const fs::path mpath(st.manifest);
                const json manifest = read_json_file(mpath);
                json layers = json::array();
                double err_sq = 0.0, norm_sq = 0.0;
                Bits bits = 0, fp16 = 0;
                try {
                    for (const auto& entry : manifest.at("layers")) {
                        const auto w = load_tensor(
                            resolve(mpath.parent_path(), entry.at("weights").get<std::string>()));
                        const auto q = load_layer(
                            resolve(mpath.parent_path(), entry.at("quantized").get<std::string>()));
                        json s = layer_stats(w, q);
                        s["name"] = entry.value("name", "");
                        err_sq += std::pow(s["final_error"].get<double>(), 2);
                        norm_sq += std::pow(s["weight_norm"].get<double>(), 2);
                        bits += s["memory_bits"].get<Bits>();
                        fp16 += s["fp16_bits"].get<Bits>();
                        layers.push_back(std::move(s));
                    }
                } catch (const json::exception& e) {
                    throw DataError(std::string("stats manifest: ") + e.what());
                }
                json total{{"final_error", std::sqrt(err_sq)},
                           {"memory_bits", bits},
                           {"fp16_bits", fp16}};
                total["relative_error"] =
                    err_sq == 0.0 ? json(0.0)
                                  : (norm_sq > 0.0 ? json(std::sqrt(err_sq / norm_sq)) : json());
                total["compression_ratio"] =
                    bits == 0 ? json() : json(static_cast<double>(fp16) / static_cast<double>(bits));
                out << json{{"schema", kStatsSchema}, {"layers", layers}, {"total", total}}.dump(2)
                    << "\n";
                return kExitOk;
            }
            if (st.weights.empty() || st.quantized.empty()) {
                throw ArgumentError("stats needs --weights and --quantized (or --manifest)");
            }
            const auto w = load_tensor(st.weights);
            const auto q = load_layer(st.quantized);
            if (w.rows() != q.layout.n() || w.cols() != q.layout.d()) {
                throw DimensionError("stats: weights are " + std::to_string(w.rows()) + "x" +
                                     std::to_string(w.cols()) + " but layer is " +
                                     std::to_string(q.layout.n()) + "x" +
                                     std::to_string(q.layout.d()));
            }
            json s = layer_stats(w, q);
            s["schema"] = kStatsSchema;
            s["stored_final_error"] = q.meta.final_error;
            out << s.dump(2) << "\n";
            return kExitOk;
        };
    });

    // sweep
    ConfigFlags sflags;
    struct {
        std::string param, input, csv;
        std::vector<std::string> values;
        std::size_t repeats = 3;
    } sw;
    auto* sweep_cmd = app.add_subcommand("sweep", "Ablation sweep over one parameter, CSV output");
    sweep_cmd->add_option("--param", sw.param, "iters | eps | cond-threshold")->required();
    sweep_cmd->add_option("--values", sw.values, "Comma-separated parameter values")
        ->delimiter(',')
        ->required();
    sweep_cmd->add_option("--input", sw.input, "Input FPT1 path")->required();
    sweep_cmd->add_option("--csv", sw.csv, "Output CSV path")->required();
    sweep_cmd->add_option("--repeats", sw.repeats, "Timed runs per value (median reported)")
        ->capture_default_str();
    sflags.add_to(*sweep_cmd);
    sweep_cmd->callback([&] {
        action = [&] {
            if (sw.param != "iters" && sw.param != "eps" && sw.param != "cond-threshold") {
                throw ArgumentError("unknown sweep parameter '" + sw.param + "'");
            }
            if (sw.repeats == 0) throw ArgumentError("--repeats must be >= 1");
            std::vector<DecomposeConfig> configs;
            for (const auto& s : sw.values) {
                DecomposeConfig c = sflags.resolved();
                const double v = parse_number(s, "--values");
                if (sw.param == "iters") {
                    if (!(v >= 1.0) || v != std::floor(v)) {
                        throw ArgumentError("iters values must be integers >= 1");
                    }
                    c.max_iterations = static_cast<std::size_t>(v);
                } else if (sw.param == "eps") {
                    c.tolerance = v;
                } else {
                    c.condition_threshold = v;
                }
                c.validate();
                configs.push_back(c);
            }
            const auto w = load_tensor(sw.input);
            std::ostringstream csv;
            csv << kSweepCsvHeader << "\n";
            for (std::size_t k = 0; k < configs.size(); ++k) {
                std::vector<double> times;
                QuantizedLayer q;
                for (std::size_t r = 0; r < sw.repeats; ++r) {
                    const auto start = Clock::now();
                    q = decompose(w, configs[k]).first;
                    times.push_back(seconds_since(start));
                }
                csv << sw.values[k] << "," << q.meta.iterations << ","
                    << format_double(q.meta.final_error) << "," << format_double(median(times))
                    << "\n";
            }
            const std::string text = csv.str();
            write_file_atomic(sw.csv, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                                text.size()));
            return kExitOk;
        };
    });

    // bench
    struct {
        std::size_t n = 512, d = 512, group = 128, reps = 100;
        std::uint64_t seed = 0;
    } bn;
    auto* bench_cmd = app.add_subcommand("bench", "Dense vs ternary matvec timing as JSON");
    bench_cmd->add_option("--n", bn.n, "Output rows")->capture_default_str();
    bench_cmd->add_option("--d", bn.d, "Input columns")->capture_default_str();
    bench_cmd->add_option("--group", bn.group, "Group size")->capture_default_str();
    bench_cmd->add_option("--reps", bn.reps, "Timed repetitions")->capture_default_str();
    bench_cmd->add_option("--seed", bn.seed, "RNG seed")->capture_default_str();
    bench_cmd->callback([&] {
        action = [&] {
            const BenchReport r = bench_matvec(bn.n, bn.d, bn.group, bn.reps, bn.seed);
            out << json{{"schema", kBenchSchema},
                        {"n", r.n},
                        {"d", r.d},
                        {"G", r.group_size},
                        {"reps", r.reps},
                        {"ns_dense", r.ns_dense},
                        {"ns_ternary", r.ns_ternary},
                        {"ratio", r.ratio},
                        {"sparsity1", r.sparsity1},
                        {"sparsity2", r.sparsity2},
                        {"max_rel_diff", r.max_rel_diff}}
                       .dump(2)
                << "\n";
            return kExitOk;
        };
    });

    // oracle-check
    struct {
        std::size_t rows = 100, len = 4;
        std::uint64_t seed = 0;
    } oc;
    auto* oracle_cmd =
        app.add_subcommand("oracle-check", "Check decomposer rows against exhaustive search");
    oracle_cmd->add_option("--rows", oc.rows, "Number of random rows")->capture_default_str();
    oracle_cmd->add_option("--len", oc.len, "Row length (<= 6)")->capture_default_str();
    oracle_cmd->add_option("--seed", oc.seed, "RNG seed")->capture_default_str();
    oracle_cmd->callback([&] {
        action = [&] {
            if (oc.len == 0 || oc.len > oracle::kMaxRowLength) {
                throw ArgumentError("--len must be in [1, " +
                                    std::to_string(oracle::kMaxRowLength) + "]");
            }
            DecomposeConfig cfg;
            cfg.group_size = oc.len;
            std::mt19937_64 rng(oc.seed);
            std::normal_distribution<double> normal(0.0, 1.0);
            std::size_t violations = 0;
            double max_gap = 0.0, sum_gap = 0.0;
            for (std::size_t r = 0; r < oc.rows; ++r) {
                std::vector<double> row(oc.len);
                for (auto& v : row) v = normal(rng);
                const auto q = decompose(WeightMatrix(1, oc.len, row), cfg).first;
                const double got = row_objective(row, q);
                const auto best = oracle::global_optimum_row(row, q.meta.lambdas[0]);
                const double gap = got - best.objective;
                if (gap < -1e-9) ++violations;
                max_gap = std::max(max_gap, gap);
                sum_gap += gap;
            }
            out << json{{"schema", kOracleSchema},
                        {"rows", oc.rows},
                        {"len", oc.len},
                        {"seed", oc.seed},
                        {"violations", violations},
                        {"max_gap", max_gap},
                        {"mean_gap", oc.rows == 0 ? 0.0 : sum_gap / static_cast<double>(oc.rows)}}
                       .dump(2)
                << "\n";
            return violations == 0 ? kExitOk : kExitCheckFailed;
        };
    });

    // memory
    struct {
        std::string manifest, preset, method = "ptqtp-grouped";
        std::uint64_t group = 128;
    } mem;
    auto* mem_cmd = app.add_subcommand("memory", "Model memory footprint from layer shapes");
    mem_cmd->add_option("--manifest", mem.manifest,
                        "JSON {\"layers\":[{\"name\",\"n\",\"d\",\"quantized\",\"count\"}]}");
    mem_cmd->add_option("--preset", mem.preset, "llama-7b | llama-13b");
    mem_cmd->add_option("--method", mem.method, "fp16 | ptqtp | ptqtp-grouped")
        ->capture_default_str();
    mem_cmd->add_option("--group", mem.group, "Group size for ptqtp-grouped")->capture_default_str();
    mem_cmd->callback([&] {
        action = [&] {
            const auto method = parse_memory_method(mem.method);
            if (mem.group == 0) throw ArgumentError("--group must be >= 1");
            std::vector<LayerShape> shapes;
            if (!mem.manifest.empty() == !mem.preset.empty()) {
                throw ArgumentError("memory needs exactly one of --manifest or --preset");
            }
            if (mem.preset == "llama-7b") {
                shapes = llama_shapes(4096, 11008, 32, 32000);
            } else if (mem.preset == "llama-13b") {
                shapes = llama_shapes(5120, 13824, 40, 32000);
            } else if (!mem.preset.empty()) {
                throw ArgumentError("unknown preset '" + mem.preset + "'");
            } else {
                shapes = shapes_from_json(read_json_file(mem.manifest));
            }
            const MemoryReport r = model_memory_report(shapes, method, mem.group);
            out << json{{"schema", kMemorySchema},
                        {"method", to_string(method)},
                        {"group_size", mem.group},
                        {"total_bits", r.total_bits},
                        {"gigabytes", r.gigabytes()},
                        {"gibibytes", r.gibibytes()}}
                       .dump(2)
                << "\n";
            return kExitOk;
        };
    });

    std::vector<std::string> rev(args.empty() ? args.end() : args.begin() + 1, args.end());
    std::reverse(rev.begin(), rev.end());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsageError;
    }

    try {
        return action ? action() : kExitUsageError;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsageError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitDataError;
    }
}

}  // namespace ptqtp::app
