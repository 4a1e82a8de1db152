// SPDX-License-Identifier: Apache-2.0
//
// Command-line frontend. Exit codes: 0 success, 1 check failed
// (oracle-check), 2 data error, 3 usage error.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ptqtp/config.hpp"
#include "ptqtp/linalg.hpp"
#include "ptqtp/trit.hpp"

#include <json.hpp>

namespace ptqtp::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitUsageError = 3;

inline constexpr std::string_view kRunReportSchema = "ptqtp.run_report/1";
inline constexpr std::string_view kStatsSchema = "ptqtp.stats/1";
inline constexpr std::string_view kBenchSchema = "ptqtp.bench/1";
inline constexpr std::string_view kOracleSchema = "ptqtp.oracle_check/1";
inline constexpr std::string_view kMemorySchema = "ptqtp.memory/1";
inline constexpr std::string_view kSweepCsvHeader = "value,iterations,final_error,wall_time_s";

/// Runs one CLI invocation; args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

enum class Distribution { Zeros, Gaussian, Representable };

Distribution parse_distribution(std::string_view name);

/// Seeded fixture matrix. Representable rows are 2*t1 + t2 for uniform
/// random trit rows t1, t2.
WeightMatrix generate_matrix(std::size_t n, std::size_t d, Distribution dist, std::uint64_t seed);

nlohmann::json config_to_json(const DecomposeConfig& cfg);

/// Error and sparsity summary of a layer against the weights it came from.
nlohmann::json layer_stats(const WeightMatrix& w, const QuantizedLayer& q);

}  // namespace ptqtp::app
