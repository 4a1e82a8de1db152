// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ptqtp/app.hpp"
#include "ptqtp/storage.hpp"

namespace ptqtp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kGolden = PTQTP_GOLDEN_DIR;
const fs::path kData = PTQTP_DATA_DIR;

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ptqtp");
    std::ostringstream out, err;
    const int code = app::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("ptqtp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

std::string slurp(const std::string& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

TEST_F(CliTest, HelpAndUsageErrors) {
    EXPECT_EQ(cli({"--help"}).code, app::kExitOk);
    EXPECT_EQ(cli({}).code, app::kExitUsageError);
    EXPECT_EQ(cli({"frobnicate"}).code, app::kExitUsageError);
    EXPECT_EQ(cli({"gen", "--shape", "2"}).code, app::kExitUsageError);
    EXPECT_EQ(cli({"gen", "--shape", "2", "2", "--dist", "cauchy", "--out", path("x.fpt")}).code,
              app::kExitUsageError);
}

TEST_F(CliTest, MissingInputIsDataError) {
    const auto r = cli({"quantize", "--input", path("missing.fpt"), "--output", path("o.ptq")});
    EXPECT_EQ(r.code, app::kExitDataError);
    EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, InvalidConfigIsUsageError) {
    ASSERT_EQ(cli({"gen", "--shape", "2", "4", "--out", path("w.fpt")}).code, 0);
    EXPECT_EQ(cli({"quantize", "--input", path("w.fpt"), "--output", path("q.ptq"), "--eps", "0"}).code,
              app::kExitUsageError);
    EXPECT_EQ(cli({"quantize", "--input", path("w.fpt"), "--output", path("q.ptq"), "--group", "0"})
                  .code,
              app::kExitUsageError);
    EXPECT_FALSE(fs::exists(path("q.ptq")));
}

TEST_F(CliTest, CorruptInputIsDataError) {
    std::ofstream(path("bad.ptq")) << "not a layer";
    EXPECT_EQ(cli({"dequantize", "--input", path("bad.ptq"), "--output", path("o.fpt")}).code,
              app::kExitDataError);
}

TEST_F(CliTest, GenIsDeterministic) {
    ASSERT_EQ(cli({"gen", "--shape", "8", "16", "--seed", "5", "--out", path("a.fpt")}).code, 0);
    ASSERT_EQ(cli({"gen", "--shape", "8", "16", "--seed", "5", "--out", path("b.fpt")}).code, 0);
    ASSERT_EQ(cli({"gen", "--shape", "8", "16", "--seed", "6", "--out", path("c.fpt")}).code, 0);
    EXPECT_EQ(read_file(path("a.fpt")), read_file(path("b.fpt")));
    EXPECT_NE(read_file(path("a.fpt")), read_file(path("c.fpt")));
    const auto w = read_tensor(read_file(path("a.fpt")));
    EXPECT_EQ(w.rows(), 8u);
    EXPECT_EQ(w.cols(), 16u);
}

TEST_F(CliTest, DequantizeGoldenLayers) {
    ASSERT_EQ(cli({"dequantize", "--input", (kGolden / "sample_4x4_g4.ptq").string(), "--output",
                   path("s.fpt")})
                  .code,
              0);
    EXPECT_EQ(read_file(path("s.fpt")), read_file(kGolden / "sample_4x4.fpt"));
    ASSERT_EQ(cli({"dequantize", "--input", (kGolden / "ragged_2x5_g2.ptq").string(), "--output",
                   path("r.fpt")})
                  .code,
              0);
    EXPECT_EQ(read_file(path("r.fpt")), read_file(kGolden / "ragged_2x5.fpt"));
}

TEST_F(CliTest, QuantizeZeroMatrixMatchesGolden) {
    ASSERT_EQ(cli({"quantize", "--input", (kGolden / "zero_4x4.fpt").string(), "--output",
                   path("z.ptq"), "--group", "4", "--report", path("r.json")})
                  .code,
              0);
    EXPECT_EQ(read_file(path("z.ptq")), read_file(kGolden / "zero_4x4_g4.ptq"));
    const auto report = json::parse(slurp(path("r.json")));
    EXPECT_EQ(report["schema"], app::kRunReportSchema);
    EXPECT_EQ(report["iterations"], 1);
    EXPECT_EQ(report["final_error"], 0.0);
}

TEST_F(CliTest, StatsOnZeroPair) {
    const auto r = cli({"stats", "--weights", (kGolden / "zero_4x4.fpt").string(), "--quantized",
                        (kGolden / "zero_4x4_g4.ptq").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto s = json::parse(r.out);
    EXPECT_EQ(s["schema"], app::kStatsSchema);
    EXPECT_EQ(s["final_error"], 0.0);
    EXPECT_EQ(s["relative_error"], 0.0);
    EXPECT_EQ(s["sparsity1"], 1.0);
    EXPECT_EQ(s["sparsity2"], 1.0);
    EXPECT_EQ(s["memory_bits"], 4 * 16 + 4 * 2 * 16);
}

TEST_F(CliTest, StatsShapeMismatchIsDataError) {
    EXPECT_EQ(cli({"stats", "--weights", (kGolden / "ragged_2x5.fpt").string(), "--quantized",
                   (kGolden / "zero_4x4_g4.ptq").string()})
                  .code,
              app::kExitDataError);
}

TEST_F(CliTest, ReportReproducibleFromFiles) {
    ASSERT_EQ(cli({"gen", "--shape", "16", "40", "--seed", "3", "--out", path("w.fpt")}).code, 0);
    ASSERT_EQ(cli({"quantize", "--input", path("w.fpt"), "--output", path("q.ptq"), "--group", "16",
                   "--report", path("r.json")})
                  .code,
              0);
    const auto report = json::parse(slurp(path("r.json")));
    const auto r = cli({"stats", "--weights", path("w.fpt"), "--quantized", path("q.ptq")});
    ASSERT_EQ(r.code, 0);
    const auto s = json::parse(r.out);
    EXPECT_EQ(s["final_error"].get<double>(), report["final_error"].get<double>());
    EXPECT_EQ(s["stored_final_error"].get<double>(), report["final_error"].get<double>());
    EXPECT_EQ(s["memory_bits"], report["memory_bits"]);
}

TEST_F(CliTest, SweepWritesCsv) {
    ASSERT_EQ(cli({"gen", "--shape", "8", "64", "--out", path("w.fpt")}).code, 0);
    ASSERT_EQ(cli({"sweep", "--param", "iters", "--values", "1,2,5", "--input", path("w.fpt"), "--csv",
                   path("s.csv"), "--group", "32", "--repeats", "1"})
                  .code,
              0);
    std::istringstream csv(slurp(path("s.csv")));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, app::kSweepCsvHeader);
    std::vector<std::string> rows;
    while (std::getline(csv, line)) rows.push_back(line);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].rfind("1,1,", 0), 0u) << rows[0];
    EXPECT_EQ(rows[1].rfind("2,2,", 0), 0u) << rows[1];
    EXPECT_EQ(cli({"sweep", "--param", "lr", "--values", "1", "--input", path("w.fpt"), "--csv",
                   path("t.csv")})
                  .code,
              app::kExitUsageError);
}

TEST_F(CliTest, OracleCheck) {
    const auto r = cli({"oracle-check", "--rows", "20", "--len", "3", "--seed", "1"});
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["schema"], app::kOracleSchema);
    EXPECT_EQ(j["violations"], 0);
    EXPECT_EQ(cli({"oracle-check", "--rows", "0"}).code, 0);
    EXPECT_EQ(cli({"oracle-check", "--len", "7"}).code, app::kExitUsageError);
}

TEST_F(CliTest, Bench) {
    const auto r = cli({"bench", "--n", "32", "--d", "64", "--group", "32", "--reps", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["schema"], app::kBenchSchema);
    EXPECT_LE(j["max_rel_diff"].get<double>(), 1e-5);
    EXPECT_EQ(cli({"bench", "--reps", "0"}).code, app::kExitUsageError);
}

TEST_F(CliTest, MemoryPresetsAndManifests) {
    auto r = cli({"memory", "--preset", "llama-7b", "--method", "fp16"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(json::parse(r.out)["total_bits"].get<std::uint64_t>(), 107810390016u);
    r = cli({"memory", "--manifest", (kData / "llama-13b.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out)["total_bits"].get<std::uint64_t>(), 59165900800u);
    EXPECT_EQ(cli({"memory"}).code, app::kExitUsageError);
    EXPECT_EQ(cli({"memory", "--preset", "gpt-2"}).code, app::kExitUsageError);
}

TEST_F(CliTest, ManifestQuantizeThenStats) {
    ASSERT_EQ(cli({"gen", "--shape", "4", "20", "--seed", "1", "--out", path("a.fpt")}).code, 0);
    ASSERT_EQ(cli({"gen", "--shape", "6", "9", "--seed", "2", "--out", path("b.fpt")}).code, 0);
    std::ofstream(path("layers.json"))
        << R"({"layers":[{"name":"a","path":"a.fpt"},{"name":"b","path":"b.fpt"}]})";
    const auto out_dir = path("out");
    ASSERT_EQ(cli({"quantize", "--manifest", path("layers.json"), "--output-dir", out_dir, "--group",
                   "8"})
                  .code,
              0);
    EXPECT_TRUE(fs::exists(fs::path(out_dir) / "a.ptq"));
    EXPECT_TRUE(fs::exists(fs::path(out_dir) / "b.ptq"));
    const auto r = cli({"stats", "--manifest", (fs::path(out_dir) / "manifest.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto s = json::parse(r.out);
    EXPECT_EQ(s["layers"].size(), 2u);
    EXPECT_GT(s["total"]["compression_ratio"].get<double>(), 1.0);
}

}  // namespace
}  // namespace ptqtp
