#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

namespace gwqs::cli {
namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json run_json(std::vector<std::string> args) {
    args.push_back("--format");
    args.push_back("json");
    const auto r = run(std::move(args));
    EXPECT_EQ(r.code, 0) << r.err;
    return nlohmann::json::parse(r.out);
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);)
        if (!line.empty() && line[0] != '#') lines.push_back(line);
    return lines;
}

TEST(CliKernel, MasterRowIsBinomial) {
    const auto doc = run_json({"kernel", "--ell", "2", "--kappa", "2", "--q", "0.5"});
    const auto& row0 = doc["results"][0];
    EXPECT_NEAR(row0["c0"].get<double>(), 0.25, 1e-15);
    EXPECT_NEAR(row0["c1"].get<double>(), 0.5, 1e-15);
    EXPECT_NEAR(row0["c2"].get<double>(), 0.25, 1e-15);
    EXPECT_EQ(doc["config"]["command"], "kernel");
    EXPECT_TRUE(doc["diagnostics"]["ok"].get<bool>());
}

TEST(CliKernel, NoMutationIsIdentity) {
    const auto doc = run_json({"kernel", "--ell", "4", "--q", "0"});
    for (std::size_t b = 0; b <= 4; ++b)
        for (std::size_t c = 0; c <= 4; ++c)
            EXPECT_EQ(doc["results"][b]["c" + std::to_string(c)].get<double>(), b == c ? 1.0 : 0.0);
}

TEST(CliKernel, LongSequencesStayStochastic) {
    const auto doc = run_json({"kernel", "--ell", "500", "--q", "0.001"});
    ASSERT_EQ(doc["results"].size(), 501u);
    for (const auto& row : doc["results"]) EXPECT_LT(row["row_sum_deviation"].get<double>(), 1e-10);
}

TEST(CliKernel, CsvLayout) {
    const auto r = run({"kernel", "--ell", "1", "--q", "0.25", "--no-timing"});
    ASSERT_EQ(r.code, 0);
    const auto lines = csv_lines(r.out);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], "b,c0,c1,row_sum_deviation");
    EXPECT_EQ(lines[1], "0,0.75,0.25,0");
    EXPECT_NE(r.out.find("# config q=0.25"), std::string::npos);
    EXPECT_NE(r.out.find("# gwqs "), std::string::npos);
    EXPECT_NE(r.out.find("# duration_seconds=omitted"), std::string::npos);
}

TEST(CliKernel, TimingIsRecordedByDefault) {
    const auto r = run({"kernel", "--ell", "1", "--q", "0.25"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.find("duration_seconds=omitted"), std::string::npos);
    EXPECT_NE(r.out.find("# duration_seconds="), std::string::npos);
}

TEST(CliUsage, AAndQAreExclusive) {
    const auto r = run({"kernel", "--a", "1", "--q", "0.1"});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_TRUE(r.out.empty());
}

TEST(CliUsage, InvalidParametersAreUsageErrors) {
    for (const auto& args : std::vector<std::vector<std::string>>{{"kernel", "--kappa", "1"},
                                                                   {"kernel", "--q", "1"},
                                                                   {"perron", "--sigma", "0.5"},
                                                                   {"quasispecies", "--sigma", "1", "--a", "1"},
                                                                   {"kernel", "--format", "xml"},
                                                                   {"simulate", "--start-class", "200"},
                                                                   {}}) {
        const auto r = run(args);
        EXPECT_EQ(r.code, kExitUsage) << r.err;
        EXPECT_FALSE(r.err.empty());
    }
}

TEST(CliUsage, AGivesQOverEll) {
    const auto doc = run_json({"kernel", "--ell", "4", "--a", "1"});
    EXPECT_DOUBLE_EQ(doc["diagnostics"]["q"].get<double>(), 0.25);
    EXPECT_DOUBLE_EQ(doc["config"]["a"].get<double>(), 1.0);
}

TEST(CliConfig, FileValuesAndFlagOverride) {
    const auto path = std::filesystem::temp_directory_path() / "gwqs_cli_test.ini";
    {
        std::ofstream f(path);
        f << "sigma=3\nell=5\nq=0.2\nreport-k=2\n";
    }
    const auto doc = run_json({"perron", "--config", path.string(), "--ell", "6"});
    EXPECT_EQ(doc["config"]["sigma"].get<double>(), 3.0);
    EXPECT_EQ(doc["config"]["ell"].get<int>(), 6);
    EXPECT_EQ(doc["config"]["q"].get<double>(), 0.2);
    EXPECT_EQ(doc["results"].size(), 3u);
    std::filesystem::remove(path);
}

TEST(CliPerron, ReportsIdentityAndBounds) {
    const auto doc = run_json({"perron", "--sigma", "4", "--ell", "100", "--a", "0.6931471805599453"});
    const auto& d = doc["diagnostics"];
    EXPECT_LT(d["identity_gap"].get<double>(), 1e-8);
    EXPECT_TRUE(d["bounds_pass"].get<bool>());
    EXPECT_GT(d["lambda"].get<double>(), 1.0);
    EXPECT_LT(d["lambda"].get<double>(), 4.0);
    EXPECT_EQ(doc["results"].size(), 11u);
}

TEST(CliPerron, NonConvergenceExitsNonzero) {
    const auto r = run({"perron", "--max-iter", "2"});
    EXPECT_EQ(r.code, kExitFailed);
    EXPECT_NE(r.err.find("residual"), std::string::npos);
}

TEST(CliQuasispecies, ClosedFormAndRecurrenceAgree) {
    const auto doc = run_json({"quasispecies", "--sigma", "4", "--a", "0.6931471805599453", "--report-k", "30"});
    EXPECT_NEAR(doc["results"][0]["closed_form"].get<double>(), 1.0 / 3.0, 1e-14);
    EXPECT_LT(doc["diagnostics"]["max_abs_difference"].get<double>(), 1e-10);
    EXPECT_NEAR(doc["results"][30]["running_sum"].get<double>(), 1.0, 1e-6);
}

TEST(CliQuasispecies, DisorderedRegimeIsNotAnError) {
    const auto r = run({"quasispecies", "--sigma", "2", "--a", "1.3862943611198906", "--format", "json"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.err.find("disordered"), std::string::npos);
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc["diagnostics"]["regime"], "disordered");
    for (const auto& row : doc["results"]) EXPECT_EQ(row["closed_form"].get<double>(), 0.0);
}

TEST(CliConverge, GapsShrinkAlongGrid) {
    const auto doc = run_json({"converge", "--sigma", "4", "--a", "0.6931471805599453", "--ell-grid", "50,100,200"});
    const auto& rows = doc["results"];
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t k = 0; k <= 5; ++k)
        for (std::size_t i = 1; i < 3; ++i)
            EXPECT_LT(rows[i]["gap" + std::to_string(k)].get<double>(),
                      rows[i - 1]["gap" + std::to_string(k)].get<double>());
    EXPECT_TRUE(doc["diagnostics"]["lambda_gap_decreasing"].get<bool>());
}

TEST(CliConverge, NoMutationHasNoGap) {
    const auto doc = run_json({"converge", "--sigma", "3", "--a", "0", "--ell-grid", "10,20"});
    // W is diagonal; what remains off class 0 is the power-iteration residual
    for (const auto& row : doc["results"]) {
        EXPECT_LT(row["max_gap"].get<double>(), 1e-11);
        EXPECT_LT(row["lambda_gap"].get<double>(), 1e-12);
    }
}

TEST(CliConverge, DisorderedLambdaApproachesOne) {
    const auto doc = run_json({"converge", "--sigma", "2", "--a", "1.3862943611198906", "--ell-grid", "20,40,80"});
    EXPECT_TRUE(doc["diagnostics"]["lambda_gap_decreasing"].get<bool>());
}

TEST(CliSimulate, RepeatRunsAreByteIdentical) {
    const std::vector<std::string> args{"simulate", "--sigma", "5", "--ell", "20", "--a", "0.5", "--replicas", "30",
                                        "--n-gens", "6", "--seed", "9", "--no-timing"};
    const auto a = run(args);
    const auto b = run(args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    auto threaded = args;
    threaded.insert(threaded.end(), {"--threads", "3"});
    const auto c = run(threaded);
    EXPECT_EQ(csv_lines(a.out), csv_lines(c.out));
    auto json_args = args;
    json_args.insert(json_args.end(), {"--format", "json"});
    EXPECT_EQ(run(json_args).out, run(json_args).out);
}

TEST(CliSimulate, TrajectoryMode) {
    const auto doc = run_json({"simulate", "--mode", "trajectory", "--sigma", "4", "--ell", "10", "--q", "0.05",
                               "--n-gens", "5", "--z0", "50"});
    const auto& rows = doc["results"];
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[0]["total"].get<int>(), 50);
    EXPECT_EQ(rows[0]["freq0"].get<double>(), 1.0);
}

TEST(CliSimulate, AllExtinctExitsNonzero) {
    const auto r = run({"simulate", "--z0", "0", "--ell", "5"});
    EXPECT_EQ(r.code, kExitFailed);
    EXPECT_NE(r.err.find("extinct"), std::string::npos);
}

TEST(CliSimulate, WritesOutputFile) {
    const auto path = std::filesystem::temp_directory_path() / "gwqs_cli_out.json";
    const auto r = run({"quasispecies", "--sigma", "4", "--a", "1", "--out", path.string(), "--format", "json"});
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    std::ifstream f(path);
    const auto doc = nlohmann::json::parse(f);
    EXPECT_EQ(doc["config"]["command"], "quasispecies");
    std::filesystem::remove(path);
}

TEST(CliExtinction, MatchesScalarOracleAndMonteCarlo) {
    const auto doc = run_json({"extinction", "--sigma", "2", "--ell", "3", "--q", "0", "--mc", "4000",
                               "--report-k", "0"});
    const auto& rows = doc["results"];
    EXPECT_NEAR(rows[0]["extinction"].get<double>(), 0.2031878699, 1e-9);
    for (std::size_t k = 1; k <= 3; ++k) EXPECT_EQ(rows[k]["extinction"].get<double>(), 1.0);
    EXPECT_TRUE(rows[0]["mc_within_3se"].get<bool>());
    EXPECT_TRUE(rows[1]["mc_frequency"].is_null());
}

TEST(CliExtinction, NonConvergenceExitsNonzero) {
    EXPECT_EQ(run({"extinction", "--sigma", "1.05", "--ell", "5", "--max-iter", "3"}).code, kExitFailed);
}

}  // namespace
}  // namespace gwqs::cli
