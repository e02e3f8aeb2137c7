#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "hymem/cli.hpp"
#include "hymem/trace.hpp"

using namespace hymem;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    fs::path dir = fs::temp_directory_path() / "hymem_cli_test";
    std::string table3, zipf;

    void SetUp() override {
        fs::remove_all(dir);
        fs::create_directories(dir);
        table3 = (dir / "t3.txt").string();
        std::ofstream f(table3);
        for (char c : std::string("ACBBDEBDADA")) f << "R 0x" << std::hex << (static_cast<int>(c) << 12) << "\n";
        f.close();
        zipf = (dir / "z.txt.gz").string();
        ASSERT_EQ(run({"gen", "--n", "20000", "--pages", "400", "--alpha", "1.0", "--write-ratio", "0.3", "--seed", "5",
                       "--out", zipf})
                      .code,
                  0);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::vector<std::string> csv_lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) out.push_back(l);
    return out;
}

}  // namespace

TEST_F(Cli, GenWritesRequestedTrace) {
    const auto t = load_trace(zipf);
    EXPECT_EQ(t.size(), 20000u);
}

TEST_F(Cli, ProfileJsonMatchesWorkedExample) {
    auto r = run({"profile", "--trace", table3});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = json::parse(r.out);
    EXPECT_EQ(j["total"], 11);
    EXPECT_EQ(j["first_access"], 5);
    EXPECT_EQ(j["pairs"].size(), 4u);
}

TEST_F(Cli, EstimateConservesRequestsAndIsDeterministic) {
    std::vector<std::string> args{"estimate", "--trace", table3, "--dram-pages", "2", "--nvm-pages", "2",
                                  "--policy", "two-lru", "--threshold", "1"};
    auto a = run(args), b = run(args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    auto j = json::parse(a.out);
    const double h = j["hit_ratio"];
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 1.0);
    const auto& c = j["counts"];
    EXPECT_NEAR(c["r_dram"].get<double>() + c["w_dram"].get<double>() + c["r_nvm"].get<double>() +
                    c["w_nvm"].get<double>() + c["miss"].get<double>(),
                11.0, 1e-9);
    EXPECT_EQ(j["p_mig"], 0.16);
    EXPECT_FALSE(j["fingerprint"].get<std::string>().empty());
}

TEST_F(Cli, SavedProfileGivesSameEstimate) {
    const auto prof = path("p.json");
    ASSERT_EQ(run({"profile", "--trace", zipf, "--profile-out", prof}).code, 0);
    auto a = run({"estimate", "--trace", zipf, "--dram-pages", "20", "--nvm-pages", "40"});
    auto b = run({"estimate", "--profile-in", prof, "--dram-pages", "20", "--nvm-pages", "40"});
    ASSERT_EQ(a.code, 0);
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(json::parse(a.out)["hit_ratio"], json::parse(b.out)["hit_ratio"]);
}

TEST_F(Cli, WarmCacheSolvesFewerStatesWithIdenticalNumbers) {
    const auto cache = path("cache");
    std::vector<std::string> base{"estimate", "--trace", zipf, "--dram-pages", "20", "--nvm-pages", "40", "--cache-dir", cache};
    auto cold = json::parse(run(base).out), warm = json::parse(run(base).out);
    auto args = base;
    args.push_back("--no-cache");
    auto none = json::parse(run(args).out);
    EXPECT_EQ(cold["solver"]["cache_status"], "cold");
    EXPECT_EQ(warm["solver"]["cache_status"], "warm");
    EXPECT_LT(warm["solver"]["states_computed"].get<int>(), cold["solver"]["states_computed"].get<int>());
    EXPECT_EQ(none["solver"]["cache_status"], "disabled");
    for (const char* k : {"hit_ratio", "amat_ns", "nvm_writes", "mig_to_nvm"}) EXPECT_EQ(none[k], warm[k]) << k;

    auto st = run({"cache-stats", "--cache-dir", cache});
    ASSERT_EQ(st.code, 0);
    EXPECT_EQ(json::parse(st.out)["files"], 1);
}

TEST_F(Cli, CompareSingleLevelIsExact) {
    auto r = run({"compare", "--trace", zipf, "--dram-pages", "30", "--nvm-pages", "0", "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto lines = csv_lines(r.out);
    ASSERT_GT(lines.size(), 1u);
    EXPECT_EQ(lines[0], "metric,estimated,simulated,rel_error,abs_error");
    EXPECT_EQ(lines[1].rfind("hit_ratio,", 0), 0u);
    auto j = json::parse(run({"compare", "--trace", zipf, "--dram-pages", "30", "--nvm-pages", "0"}).out);
    EXPECT_NEAR(j["rows"][0]["rel_error"].get<double>(), 0.0, 1e-9);
}

TEST_F(Cli, CompareAllMissTrace) {
    const auto t = path("cold.txt");
    {
        std::ofstream f(t);
        for (int i = 0; i < 50; ++i) f << "W " << (i << 12) << "\n";
    }
    auto j = json::parse(run({"compare", "--trace", t, "--dram-pages", "4", "--nvm-pages", "4"}).out);
    EXPECT_EQ(j["estimate"]["hit_ratio"], 0.0);
    EXPECT_EQ(j["simulate"]["hit_ratio"], 0.0);
    EXPECT_TRUE(j["rows"][0]["rel_error"].is_null());
}

TEST_F(Cli, CompareZipfPopulatesErrors) {
    for (const char* pol : {"two-lru", "clock-dwf"}) {
        auto j = json::parse(run({"compare", "--trace", zipf, "--dram-pages", "20", "--nvm-pages", "40", "--policy", pol}).out);
        for (const auto& row : j["rows"]) {
            EXPECT_TRUE(std::isfinite(row["abs_error"].get<double>()));
            if (row["metric"] == "hit_ratio") {
                EXPECT_TRUE(row["rel_error"].is_number());
            }
        }
    }
}

TEST_F(Cli, SweepThresholds) {
    auto r = run({"sweep", "--trace", zipf, "--dram-pages", "20", "--nvm-pages", "40", "--thresholds", "1,4,8,16",
                  "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto lines = csv_lines(r.out);
    ASSERT_EQ(lines.size(), 5u);
    EXPECT_NE(lines[1].find(",0.16,"), std::string::npos);
    EXPECT_NE(lines[2].find(",0.13,"), std::string::npos);
    EXPECT_NE(lines[3].find(",0.08,"), std::string::npos);
    EXPECT_NE(lines[4].find(",0.05,"), std::string::npos);
}

TEST_F(Cli, SingleSweepPointEqualsEstimate) {
    auto s = json::parse(run({"sweep", "--trace", zipf, "--dram-pages", "20", "--nvm-pages", "40"}).out);
    auto e = json::parse(run({"estimate", "--trace", zipf, "--dram-pages", "20", "--nvm-pages", "40"}).out);
    ASSERT_EQ(s["points"].size(), 1u);
    EXPECT_EQ(s["points"][0]["hit_ratio"], e["hit_ratio"]);
    EXPECT_EQ(s["points"][0]["amat_ns"], e["amat_ns"]);
}

TEST_F(Cli, SweepSizesWithJobsAndSimulation) {
    auto r = run({"sweep", "--trace", zipf, "--sizes", "10:10,10:20", "--jobs", "2", "--simulate", "--format", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto lines = csv_lines(r.out);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_NE(lines[0].find("sim_wall_ms"), std::string::npos);
    EXPECT_NE(r.err.find("simulations"), std::string::npos);
}

TEST_F(Cli, CustomPolicyFile) {
    const auto pol = path("pol.json");
    std::ofstream(pol) << R"({"name":"mine","dram_eviction":"uniform","nvm_eviction":"lru","p_mig":0.3,"fault_destination":"nvm"})";
    auto r = run({"estimate", "--trace", zipf, "--dram-pages", "20", "--nvm-pages", "40", "--policy", pol});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = json::parse(r.out);
    EXPECT_EQ(j["policy"], "mine");
    EXPECT_EQ(j["p_mig"], 0.3);
    EXPECT_GT(j["disk_to_nvm"].get<double>(), 0.0);
    EXPECT_EQ(run({"simulate", "--trace", zipf, "--dram-pages", "20", "--nvm-pages", "40", "--policy", pol}).code,
              kExitUsage);
}

TEST_F(Cli, LatencyFileChangesAmat) {
    const auto lat = path("lat.json");
    std::ofstream(lat) << R"({"disk_read_ns": 1000})";
    auto a = json::parse(run({"estimate", "--trace", zipf, "--dram-pages", "20", "--nvm-pages", "40"}).out);
    auto b = json::parse(run({"estimate", "--trace", zipf, "--dram-pages", "20", "--nvm-pages", "40", "--latencies", lat}).out);
    EXPECT_EQ(a["hit_ratio"], b["hit_ratio"]);
    EXPECT_LT(b["amat_ns"].get<double>(), a["amat_ns"].get<double>());
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"estimate", "--bogus"}).code, kExitUsage);
    EXPECT_EQ(run({"estimate", "--trace", zipf}).code, kExitUsage);
    EXPECT_EQ(run({"estimate", "--trace", zipf, "--dram-pages", "0", "--nvm-pages", "1"}).code, kExitUsage);
    EXPECT_EQ(run({"estimate", "--trace", path("missing.txt"), "--dram-pages", "2", "--nvm-pages", "2"}).code, kExitInput);
    const auto bad = path("bad.txt");
    std::ofstream(bad) << "R 0x10\nQ 0x20\n";
    auto r = run({"simulate", "--trace", bad, "--dram-pages", "2", "--nvm-pages", "2"});
    EXPECT_EQ(r.code, kExitInput);
    EXPECT_NE(r.err.find("line 2"), std::string::npos);
    const auto empty = path("empty.txt");
    std::ofstream(empty) << "# nothing\n";
    EXPECT_EQ(run({"profile", "--trace", empty}).code, kExitInput);
    EXPECT_EQ(run({"sweep", "--trace", zipf, "--sizes", "abc"}).code, kExitUsage);
    EXPECT_EQ(run({"--help"}).code, kExitOk);
}
