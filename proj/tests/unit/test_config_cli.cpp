// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "sirctl/config.hpp"
#include "sirctl/zones.hpp"

namespace sirctl {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

TEST(Config, DefaultsMatchReferenceParameters) {
    const ExperimentConfig cfg = parse_config(json::object());
    EXPECT_DOUBLE_EQ(cfg.params.beta, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(cfg.params.istar, 0.056);
    EXPECT_DOUBLE_EQ(cfg.population, 67e6);
    EXPECT_EQ(cfg.lp_solve.r, 2);
}

TEST(Config, RejectsUnknownKeys) {
    EXPECT_THROW(parse_config(json{{"betta", 1.0}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"params", {{"beat", 0.3}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"lp_solve", {{"iterations", 3}}}}), ConfigError);
    try {
        parse_config(json{{"zones", {{"points", 3}}}});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("zones.points"), std::string::npos);
    }
}

TEST(Config, RejectsBadParameters) {
    try {
        parse_config(json{{"params", {{"beta", -1.0}}}});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(std::string(e.what()), "params.beta: must be positive");
    }
    EXPECT_THROW(parse_config(json{{"params", {{"abar", 1.5}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"params", {{"gamma", 0.2}}}}), ConfigError);  // gamma >= beta(1-abar)
    EXPECT_THROW(parse_config(json{{"params", {{"beta", "fast"}}}}), ConfigError);
    EXPECT_THROW(parse_config(json{{"simulate", {{"x0", {0.4}}}}}), ConfigError);
    LpSolveBlock lp;
    lp.r = 0;
    EXPECT_THROW(validate_lp_block(lp), ConfigError);
}

TEST(Config, ExampleFileParses) {
    const ExperimentConfig cfg = load_config(std::string(SIRCTL_SOURCE_DIR) + "/examples/example1.json");
    EXPECT_DOUBLE_EQ(cfg.params.gamma, 1.0 / 14.0);
    EXPECT_EQ(cfg.lp_solve.cost.at("kind"), "state_product");
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(CostFactory, Kinds) {
    EXPECT_DOUBLE_EQ(make_cost({{"kind", "affine"}, {"lambda", 2.0}})(0.3, 0.01, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(make_cost({{"kind", "multiplicative_si"}})(0.5, 0.02, 0.5), 0.5 * 0.02 * 0.5);
    EXPECT_DOUBLE_EQ(make_cost({{"kind", "multiplicative_power"}, {"eta", 0.5}})(0.5, 0.04, 1.0), 0.2);
    const CostModel sp = make_cost({{"kind", "state_product"}});
    EXPECT_TRUE(sp.meta.control_independent);
    EXPECT_DOUBLE_EQ(sp(0.5, 0.02, 0.3), 0.01);
    EXPECT_DOUBLE_EQ(make_cost({{"kind", "zero"}})(0.5, 0.02, 0.3), 0.0);
    EXPECT_THROW(make_cost({{"kind", "quadratic"}}), ConfigError);
    EXPECT_THROW(make_cost({{"lambda", 1.0}}), ConfigError);
    EXPECT_THROW(make_cost({{"kind", "affine"}, {"mu", 1.0}}), ConfigError);
}

// ---------------------------------------------------------------------------
// CLI

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("sirctl_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write_config(const json& j, const std::string& name = "cfg.json") const {
        const fs::path path = dir_ / name;
        std::ofstream(path) << j.dump(2);
        return path;
    }

    /// Exit status of the CLI; stdout and stderr go to files in the test directory.
    int run(const std::string& args, const std::string& tag = "run") const {
        const std::string cmd = std::string(SIRCTL_CLI_PATH) + " " + args + " > " + (dir_ / (tag + ".out")).string() +
                                " 2> " + (dir_ / (tag + ".err")).string();
        const int rc = std::system(cmd.c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    }

    std::string slurp(const fs::path& p) const {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
    json read_json(const fs::path& p) const { return json::parse(slurp(p)); }

    fs::path dir_;
};

TEST_F(Cli, ZonesCounts) {
    const fs::path out = dir_ / "z";
    ASSERT_EQ(run("--out " + out.string() + " zones"), 0);
    const json z = read_json(out / "zones.json");
    const json& n = z.at("population_counts");
    EXPECT_EQ(n.at("green_at_istar").get<double>(), 14357143.0);
    EXPECT_EQ(n.at("green_at_zero").get<double>(), 27374986.0);
    EXPECT_EQ(n.at("yellow_at_istar").get<double>(), 35892857.0);
    EXPECT_EQ(n.at("yellow_at_zero").get<double>(), 54895452.0);
    const std::string csv = slurp(out / "zones.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "i,phi,b_curve,psi,psi_tilde");
}

TEST_F(Cli, ZonesShrinkWithFasterSpread) {
    const fs::path a = dir_ / "a", b = dir_ / "b";
    ASSERT_EQ(run("--out " + a.string() + " zones", "a"), 0);
    const fs::path cfg = write_config({{"params", {{"beta", 1.01}}}});
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + b.string() + " zones", "b"), 0);
    const json ta = read_json(a / "zones.json").at("tips"), tb = read_json(b / "zones.json").at("tips");
    for (const char* key : {"green_at_istar", "green_at_zero", "yellow_at_istar", "yellow_at_zero"})
        EXPECT_LT(tb.at(key).get<double>(), ta.at(key).get<double>()) << key;
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(run("--out " + (dir_ / "o").string() + " zones"), 0);
    const fs::path bad = write_config({{"params", {{"beta", -0.1}}}}, "bad.json");
    EXPECT_EQ(run("--config " + bad.string() + " zones", "bad"), 2);
    EXPECT_NE(slurp(dir_ / "bad.err").find("params.beta: must be positive"), std::string::npos);
    const fs::path unk = write_config({{"colour", "red"}}, "unk.json");
    EXPECT_EQ(run("--config " + unk.string() + " zones", "unk"), 2);
    const fs::path affine = write_config({{"lp_solve", {{"cost", {{"kind", "affine"}}}}}}, "aff.json");
    EXPECT_EQ(run("--config " + affine.string() + " --out " + (dir_ / "o").string() + " lp-solve", "aff"), 2);
    EXPECT_NE(run("--no-such-flag zones", "flag"), 0);
}

TEST_F(Cli, VerifyHjSummary) {
    const fs::path cfg = write_config({{"verify_hj", {{"samples", 300}}}});
    const fs::path out = dir_ / "h";
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + out.string() + " verify-hj"), 0);
    const json j = read_json(out / "verify_hj.json");
    EXPECT_EQ(j.at("summary"), "max residual <= 1e-08, argmax a = 0 at all points");
    EXPECT_TRUE(j.at("passed").get<bool>());
    EXPECT_EQ(j.at("samples").get<int>(), 300);
}

TEST_F(Cli, ValueIsZeroOnGreenAndMonotone) {
    const fs::path cfg = write_config({{"value", {{"ns", 25}, {"ni", 25}}}});
    const fs::path out = dir_ / "v";
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + out.string() + " value"), 0);
    std::istringstream in(slurp(out / "value.csv"));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "s,i,zone,W,dWds,dWdi,hj_residual");
    std::size_t green = 0, rows = 0;
    std::map<double, std::vector<std::pair<double, double>>> by_i;
    while (std::getline(in, line)) {
        std::stringstream ls(line);
        std::string s, i, zone, W;
        std::getline(ls, s, ',');
        std::getline(ls, i, ',');
        std::getline(ls, zone, ',');
        std::getline(ls, W, ',');
        ++rows;
        if (W == "nan") continue;
        const double w = std::stod(W);
        if (zone == "green") {
            ++green;
            EXPECT_EQ(w, 0.0) << line;
        }
        by_i[std::stod(i)].push_back({std::stod(s), w});
    }
    EXPECT_EQ(rows, 625u);
    EXPECT_GT(green, 0u);
    // W is non-decreasing in s along each row
    for (auto& [i, row] : by_i) {
        std::sort(row.begin(), row.end());
        for (std::size_t k = 1; k < row.size(); ++k) EXPECT_GE(row[k].second, row[k - 1].second - 1e-12) << "i=" << i;
    }
}

TEST_F(Cli, LpSolveIsReproducible) {
    const fs::path cfg = write_config({{"lp_solve", {{"iters", 3}, {"budget", 12}}}});
    const fs::path a = dir_ / "a", b = dir_ / "b";
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + a.string() + " --threads 1 lp-solve", "a"), 0);
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + b.string() + " --threads 3 lp-solve", "b"), 0);
    const std::string ja = slurp(a / "lp_solve.jsonl");
    EXPECT_FALSE(ja.empty());
    EXPECT_EQ(ja, slurp(b / "lp_solve.jsonl"));
    EXPECT_EQ(slurp(a / "cuts.json"), slurp(b / "cuts.json"));
    std::istringstream lines(ja);
    std::string first;
    std::getline(lines, first);
    const json rec = json::parse(first);
    for (const char* key : {"iter", "lower", "upper", "gap", "cut_coeffs", "worst_positivity_margin", "scenario"})
        EXPECT_TRUE(rec.contains(key)) << key;
}

TEST_F(Cli, CheckCostAndReach) {
    const fs::path cfg = write_config({{"check_cost", {{"grid", {{"ns", 40}, {"ni", 40}, {"na", 5}}}, {"gencond_grid", {{"ns", 40}, {"ni", 40}, {"na", 8}}}}}});
    const fs::path out = dir_ / "c";
    ASSERT_EQ(run("--config " + cfg.string() + " --out " + out.string() + " check-cost", "c"), 0);
    const json j = read_json(out / "check_cost.json");
    EXPECT_TRUE(j.at("standing_assumptions").get<bool>());
    EXPECT_TRUE(j.at("gencond").at("holds").get<bool>());
    ASSERT_EQ(run("--out " + out.string() + " reach", "r"), 0);
    const std::string csv = slurp(out / "reach.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "branch,control,piece,s,i");
}

}  // namespace
}  // namespace sirctl
