#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridcoher/config.hpp"
#include "gridcoher/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& root() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "gridcoher_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + std::string(GRIDCOHER_CLI_PATH) + " " + args +
                            " > /dev/null 2> " + (root() / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::stringstream ss(line);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

fs::path out(const std::string& name) { return root() / name; }

} // namespace

TEST(CliNorm, TwoBusAllMethods) {
    ASSERT_EQ(run("norm --family path --n 2 --method all --samples 4000 --horizon 40 --out " + out("norm_all").string()), 0);
    const auto cf = load(out("norm_all") / "norm_closed_form.json");
    const auto ly = load(out("norm_all") / "norm_lyapunov.json");
    const auto mc = load(out("norm_all") / "norm_monte_carlo.json");
    EXPECT_NEAR(cf["value"].get<double>(), 0.125, 1e-15);
    EXPECT_NEAR(ly["value"].get<double>(), 0.125, 1e-12);
    EXPECT_LE(std::abs(mc["value"].get<double>() - 0.125), 3.0 * mc["stderr"].get<double>());
    EXPECT_TRUE(cf["stderr"].is_null());
    EXPECT_EQ(mc["samples"].get<int>(), 4000);
    EXPECT_EQ(cf["per_mode"].size(), 1u);
    EXPECT_EQ(cf["method"], "closed_form");

    const auto cmp = load(out("norm_all") / "comparison.json");
    ASSERT_EQ(cmp["pairs"].size(), 3u);
    for (const auto& pair : cmp["pairs"])
        if (pair.contains("within_3_stderr")) EXPECT_TRUE(pair["within_3_stderr"].get<bool>());
}

TEST(CliNorm, DapiAtZeroGammaAndDepiHaveIdenticalValues) {
    ASSERT_EQ(run("norm --family ring --n 7 --variant dapi --gamma 0 --q 0.7 --out " + out("dapi0").string()), 0);
    ASSERT_EQ(run("norm --family ring --n 7 --variant depi --q 0.7 --out " + out("depi").string()), 0);
    const auto a = load(out("dapi0") / "norm_closed_form.json");
    const auto b = load(out("depi") / "norm_closed_form.json");
    EXPECT_EQ(a["value"].dump(), b["value"].dump());
}

TEST(CliNorm, DroopAndCapiEqual) {
    ASSERT_EQ(run("norm --family grid2d --n 12 --variant droop --out " + out("droop").string()), 0);
    ASSERT_EQ(run("norm --family grid2d --n 12 --variant capi --q 3 --out " + out("capi").string()), 0);
    EXPECT_EQ(load(out("droop") / "norm_closed_form.json")["value"].dump(),
              load(out("capi") / "norm_closed_form.json")["value"].dump());
}

TEST(CliNorm, ConfigFileWithOverrides) {
    const auto dir = out("cfg");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "exp.json");
        f << R"({"graph": {"family": "complete", "n": 4, "weight": 1.0},
                 "params": {"m": 1.0, "d": 1.0},
                 "controller": {"variant": "dapi", "q": 1.0, "gamma": 0.25},
                 "seed": 3, "output": ")"
          << (dir / "a").string() << R"("})";
    }
    ASSERT_EQ(run("norm --config " + (dir / "exp.json").string()), 0);
    // (n-1)/(2n (b n d + f)) with f = (1 + 4 * 0.25) / (0.25 + 1 + 4 * 0.0625) = 4/3
    EXPECT_NEAR(load(dir / "a" / "norm_closed_form.json")["value"].get<double>(), 3.0 / (8.0 * (4.0 + 4.0 / 3.0)), 1e-15);

    ASSERT_EQ(run("norm --config " + (dir / "exp.json").string() + " --variant droop --out " + (dir / "b").string()), 0);
    EXPECT_NEAR(load(dir / "b" / "norm_closed_form.json")["value"].get<double>(), 3.0 / 32.0, 1e-15);
}

TEST(CliNorm, NonUniformParametersNameTheAssumption) {
    const auto dir = out("nonuniform");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "exp.json");
        f << R"({"graph": {"family": "path", "n": 3}, "params": {"m": [1, 2, 1], "d": 1}, "output": ")"
          << (dir / "o").string() << R"("})";
    }
    EXPECT_NE(run("norm --config " + (dir / "exp.json").string()), 0);
    const auto err = load(dir / "o" / "error.json");
    EXPECT_EQ(err["error"]["kind"], "assumption");
    EXPECT_NE(err["error"]["message"].get<std::string>().find("uniform"), std::string::npos);
}

TEST(CliErrors, DisconnectedEdgeListWritesErrorJson) {
    const auto dir = out("disconnected");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "g.csv");
        f << "i,j,k\n0,1,1\n2,3,1\n";
    }
    EXPECT_NE(run("norm --edges " + (dir / "g.csv").string() + " --out " + (dir / "o").string()), 0);
    const auto err = load(dir / "o" / "error.json");
    EXPECT_EQ(err["error"]["kind"], "graph");
    EXPECT_NE(err["error"]["message"].get<std::string>().find("disconnected"), std::string::npos);
    EXPECT_NE(slurp(root() / "stderr.txt").find("\"kind\":\"graph\""), std::string::npos);
}

TEST(CliErrors, BadFlagsGiveErrorJsonOnStderr) {
    EXPECT_NE(run("norm --config " + out("does_not_exist.json").string()), 0);
    EXPECT_NE(slurp(root() / "stderr.txt").find("\"kind\":\"config\""), std::string::npos);
    EXPECT_NE(run("norm --n two"), 0);
    EXPECT_NE(slurp(root() / "stderr.txt").find("\"kind\":\"config\""), std::string::npos);
}

TEST(CliErrors, UnknownConfigKeyRejected) {
    EXPECT_THROW(gridcoher::config_from_json(json::parse(R"({"grpah": {}})")), gridcoher::Error);
    EXPECT_THROW(gridcoher::config_from_json(json::parse(R"({"controller": {"variant": "dapi", "gama": 1}})")),
                 gridcoher::Error);
    const auto cfg = gridcoher::config_from_json(json::parse(R"({"mc": {"seed": 9}})"));
    EXPECT_EQ(cfg.seed, 9u);
    const auto both = gridcoher::config_from_json(json::parse(R"({"mc": {"seed": 9}, "seed": 4})"));
    EXPECT_EQ(both.seed, 4u);
}

TEST(CliSweep, PathDroopIncreasesAndDapiStaysBounded) {
    ASSERT_EQ(run("sweep --family path --n-list 8,16,32,64 --controllers droop,dapi --gammas 0.3 --out " +
                  out("sweep_path").string()),
              0);
    const auto rows = csv_rows(out("sweep_path") / "sweep.csv");
    ASSERT_FALSE(rows.empty());
    EXPECT_EQ(rows[0], (std::vector<std::string>{"family", "n", "controller", "gamma", "q", "norm", "bound", "errors"}));
    double previous = 0.0;
    int droop_rows = 0, dapi_rows = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        ASSERT_EQ(rows[r].size(), 8u);
        const double norm = std::stod(rows[r][5]);
        EXPECT_TRUE(rows[r][7].empty());
        if (rows[r][2] == "droop") {
            EXPECT_GT(norm, previous);
            EXPECT_TRUE(rows[r][6].empty());
            previous = norm;
            ++droop_rows;
        } else {
            EXPECT_EQ(rows[r][2], "dapi");
            EXPECT_LT(norm, std::stod(rows[r][6]));
            EXPECT_EQ(std::stod(rows[r][6]), 0.65);
            ++dapi_rows;
        }
    }
    EXPECT_EQ(droop_rows, 4);
    EXPECT_EQ(dapi_rows, 4);
}

TEST(CliSweep, CompleteDroopMatchesFormula) {
    ASSERT_EQ(run("sweep --family complete --weight 2 --d 0.5 --n-list 3,6,12 --controllers droop --out " +
                  out("sweep_complete").string()),
              0);
    const auto rows = csv_rows(out("sweep_complete") / "sweep.csv");
    ASSERT_EQ(rows.size(), 4u);
    double previous = INFINITY;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const double n = std::stod(rows[r][1]);
        const double norm = std::stod(rows[r][5]);
        EXPECT_NEAR(norm, (n - 1) / (2 * n * 2 * n * 0.5), 1e-14);
        EXPECT_LT(norm, previous);
        previous = norm;
    }
}

TEST(CliSweep, RowFailuresLandInErrorsColumn) {
    ASSERT_EQ(run("sweep --family path --n-list 4,8 --controllers droop,capi --q -1 --out " + out("sweep_err").string()), 0);
    const auto rows = csv_rows(out("sweep_err") / "sweep.csv");
    ASSERT_EQ(rows.size(), 5u);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        ASSERT_EQ(rows[r].size(), 8u);
        if (rows[r][2] == "droop") {
            EXPECT_TRUE(rows[r][7].empty());
            EXPECT_FALSE(rows[r][5].empty());
        } else {
            EXPECT_FALSE(rows[r][7].empty());
            EXPECT_TRUE(rows[r][5].empty());
        }
    }
}

TEST(CliSimulate, ZeroLoadWritesZeroTrajectory) {
    ASSERT_EQ(run("simulate --family ring --n 4 --variant dapi --gamma 0.3 --load 0,0,0,0 --horizon 5 --out " +
                  out("sim_zero").string()),
              0);
    const auto rows = csv_rows(out("sim_zero") / "trajectory_dapi_gamma_0.3.csv");
    ASSERT_EQ(rows.size(), 502u);
    EXPECT_EQ(rows[0][0], "t");
    EXPECT_EQ(rows[0][5], "y_sq");
    for (std::size_t r = 1; r < rows.size(); ++r)
        for (std::size_t c = 1; c < rows[r].size(); ++c) EXPECT_EQ(std::stod(rows[r][c]), 0.0);
    const auto summary = load(out("sim_zero") / "summary.json");
    EXPECT_EQ(summary["runs"][0]["energy"].get<double>(), 0.0);
}

TEST(CliSimulate, EnsembleOrderingOnRing) {
    ASSERT_EQ(run("simulate --family ring --n 10 --m 1 --d 0.5 --q 0.1 --compare droop,dapi:0.01,dapi:1 --ensemble 500 "
                  "--seed 11 --out " +
                  out("sim_order").string()),
              0);
    const auto runs = load(out("sim_order") / "summary.json")["runs"];
    ASSERT_EQ(runs.size(), 3u);
    const double droop = runs[0]["mean_energy"].get<double>();
    const double small = runs[1]["mean_energy"].get<double>();
    const double large = runs[2]["mean_energy"].get<double>();
    EXPECT_EQ(runs[1]["label"], "dapi_gamma_0.01");
    EXPECT_LT(small, large);
    EXPECT_LE(large, droop * (1 + 1e-6));
}

TEST(CliSimulate, EnsembleMatchesClosedForm) {
    for (const std::string variant : {"droop", "dapi"}) {
        const auto dir = out("sim_ens_" + variant);
        ASSERT_EQ(run("simulate --family path --n 2 --variant " + variant + " --gamma 1 --ensemble 2000 --out " +
                      dir.string()),
                  0);
        ASSERT_EQ(run("norm --family path --n 2 --variant " + variant + " --gamma 1 --out " + dir.string()), 0);
        const auto r = load(dir / "summary.json")["runs"][0];
        const double closed = load(dir / "norm_closed_form.json")["value"].get<double>();
        EXPECT_LE(std::abs(r["mean_energy"].get<double>() - closed), 3.0 * r["stderr"].get<double>()) << variant;
    }
}

TEST(CliSimulate, NonlinearRunRecordsTrajectory) {
    ASSERT_EQ(run("simulate --family ring --n 4 --nonlinear --horizon 10 --out " + out("sim_nl").string()), 0);
    const auto summary = load(out("sim_nl") / "summary.json");
    EXPECT_TRUE(summary["nonlinear"].get<bool>());
    EXPECT_TRUE(fs::exists(out("sim_nl") / "trajectory_droop.csv"));
    EXPECT_GT(summary["runs"][0]["energy"].get<double>(), 0.0);
}

TEST(CliTune, Examples) {
    ASSERT_EQ(run("tune --family complete --n 4 --out " + out("tune_a").string()), 0);
    const auto a = load(out("tune_a") / "tune.json");
    EXPECT_DOUBLE_EQ(a["gamma_star"].get<double>(), 0.25);
    EXPECT_EQ(a["method"], "complete_graph_formula");
    EXPECT_EQ(a["context"].size(), 3u);

    ASSERT_EQ(run("tune --family complete --n 4 --d 3 --out " + out("tune_b").string()), 0);
    const auto b = load(out("tune_b") / "tune.json");
    EXPECT_EQ(b["gamma_star"].get<double>(), 0.0);
    EXPECT_EQ(b["regime"], "all_overdamped");

    ASSERT_EQ(run("tune --family path --n 3 --d 0.5 --out " + out("tune_c").string()), 0);
    const auto c = load(out("tune_c") / "tune.json");
    const double g = c["gamma_star"].get<double>();
    EXPECT_GE(g, 0.4106);
    EXPECT_LE(g, 0.5);
    EXPECT_EQ(c["bracket"].size(), 2u);
    EXPECT_EQ(c["regime"], "all_underdamped");
}

TEST(CliDeterminism, RerunsAndThreadCountsGiveIdenticalFiles) {
    const std::string mc = "norm --family random_tree --n 12 --variant dapi --gamma 0.3 --method monte_carlo --samples 300 "
                           "--seed 5 --out ";
    ASSERT_EQ(run(mc + out("det_a").string(), "GRIDCOHER_THREADS=1"), 0);
    ASSERT_EQ(run(mc + out("det_b").string(), "GRIDCOHER_THREADS=6"), 0);
    ASSERT_EQ(run(mc + out("det_c").string(), "GRIDCOHER_THREADS=6"), 0);
    const auto a = slurp(out("det_a") / "norm_monte_carlo.json");
    EXPECT_EQ(a, slurp(out("det_b") / "norm_monte_carlo.json"));
    EXPECT_EQ(a, slurp(out("det_c") / "norm_monte_carlo.json"));

    const std::string sweep = "sweep --family erdos_renyi --p 0.3 --n-list 10,20,30 --seed 8 --out ";
    ASSERT_EQ(run(sweep + out("det_s1").string(), "GRIDCOHER_THREADS=1"), 0);
    ASSERT_EQ(run(sweep + out("det_s2").string(), "GRIDCOHER_THREADS=5"), 0);
    EXPECT_EQ(slurp(out("det_s1") / "sweep.csv"), slurp(out("det_s2") / "sweep.csv"));
}
