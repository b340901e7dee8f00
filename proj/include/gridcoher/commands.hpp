#pragma once

// The CLI subcommands as library calls. Each one computes everything first and
// writes its output files at the end, in a fixed order, so reruns with the
// same config and seed produce byte-identical files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridcoher/config.hpp"
#include "gridcoher/error.hpp"
#include "gridcoher/perf.hpp"

namespace gridcoher {

using WrittenFiles = std::vector<std::filesystem::path>;

/// norm_<method>.json per method; method "all" adds comparison.json.
WrittenFiles cmd_norm(const ExperimentConfig& config);

struct SweepOptions {
    std::string family = "path";
    std::vector<std::size_t> n_list{8, 16, 32, 64};
    std::vector<std::string> controllers{"droop", "capi", "dapi", "depi"};
    std::vector<double> gammas{0.3};  // one DAPI row per gamma
    double q = 1.0;
    double m = 1.0;
    double d = 1.0;
    double weight = 1.0;
    FamilyOptions family_options;
    NormMethod method = NormMethod::ClosedForm;
    MonteCarloConfig mc;
    std::uint64_t seed = 1;
    std::filesystem::path output = "out";
};

/// sweep.csv: family,n,controller,gamma,q,norm,bound,errors
WrittenFiles cmd_sweep(const SweepOptions& options);

struct SimulateOptions {
    std::optional<std::vector<double>> load;  // explicit P^m; otherwise drawn from the seed
    std::vector<std::string> compare;         // controller tokens; empty runs the config's controller
    bool nonlinear = false;
    std::size_t ensemble = 0;                 // >= 2: summary over that many seeded loads, no trajectories
};

/// trajectory_<label>.csv per run plus summary.json with the integrated y^T y.
WrittenFiles cmd_simulate(const ExperimentConfig& config, const SimulateOptions& options);

/// tune.json: the optimum plus the norm at gamma in {0, gamma*, 10 gamma* + 1}.
WrittenFiles cmd_tune(const ExperimentConfig& config, std::optional<double> q);

/// {"error": {"kind": ..., "message": ...}}
nlohmann::json error_json(ErrorKind kind, const std::string& message);

} // namespace gridcoher
