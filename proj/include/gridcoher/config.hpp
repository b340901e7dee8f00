#pragma once

// Experiment configuration: one JSON file, with CLI flags layered on top.
//
//   {
//     "graph":      {"family": "ring", "n": 10, "weight": 1.0, "rows": 0, "cols": 0, "p": 0.5}
//                   or {"edges": "net.csv"},
//     "params":     {"m": 1.0, "d": 1.0, "omega_ref": 0.0},       // scalars or per-bus lists
//     "controller": {"variant": "dapi", "q": 1.0, "gamma": 0.3},
//     "method":     "closed_form" | "lyapunov" | "monte_carlo" | "all",
//     "mc":         {"samples": 4000, "horizon": 40.0, "dt": 0.01},
//     "seed":       1,
//     "output":     "out"
//   }

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gridcoher/controllers.hpp"
#include "gridcoher/netmodel.hpp"

namespace gridcoher {

struct GraphConfig {
    std::string family = "path";
    std::size_t n = 2;
    double weight = 1.0;
    FamilyOptions options;
    std::optional<std::filesystem::path> edges;
};

struct ParamsConfig {
    std::vector<double> m{1.0};  // one entry means uniform
    std::vector<double> d{1.0};
    double omega_ref = 0.0;
};

struct ControllerConfig {
    std::string variant = "droop";
    std::vector<double> q{1.0};
    double gamma = 0.0;
};

struct MonteCarloConfig {
    std::size_t samples = 4000;
    std::optional<double> horizon;  // default: derived from the slowest pole
    double dt = 0.01;
};

struct ExperimentConfig {
    GraphConfig graph;
    ParamsConfig params;
    ControllerConfig controller;
    std::string method = "closed_form";
    MonteCarloConfig mc;
    std::uint64_t seed = 1;
    std::filesystem::path output = "out";
};

/// Unknown keys are rejected so that typos do not silently fall back to defaults.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

NetworkGraph build_graph(const GraphConfig& graph, std::uint64_t seed);
GeneratorParams build_params(const ParamsConfig& params, std::size_t n);
ControllerSpec build_controller(const ControllerConfig& controller, std::size_t n);

/// "droop", "capi", "depi", "dapi" or "dapi:<gamma>"; q comes from `base`.
ControllerConfig parse_controller_token(std::string_view token, const ControllerConfig& base);

/// "1,2.5,-3" -> {1, 2.5, -3}
std::vector<double> parse_number_list(std::string_view text);

} // namespace gridcoher
