#include "gridcoher/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "gridcoher/error.hpp"

namespace gridcoher {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!keys.count(key)) throw Error(ErrorKind::Config, std::string("unknown key '") + key + "' in " + where);
    }
}

std::vector<double> scalar_or_list(const json& v, const char* name) {
    if (v.is_number()) return {v.get<double>()};
    if (v.is_array() && !v.empty()) {
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw Error(ErrorKind::Config, std::string(name) + " must contain numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
    throw Error(ErrorKind::Config, std::string(name) + " must be a number or a non-empty list of numbers");
}

template <class T>
T get_as(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::Config, std::string("bad value for '") + key + "'");
    }
}

std::vector<double> expand(const std::vector<double>& v, std::size_t n, const char* name) {
    if (v.size() == 1) return std::vector<double>(n, v.front());
    if (v.size() != n) {
        throw Error(ErrorKind::Dimension, std::string(name) + " has " + std::to_string(v.size()) +
                                              " entries for " + std::to_string(n) + " buses");
    }
    return v;
}

} // namespace

ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw Error(ErrorKind::Config, "config must be a JSON object");
    reject_unknown(j, {"graph", "params", "controller", "method", "mc", "seed", "output"}, "config");
    ExperimentConfig cfg;

    if (j.contains("graph")) {
        const auto& g = j.at("graph");
        reject_unknown(g, {"family", "n", "weight", "rows", "cols", "p", "edges"}, "graph");
        cfg.graph.family = get_as<std::string>(g, "family", cfg.graph.family);
        cfg.graph.n = get_as<std::size_t>(g, "n", cfg.graph.n);
        cfg.graph.weight = get_as<double>(g, "weight", cfg.graph.weight);
        cfg.graph.options.rows = get_as<std::size_t>(g, "rows", 0);
        cfg.graph.options.cols = get_as<std::size_t>(g, "cols", 0);
        cfg.graph.options.edge_probability = get_as<double>(g, "p", cfg.graph.options.edge_probability);
        if (g.contains("edges")) {
            std::filesystem::path p = get_as<std::string>(g, "edges", "");
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            cfg.graph.edges = p;
        }
    }
    if (j.contains("params")) {
        const auto& p = j.at("params");
        reject_unknown(p, {"m", "d", "omega_ref"}, "params");
        if (p.contains("m")) cfg.params.m = scalar_or_list(p.at("m"), "m");
        if (p.contains("d")) cfg.params.d = scalar_or_list(p.at("d"), "d");
        cfg.params.omega_ref = get_as<double>(p, "omega_ref", 0.0);
    }
    if (j.contains("controller")) {
        const auto& c = j.at("controller");
        reject_unknown(c, {"variant", "q", "gamma"}, "controller");
        cfg.controller.variant = get_as<std::string>(c, "variant", cfg.controller.variant);
        if (c.contains("q")) cfg.controller.q = scalar_or_list(c.at("q"), "q");
        cfg.controller.gamma = get_as<double>(c, "gamma", 0.0);
    }
    cfg.method = get_as<std::string>(j, "method", cfg.method);
    if (j.contains("mc")) {
        const auto& mc = j.at("mc");
        reject_unknown(mc, {"samples", "horizon", "dt", "seed"}, "mc");
        cfg.mc.samples = get_as<std::size_t>(mc, "samples", cfg.mc.samples);
        if (mc.contains("horizon")) cfg.mc.horizon = get_as<double>(mc, "horizon", 0.0);
        cfg.mc.dt = get_as<double>(mc, "dt", cfg.mc.dt);
        // Accepted for compatibility; the top-level seed wins when both are present.
        if (mc.contains("seed") && !j.contains("seed")) cfg.seed = get_as<std::uint64_t>(mc, "seed", 1);
    }
    cfg.seed = get_as<std::uint64_t>(j, "seed", cfg.seed);
    if (j.contains("output")) cfg.output = get_as<std::string>(j, "output", "out");
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

NetworkGraph build_graph(const GraphConfig& graph, std::uint64_t seed) {
    if (graph.edges) return read_edge_list_csv(*graph.edges);
    return make_graph(parse_graph_family(graph.family), graph.n, graph.weight, seed, graph.options);
}

GeneratorParams build_params(const ParamsConfig& params, std::size_t n) {
    GeneratorParams p{expand(params.m, n, "m"), expand(params.d, n, "d"), params.omega_ref};
    p.validate(n);
    return p;
}

ControllerSpec build_controller(const ControllerConfig& controller, std::size_t n) {
    const auto& v = controller.variant;
    ControllerSpec spec;
    if (v == "droop") {
        spec = Droop{};
    } else if (v == "capi") {
        if (controller.q.size() != 1) throw Error(ErrorKind::Config, "CAPI takes a single scalar q");
        spec = Capi{controller.q.front()};
    } else if (v == "dapi") {
        spec = Dapi{expand(controller.q, n, "q"), controller.gamma, std::nullopt};
    } else if (v == "depi") {
        spec = Depi{expand(controller.q, n, "q")};
    } else {
        throw Error(ErrorKind::Config, "unknown controller variant '" + v + "'");
    }
    validate(spec, n);
    return spec;
}

ControllerConfig parse_controller_token(std::string_view token, const ControllerConfig& base) {
    ControllerConfig out = base;
    const auto colon = token.find(':');
    out.variant = std::string(token.substr(0, colon));
    if (colon != std::string_view::npos) {
        if (out.variant != "dapi") throw Error(ErrorKind::Config, "only dapi takes a gain suffix: " + std::string(token));
        const auto values = parse_number_list(token.substr(colon + 1));
        if (values.size() != 1) throw Error(ErrorKind::Config, "bad controller token '" + std::string(token) + "'");
        out.gamma = values.front();
    }
    return out;
}

std::vector<double> parse_number_list(std::string_view text) {
    std::vector<double> out;
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::Config, "not a number: '" + item + "'");
        }
    }
    return out;
}

} // namespace gridcoher
