#include "gridcoher/commands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gridcoher/io.hpp"
#include "gridcoher/parallel.hpp"
#include "gridcoher/random.hpp"
#include "gridcoher/simulate.hpp"
#include "gridcoher/tuning.hpp"

namespace gridcoher {

namespace {

using nlohmann::json;

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::filesystem::path write_json(const std::filesystem::path& dir, const std::string& name, const json& j) {
    const auto path = dir / name;
    write_text_file(path, dump(j));
    return path;
}

std::vector<NormMethod> requested_methods(const std::string& method) {
    if (method == "all") return {NormMethod::ClosedForm, NormMethod::Lyapunov, NormMethod::MonteCarlo};
    return {parse_norm_method(method)};
}

NormReport evaluate(NormMethod method, const NetworkGraph& graph, const GeneratorParams& params,
                    const ControllerSpec& controller, const MonteCarloConfig& mc, std::uint64_t seed) {
    switch (method) {
    case NormMethod::ClosedForm: return sync_norm_closed_form(graph, params, controller);
    case NormMethod::Lyapunov: return sync_norm_lyapunov(graph, params, controller);
    case NormMethod::MonteCarlo: {
        const ClosedLoopSystem sys = assemble(graph, params, controller);
        MonteCarloOptions opts;
        opts.samples = mc.samples;
        opts.horizon = mc.horizon ? *mc.horizon : default_horizon(sys);
        opts.dt = mc.dt;
        opts.master_seed = seed;
        return sync_norm_monte_carlo(sys, opts);
    }
    }
    throw Error(ErrorKind::Config, "unknown method");
}

double relative_difference(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

std::string run_label(const ControllerConfig& c) {
    if (c.variant == "dapi") return "dapi_gamma_" + format_double(c.gamma);
    return c.variant;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

struct Stats {
    double mean = 0.0;
    double std_error = 0.0;
};

Stats summarize(const std::vector<double>& values) {
    Stats s;
    const double count = static_cast<double>(values.size());
    for (double v : values) s.mean += v;
    s.mean /= count;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_error = values.size() > 1 ? std::sqrt(ss / (count - 1.0)) / std::sqrt(count) : 0.0;
    return s;
}

} // namespace

json error_json(ErrorKind kind, const std::string& message) {
    return {{"error", {{"kind", std::string(to_string(kind))}, {"message", message}}}};
}

WrittenFiles cmd_norm(const ExperimentConfig& config) {
    const NetworkGraph graph = build_graph(config.graph, config.seed);
    const std::size_t n = graph.size();
    const GeneratorParams params = build_params(config.params, n);
    const ControllerSpec controller = build_controller(config.controller, n);
    const auto methods = requested_methods(config.method);

    std::vector<NormReport> reports;
    for (auto method : methods) reports.push_back(evaluate(method, graph, params, controller, config.mc, config.seed));

    WrittenFiles written;
    for (const auto& report : reports) {
        auto j = to_json(report);
        j["controller"] = std::string(variant_name(controller));
        j["n"] = n;
        written.push_back(write_json(config.output, "norm_" + std::string(to_string(report.method)) + ".json", j));
    }
    if (config.method == "all") {
        json pairs = json::array();
        for (std::size_t a = 0; a < reports.size(); ++a) {
            for (std::size_t b = a + 1; b < reports.size(); ++b) {
                json pair{{"a", std::string(to_string(reports[a].method))},
                          {"b", std::string(to_string(reports[b].method))},
                          {"relative_difference", relative_difference(reports[a].value, reports[b].value)}};
                const auto& mc = reports[a].std_error ? reports[a] : reports[b];
                if (mc.std_error) {
                    pair["within_3_stderr"] = std::abs(reports[a].value - reports[b].value) <= 3.0 * *mc.std_error;
                }
                pairs.push_back(std::move(pair));
            }
        }
        written.push_back(write_json(config.output, "comparison.json", {{"pairs", pairs}}));
    }
    return written;
}

WrittenFiles cmd_sweep(const SweepOptions& options) {
    struct Row {
        std::size_t n = 0;
        ControllerConfig controller;
        std::optional<double> norm;
        std::optional<double> bound;
        std::string error;
    };
    ControllerConfig base;
    base.q = {options.q};
    std::vector<Row> rows;
    for (auto n : options.n_list) {
        if (n < 2) throw Error(ErrorKind::Config, "sweep sizes must be >= 2");
        for (const auto& token : options.controllers) {
            const ControllerConfig c = parse_controller_token(token, base);
            if (c.variant == "dapi" && token.find(':') == std::string::npos) {
                for (double g : options.gammas) {
                    Row r{n, c, {}, {}, {}};
                    r.controller.gamma = g;
                    rows.push_back(r);
                }
            } else {
                rows.push_back({n, c, {}, {}, {}});
            }
        }
    }

    auto compute = [&](std::size_t i) {
        Row& row = rows[i];
        try {
            const GraphFamily family = parse_graph_family(options.family);
            const NetworkGraph graph = make_graph(family, row.n, options.weight, options.seed, options.family_options);
            const auto params = GeneratorParams::uniform(row.n, options.m, options.d);
            const ControllerSpec spec = build_controller(row.controller, row.n);
            row.norm = evaluate(options.method, graph, params, spec, options.mc, options.seed).value;
            if (row.controller.variant == "dapi") {
                row.bound = scaling_bound_dapi(row.controller.gamma, options.d, options.q);
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    };
    if (options.method == NormMethod::MonteCarlo) {
        // Monte Carlo parallelizes over samples already.
        for (std::size_t i = 0; i < rows.size(); ++i) compute(i);
    } else {
        parallel_for(rows.size(), compute);
    }

    std::ostringstream os;
    os << "family,n,controller,gamma,q,norm,bound,errors\n";
    for (const auto& r : rows) {
        const auto& v = r.controller.variant;
        os << options.family << ',' << r.n << ',' << v << ',';
        if (v == "dapi") os << format_double(r.controller.gamma);
        os << ',';
        if (v != "droop") os << format_double(options.q);
        os << ',';
        if (r.norm) os << format_double(*r.norm);
        os << ',';
        if (r.bound) os << format_double(*r.bound);
        os << ',' << csv_field(r.error) << '\n';
    }
    const auto path = options.output / "sweep.csv";
    write_text_file(path, os.str());
    return {path};
}

WrittenFiles cmd_simulate(const ExperimentConfig& config, const SimulateOptions& options) {
    const NetworkGraph graph = build_graph(config.graph, config.seed);
    const std::size_t n = graph.size();
    const GeneratorParams params = build_params(config.params, n);

    std::vector<ControllerConfig> runs;
    if (options.compare.empty()) {
        runs.push_back(config.controller);
    } else {
        for (const auto& token : options.compare) runs.push_back(parse_controller_token(token, config.controller));
    }
    std::vector<ControllerSpec> specs;
    std::vector<ClosedLoopSystem> systems;
    for (const auto& r : runs) {
        specs.push_back(build_controller(r, n));
        systems.push_back(assemble(graph, params, specs.back()));
    }

    double horizon = 0.0;
    if (config.mc.horizon) {
        horizon = *config.mc.horizon;
    } else {
        for (const auto& sys : systems) horizon = std::max(horizon, default_horizon(sys));
    }
    const double dt = config.mc.dt;
    const Eigen::VectorXd delta0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));

    json summary{{"n", n}, {"horizon", horizon}, {"dt", dt}, {"seed", config.seed}, {"nonlinear", options.nonlinear}};
    WrittenFiles written;

    if (options.ensemble >= 2) {
        if (options.load) throw Error(ErrorKind::Config, "an ensemble draws its own loads; drop the explicit load");
        json out_runs = json::array();
        for (std::size_t r = 0; r < runs.size(); ++r) {
            std::vector<double> energy(options.ensemble);
            parallel_for(options.ensemble, [&](std::size_t i) {
                const Eigen::VectorXd p = DisturbanceSample::draw(n, mix_seed(config.seed, i)).p_m;
                energy[i] = options.nonlinear
                                ? simulate_nonlinear(graph, params, specs[r], p, delta0, horizon, dt).energy
                                : integrate_output_energy(systems[r], p, horizon, dt);
            });
            const Stats s = summarize(energy);
            out_runs.push_back({{"label", run_label(runs[r])},
                                {"controller", runs[r].variant},
                                {"mean_energy", s.mean},
                                {"stderr", s.std_error},
                                {"samples", options.ensemble}});
        }
        summary["runs"] = std::move(out_runs);
        written.push_back(write_json(config.output, "summary.json", summary));
        return written;
    }

    Eigen::VectorXd load;
    if (options.load) {
        load = Eigen::Map<const Eigen::VectorXd>(options.load->data(), static_cast<Eigen::Index>(options.load->size()));
        if (load.size() != static_cast<Eigen::Index>(n)) {
            throw Error(ErrorKind::Dimension, "load has " + std::to_string(load.size()) + " entries for " +
                                                  std::to_string(n) + " buses");
        }
    } else {
        load = DisturbanceSample::draw(n, mix_seed(config.seed, 0)).p_m;
    }

    std::vector<TrajectoryRecord> records;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        records.push_back(options.nonlinear ? simulate_nonlinear(graph, params, specs[r], load, delta0, horizon, dt)
                                            : simulate_linear(systems[r], load, horizon, dt));
    }
    json out_runs = json::array();
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto name = "trajectory_" + run_label(runs[r]) + ".csv";
        write_text_file(config.output / name, trajectory_csv(records[r]));
        written.push_back(config.output / name);
        out_runs.push_back({{"label", run_label(runs[r])},
                            {"controller", runs[r].variant},
                            {"trajectory", name},
                            {"energy", records[r].energy},
                            {"warnings", records[r].warnings}});
    }
    summary["load"] = std::vector<double>(load.data(), load.data() + load.size());
    summary["runs"] = std::move(out_runs);
    written.push_back(write_json(config.output, "summary.json", summary));
    return written;
}

WrittenFiles cmd_tune(const ExperimentConfig& config, std::optional<double> q_override) {
    const NetworkGraph graph = build_graph(config.graph, config.seed);
    const std::size_t n = graph.size();
    const GeneratorParams params = build_params(config.params, n);
    if (!params.is_uniform()) {
        throw Error(ErrorKind::Assumption, "tuning requires uniform parameters: inertia and damping must be identical on every bus");
    }
    double q = 0.0;
    if (q_override) {
        q = *q_override;
    } else {
        const auto& qs = config.controller.q;
        if (!std::all_of(qs.begin(), qs.end(), [&](double v) { return v == qs.front(); })) {
            throw Error(ErrorKind::Assumption, "tuning requires a uniform gain q");
        }
        q = qs.front();
    }
    const double m = params.m.front();
    const double d = params.d.front();
    const LaplacianSpectrum spec = spectrum(graph);

    const bool complete = !config.graph.edges && config.graph.family == "complete";
    const GammaOptimum opt = complete ? optimal_gamma_complete(m, d, q, config.graph.weight, n)
                                      : optimal_gamma_general(spec, m, d, q);

    json j = to_json(opt);
    j["method"] = complete ? "complete_graph_formula" : "golden_section";
    j["q"] = q;
    json context = json::array();
    for (double g : {0.0, opt.gamma_star, 10.0 * opt.gamma_star + 1.0}) {
        context.push_back({{"gamma", g}, {"norm", dapi_norm(spec, m, d, q, g)}});
    }
    j["context"] = std::move(context);
    return {write_json(config.output, "tune.json", j)};
}

} // namespace gridcoher
