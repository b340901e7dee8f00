// gridcoher: frequency-coherence experiments for droop, CAPI, DAPI and DePI
// controlled generator networks.
//
//   gridcoher norm     --config cfg.json [--method all]
//   gridcoher sweep    --family path --n-list 8,16,32,64 --controllers droop,dapi
//   gridcoher simulate --config cfg.json --compare droop,dapi:0.01,dapi:1
//   gridcoher tune     --config cfg.json --q 1

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridcoher/commands.hpp"
#include "gridcoher/io.hpp"

namespace {

using namespace gridcoher;

struct ConfigFlags {
    std::string config;
    std::uint64_t seed = 0;
    std::string out, method, family, edges, variant;
    std::size_t n = 0, samples = 0;
    double weight = 0, m = 0, d = 0, q = 0, gamma = 0, horizon = 0, dt = 0, omega_ref = 0, p = 0;
    std::map<std::string, CLI::Option*> opts;

    bool given(const std::string& name) const { return opts.at(name)->count() > 0; }
};

void add_config_flags(CLI::App* sub, ConfigFlags& f) {
    sub->add_option("--config", f.config, "Experiment JSON file")->check(CLI::ExistingFile);
    f.opts["seed"] = sub->add_option("--seed", f.seed, "Seed for every random draw");
    f.opts["out"] = sub->add_option("--out", f.out, "Output directory");
    f.opts["method"] = sub->add_option("--method", f.method, "closed_form | lyapunov | monte_carlo | all");
    f.opts["family"] = sub->add_option("--family", f.family, "complete | path | ring | grid2d | random_tree | erdos_renyi");
    f.opts["n"] = sub->add_option("--n", f.n, "Bus count");
    f.opts["weight"] = sub->add_option("--weight", f.weight, "Edge weight");
    f.opts["p"] = sub->add_option("--p", f.p, "erdos_renyi edge probability");
    f.opts["edges"] = sub->add_option("--edges", f.edges, "Edge-list CSV (i,j,k)");
    f.opts["m"] = sub->add_option("--m", f.m, "Uniform inertia");
    f.opts["d"] = sub->add_option("--d", f.d, "Uniform damping");
    f.opts["omega_ref"] = sub->add_option("--omega-ref", f.omega_ref, "Nominal frequency");
    f.opts["variant"] = sub->add_option("--variant", f.variant, "droop | capi | dapi | depi");
    f.opts["q"] = sub->add_option("--q", f.q, "Uniform integral gain q");
    f.opts["gamma"] = sub->add_option("--gamma", f.gamma, "DAPI communication gain");
    f.opts["samples"] = sub->add_option("--samples", f.samples, "Monte Carlo samples");
    f.opts["horizon"] = sub->add_option("--horizon", f.horizon, "Simulation horizon [s]");
    f.opts["dt"] = sub->add_option("--dt", f.dt, "Integrator step [s]");
}

ExperimentConfig resolve(const ConfigFlags& f) {
    ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
    if (f.given("seed")) cfg.seed = f.seed;
    if (f.given("out")) cfg.output = f.out;
    if (f.given("method")) cfg.method = f.method;
    if (f.given("family")) {
        cfg.graph.family = f.family;
        cfg.graph.edges.reset();
    }
    if (f.given("n")) cfg.graph.n = f.n;
    if (f.given("weight")) cfg.graph.weight = f.weight;
    if (f.given("p")) cfg.graph.options.edge_probability = f.p;
    if (f.given("edges")) cfg.graph.edges = f.edges;
    if (f.given("m")) cfg.params.m = {f.m};
    if (f.given("d")) cfg.params.d = {f.d};
    if (f.given("omega_ref")) cfg.params.omega_ref = f.omega_ref;
    if (f.given("variant")) cfg.controller.variant = f.variant;
    if (f.given("q")) cfg.controller.q = {f.q};
    if (f.given("gamma")) cfg.controller.gamma = f.gamma;
    if (f.given("samples")) cfg.mc.samples = f.samples;
    if (f.given("horizon")) cfg.mc.horizon = f.horizon;
    if (f.given("dt")) cfg.mc.dt = f.dt;
    return cfg;
}

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    for (char c : text) {
        if (c == ',') {
            if (!item.empty()) out.push_back(item);
            item.clear();
        } else if (c != ' ') {
            item += c;
        }
    }
    if (!item.empty()) out.push_back(item);
    return out;
}

void report_written(const WrittenFiles& files) {
    for (const auto& f : files) std::cout << f.string() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-coherence analysis of controlled generator networks"};
    app.require_subcommand(1);

    ConfigFlags norm_flags;
    auto* norm = app.add_subcommand("norm", "Evaluate the synchronization norm");
    add_config_flags(norm, norm_flags);

    ConfigFlags sweep_flags;
    std::string n_list = "8,16,32,64";
    std::string controllers = "droop,capi,dapi,depi";
    std::string gammas;
    auto* sweep = app.add_subcommand("sweep", "Norm versus network size for a graph family");
    add_config_flags(sweep, sweep_flags);
    sweep->add_option("--n-list", n_list, "Comma-separated bus counts");
    sweep->add_option("--controllers", controllers, "Comma-separated: droop, capi, depi, dapi, dapi:<gamma>");
    sweep->add_option("--gammas", gammas, "Comma-separated DAPI gains for plain 'dapi' entries");

    ConfigFlags sim_flags;
    std::string load_text, compare_text;
    bool nonlinear = false;
    std::size_t ensemble = 0;
    auto* simulate = app.add_subcommand("simulate", "Step-load trajectories and integrated y^T y");
    add_config_flags(simulate, sim_flags);
    simulate->add_option("--load", load_text, "Explicit load vector, comma-separated (default: drawn from --seed)");
    simulate->add_option("--compare", compare_text, "Controllers to run on the same load, e.g. droop,dapi:0.01,dapi:1");
    simulate->add_flag("--nonlinear", nonlinear, "Use the nonlinear swing dynamics");
    simulate->add_option("--ensemble", ensemble, "Average the integrated energy over this many seeded loads");

    ConfigFlags tune_flags;
    auto* tune = app.add_subcommand("tune", "Performance-optimal DAPI communication gain");
    add_config_flags(tune, tune_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << error_json(ErrorKind::Config, e.what()).dump() << '\n';
        return 2;
    }

    std::filesystem::path out_dir = "out";
    try {
        WrittenFiles written;
        if (*norm) {
            const auto cfg = resolve(norm_flags);
            out_dir = cfg.output;
            written = cmd_norm(cfg);
        } else if (*sweep) {
            const auto cfg = resolve(sweep_flags);
            out_dir = cfg.output;
            SweepOptions opts;
            opts.family = cfg.graph.family;
            opts.weight = cfg.graph.weight;
            opts.family_options = cfg.graph.options;
            opts.m = cfg.params.m.front();
            opts.d = cfg.params.d.front();
            opts.q = cfg.controller.q.front();
            opts.gammas = gammas.empty() ? std::vector<double>{cfg.controller.gamma} : parse_number_list(gammas);
            opts.method = parse_norm_method(cfg.method);
            opts.mc = cfg.mc;
            opts.seed = cfg.seed;
            opts.output = cfg.output;
            opts.controllers = split(controllers);
            opts.n_list.clear();
            for (double v : parse_number_list(n_list)) opts.n_list.push_back(static_cast<std::size_t>(v));
            written = cmd_sweep(opts);
        } else if (*simulate) {
            const auto cfg = resolve(sim_flags);
            out_dir = cfg.output;
            SimulateOptions opts;
            if (!load_text.empty()) opts.load = parse_number_list(load_text);
            opts.compare = split(compare_text);
            opts.nonlinear = nonlinear;
            opts.ensemble = ensemble;
            written = cmd_simulate(cfg, opts);
        } else if (*tune) {
            const auto cfg = resolve(tune_flags);
            out_dir = cfg.output;
            std::optional<double> q;
            if (tune_flags.given("q")) q = tune_flags.q;
            written = cmd_tune(cfg, q);
        }
        report_written(written);
        return 0;
    } catch (const Error& e) {
        const auto j = error_json(e.kind(), e.what());
        std::cerr << j.dump() << '\n';
        try {
            write_text_file(out_dir / "error.json", j.dump(2) + "\n");
        } catch (const std::exception&) {
        }
        return 1;
    } catch (const std::exception& e) {
        const nlohmann::json j{{"error", {{"kind", "internal"}, {"message", e.what()}}}};
        std::cerr << j.dump() << '\n';
        return 1;
    }
}
