// reuse-sim: two-cell OFDMA downlink resource allocation simulator.
//
// Subcommands
//   asymptotic   reuse-factor sweep of the large-population solver
//   compare      Monte Carlo optimal-vs-simplified power comparison
//   sensitivity  mean simplified power versus the fixed pivot distance
//   mse          normalized squared gap to the asymptotic power versus K
//   allocate     solve one scenario file and emit the allocation as JSON
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ofdma/allocation_json.hpp"
#include "ofdma/csv.hpp"
#include "ofdma/experiments.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

ofdma::ExperimentConfig load_config(const CommonArgs& args, ofdma::ExperimentKind kind) {
    nlohmann::json raw = nlohmann::json::object();
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw ofdma::ConfigError("cannot open config file: " + args.config_path);
        try {
            in >> raw;
        } catch (const nlohmann::json::exception& e) {
            throw ofdma::ConfigError(std::string("config file is not valid JSON: ") + e.what());
        }
    }
    auto cfg = ofdma::parse_experiment_config(raw);
    cfg.kind = kind;
    if (args.seed) cfg.seed = *args.seed;
    if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
    std::filesystem::create_directories(cfg.output_dir);
    if (args.seed) raw["seed"] = *args.seed;
    ofdma::write_run_meta(cfg, raw, cfg.output_dir);
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config JSON");
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "seed (overrides config)");
}

struct AllocateArgs {
    std::string scenario_path;
    std::string mode = "optimal";
    double d_a = -1, d_b = -1;
    std::string out_file = "allocation.json";
    std::string grid_csv;
    std::string trace_csv;
};

int run_allocate(const AllocateArgs& args) {
    const auto scen = ofdma::load_scenario(args.scenario_path);
    nlohmann::json out;
    if (args.mode == "optimal") {
        ofdma::GridSpec spec;
        const auto r = ofdma::optimal_allocate(scen.cell_a, scen.cell_b, scen.system, spec);
        out = ofdma::allocation_to_json(r, scen, "optimal");
        if (!args.grid_csv.empty()) {
            ofdma::csv::Writer w(args.grid_csv, "q1_a,q1_b,feasible,q_total");
            for (const auto& p : r.grid_diagnostics)
                w.row({p.q1_a, p.q1_b, static_cast<long long>(p.feasible ? 1 : 0), p.q_total});
        }
    } else if (args.mode == "simplified") {
        double da = args.d_a, db = args.d_b;
        if (da < 0 || db < 0) throw ofdma::ConfigError("flag '--d-a'/'--d-b': simplified mode needs pivot distances");
        const auto r = ofdma::simplified_allocate(scen.cell_a, scen.cell_b, da, db, scen.system);
        if (!args.trace_csv.empty()) {
            ofdma::csv::Writer w(args.trace_csv, "iter,q1_a,q1_b");
            for (std::size_t i = 0; i < r.pingpong.trace.size(); ++i)
                w.row({static_cast<long long>(i + 1), r.pingpong.trace[i].first, r.pingpong.trace[i].second});
        }
        if (!r.feasible) {
            std::cerr << "allocate: fixed-pivot allocation infeasible (reused-band iteration diverged)\n";
            return 2;
        }
        out = ofdma::allocation_to_json(r.alloc, scen, "simplified");
        out["d_subopt_a_m"] = da;
        out["d_subopt_b_m"] = db;
        out["pingpong_iterations"] = r.pingpong.iterations;
    } else {
        throw ofdma::ConfigError("flag '--mode': must be \"optimal\" or \"simplified\"");
    }
    std::ofstream f(args.out_file, std::ios::binary);
    if (!f) throw ofdma::ConfigError("cannot open output file: " + args.out_file);
    f << out.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-cell OFDMA downlink resource allocation simulator"};
    app.require_subcommand(1);

    CommonArgs sweep_args, compare_args, sens_args, mse_args;
    auto* cmd_asym = app.add_subcommand("asymptotic", "reuse-factor sweep of the asymptotic solver");
    add_common(cmd_asym, sweep_args);
    auto* cmd_cmp = app.add_subcommand("compare", "optimal vs simplified Monte Carlo comparison");
    add_common(cmd_cmp, compare_args);
    auto* cmd_sens = app.add_subcommand("sensitivity", "simplified power vs pivot distance");
    add_common(cmd_sens, sens_args);
    auto* cmd_mse = app.add_subcommand("mse", "normalized squared gap to the asymptotic power vs K");
    add_common(cmd_mse, mse_args);

    AllocateArgs alloc_args;
    auto* cmd_alloc = app.add_subcommand("allocate", "solve one scenario file");
    cmd_alloc->add_option("--scenario", alloc_args.scenario_path, "scenario JSON file")->required();
    cmd_alloc->add_option("--mode", alloc_args.mode, "optimal | simplified");
    cmd_alloc->add_option("--d-a", alloc_args.d_a, "pivot distance for cell A, m (simplified)");
    cmd_alloc->add_option("--d-b", alloc_args.d_b, "pivot distance for cell B, m (simplified)");
    cmd_alloc->add_option("--out", alloc_args.out_file, "output JSON path");
    cmd_alloc->add_option("--grid-csv", alloc_args.grid_csv, "dump search-grid diagnostics CSV");
    cmd_alloc->add_option("--trace-csv", alloc_args.trace_csv, "dump fixed-point iteration trace CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (cmd_alloc->parsed()) return run_allocate(alloc_args);
        if (cmd_asym->parsed()) {
            const auto cfg = load_config(sweep_args, ofdma::ExperimentKind::asymptotic_sweep);
            ofdma::write_asymptotic_sweep_csv(ofdma::run_asymptotic_sweep(cfg), cfg.output_dir);
        } else if (cmd_cmp->parsed()) {
            const auto cfg = load_config(compare_args, ofdma::ExperimentKind::compare);
            ofdma::write_compare_csv(ofdma::run_compare(cfg), cfg.output_dir);
        } else if (cmd_sens->parsed()) {
            const auto cfg = load_config(sens_args, ofdma::ExperimentKind::sensitivity);
            ofdma::write_sensitivity_csv(ofdma::run_sensitivity(cfg), cfg.output_dir);
        } else if (cmd_mse->parsed()) {
            const auto cfg = load_config(mse_args, ofdma::ExperimentKind::mse_convergence);
            ofdma::write_mse_csv(ofdma::run_mse_convergence(cfg), cfg.output_dir);
        }
    } catch (const ofdma::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
