#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ofdma/asymptotic.hpp"
#include "ofdma/csv.hpp"
#include "ofdma/optimal.hpp"
#include "ofdma/parallel.hpp"
#include "ofdma/system.hpp"

// Monte Carlo experiment driver: reuse-factor sweeps, optimal-vs-simplified
// power comparison, pivot-distance sensitivity and convergence of the finite
// population to the asymptotic limit. All experiments are deterministic in
// (config, seed): trials use per-index derived seeds and order-independent
// aggregation.

namespace ofdma {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { asymptotic_sweep, compare, sensitivity, mse_convergence, allocate };

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
    if (s == "asymptotic_sweep") return ExperimentKind::asymptotic_sweep;
    if (s == "compare") return ExperimentKind::compare;
    if (s == "sensitivity") return ExperimentKind::sensitivity;
    if (s == "mse_convergence") return ExperimentKind::mse_convergence;
    if (s == "allocate") return ExperimentKind::allocate;
    throw ConfigError("config field 'experiment': unknown kind \"" + s + "\"");
}

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::asymptotic_sweep;
    SystemParams system;
    std::vector<int> k_per_cell{25, 50};
    std::vector<double> r_t_bps{2e6, 5e6, 10e6, 15e6, 20e6};
    int trials = 200;
    std::uint64_t seed = 1;
    std::vector<double> alpha_grid;  // defaults to 0.05..1.00 step 0.05
    std::vector<double> d_grid_m;    // sensitivity pivot grid; defaults to 25 points
    double compare_alpha_halfwidth = 0.15;
    std::filesystem::path output_dir = "out";
    // Search resolution for the per-trial optimal allocations.
    int grid_n = 16;
    bool polish = true;
    int asym_diag_n = 40;
};

namespace detail {

template <class T>
T require_field(const nlohmann::json& j, const char* name) {
    if (!j.contains(name)) throw ConfigError(std::string("config field '") + name + "': missing");
    try {
        return j.at(name).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config field '") + name + "': wrong type");
    }
}

template <class T>
T field_or(const nlohmann::json& j, const char* name, T def) {
    if (!j.contains(name)) return def;
    try {
        return j.at(name).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config field '") + name + "': wrong type");
    }
}

inline std::vector<double> default_alpha_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 20; ++i) g.push_back(0.05 * i);
    return g;
}

inline std::vector<double> default_d_grid(const SystemParams& p) {
    std::vector<double> g;
    const double step = p.cell_radius_m / 25.0;
    for (int i = 1; i <= 25; ++i) g.push_back(step * i);
    return g;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    ExperimentConfig c;
    if (j.contains("experiment")) c.kind = experiment_kind_from_string(detail::require_field<std::string>(j, "experiment"));
    if (j.contains("system")) {
        try {
            j.at("system").get_to(c.system);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config field 'system': ") + e.what());
        }
    }
    try {
        c.system.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config field 'system': ") + e.what());
    }
    c.k_per_cell = detail::field_or(j, "k_per_cell", c.k_per_cell);
    for (int k : c.k_per_cell)
        if (k < 1) throw ConfigError("config field 'k_per_cell': entries must be >= 1");
    c.r_t_bps = detail::field_or(j, "r_t_bps", c.r_t_bps);
    for (double r : c.r_t_bps)
        if (!(r > 0)) throw ConfigError("config field 'r_t_bps': entries must be positive");
    c.trials = detail::field_or(j, "trials", c.trials);
    if (c.trials < 1) throw ConfigError("config field 'trials': must be >= 1");
    c.seed = detail::field_or<std::uint64_t>(j, "seed", c.seed);
    c.alpha_grid = detail::field_or(j, "alpha_grid", std::vector<double>{});
    if (c.alpha_grid.empty()) c.alpha_grid = detail::default_alpha_grid();
    for (double a : c.alpha_grid)
        if (!(a >= 0 && a <= 1)) throw ConfigError("config field 'alpha_grid': entries must lie in [0, 1]");
    if (c.alpha_grid.size() < 3) throw ConfigError("config field 'alpha_grid': need at least 3 points");
    c.d_grid_m = detail::field_or(j, "d_grid_m", std::vector<double>{});
    if (c.d_grid_m.empty()) c.d_grid_m = detail::default_d_grid(c.system);
    for (double d : c.d_grid_m)
        if (!(d >= c.system.epsilon_m && d <= c.system.cell_radius_m))
            throw ConfigError("config field 'd_grid_m': entries must lie in [epsilon_m, cell_radius_m]");
    c.compare_alpha_halfwidth = detail::field_or(j, "compare_alpha_halfwidth", c.compare_alpha_halfwidth);
    if (!(c.compare_alpha_halfwidth > 0)) throw ConfigError("config field 'compare_alpha_halfwidth': must be positive");
    c.output_dir = detail::field_or<std::string>(j, "output_dir", c.output_dir.string());
    c.grid_n = detail::field_or(j, "grid_n", c.grid_n);
    if (c.grid_n < 2) throw ConfigError("config field 'grid_n': must be >= 2");
    c.polish = detail::field_or(j, "polish", c.polish);
    c.asym_diag_n = detail::field_or(j, "asym_diag_n", c.asym_diag_n);
    if (c.asym_diag_n < 8) throw ConfigError("config field 'asym_diag_n': must be >= 8");
    return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    return parse_experiment_config(j);
}

// ---------------------------------------------------------------------------

namespace detail {

inline SweepOptions sweep_options(const ExperimentConfig& c) {
    SweepOptions o;
    o.grid.diag_n = c.asym_diag_n;
    return o;
}

// The per-trial optimal arm scans reuse factors near the asymptotically
// optimal one (the power curve is flat there) instead of the full grid.
inline std::vector<double> trial_alpha_window(const ExperimentConfig& c, double alpha_opt) {
    std::vector<double> w;
    for (double a : c.alpha_grid)
        if (std::fabs(a - alpha_opt) <= c.compare_alpha_halfwidth) w.push_back(a);
    w.push_back(alpha_opt);
    std::sort(w.begin(), w.end());
    w.erase(std::unique(w.begin(), w.end(), [](double a, double b) { return std::fabs(a - b) < 1e-12; }), w.end());
    return w;
}

struct TrialOutcome {
    bool opt_ok = false, sub_ok = false;
    double q_opt = 0, q_sub = 0;
};

// One Monte Carlo draw: simplified allocation at (alpha_opt, d_opt) and the
// best optimal allocation over the alpha window, seeded with the simplified
// operating point so the optimum can never be reported above it.
inline TrialOutcome run_trial(const ExperimentConfig& c, int k, double r_t, double alpha_opt, double d_opt,
                              const std::vector<double>& alpha_window, std::uint64_t trial_seed,
                              const kern::KernelConfig& kc) {
    TrialOutcome out;
    const double rate_per_user = r_t * M_LN2 / k;
    const auto [cell_a, cell_b] = generate_scenario(k, rate_per_user, trial_seed, c.system);

    SystemParams sub_params = c.system;
    sub_params.alpha = alpha_opt;
    std::optional<std::pair<double, double>> sub_point;
    try {
        const auto sub = simplified_allocate(cell_a, cell_b, d_opt, d_opt, sub_params, {}, kc);
        if (sub.feasible) {
            out.sub_ok = true;
            out.q_sub = sub.alloc.q_total;
            sub_point = sub.alloc.grid_point;
        }
    } catch (const std::exception&) {
    }

    GridSpec spec;
    spec.n = c.grid_n;
    spec.polish = c.polish;
    spec.keep_diagnostics = false;
    double best = std::numeric_limits<double>::infinity();
    for (double a : alpha_window) {
        SystemParams params = c.system;
        params.alpha = a;
        GridSpec s = spec;
        if (sub_point && std::fabs(a - alpha_opt) < 1e-12) s.seed_points.push_back(*sub_point);
        try {
            const auto r = optimal_allocate(cell_a, cell_b, params, s, kc);
            best = std::min(best, r.q_total);
        } catch (const std::exception&) {
        }
    }
    if (std::isfinite(best)) {
        out.opt_ok = true;
        out.q_opt = best;
    }
    return out;
}

inline std::uint64_t trial_stream(std::size_t r_idx, std::size_t k_idx, int trial) {
    return (static_cast<std::uint64_t>(r_idx) << 48) ^ (static_cast<std::uint64_t>(k_idx) << 32) ^
           static_cast<std::uint64_t>(trial);
}

}  // namespace detail

// --------------------------- asymptotic sweep ------------------------------

struct AsymptoticSweepResult {
    std::vector<SweepResult> per_rate;  // aligned with config.r_t_bps
};

inline AsymptoticSweepResult run_asymptotic_sweep(const ExperimentConfig& c, const kern::KernelConfig& kc = {}) {
    AsymptoticSweepResult out;
    const auto opts = detail::sweep_options(c);
    for (double r_t : c.r_t_bps) {
        const auto scen = AsymptoticScenario::from_sum_rate_bps(r_t, c.system);
        out.per_rate.push_back(reuse_factor_sweep(scen, c.alpha_grid, opts, kc));
    }
    return out;
}

inline void write_asymptotic_sweep_csv(const AsymptoticSweepResult& r, const std::filesystem::path& dir) {
    csv::Writer grid(dir / "asymptotic_sweep.csv", "alpha,r_t_bps,d_opt_m,q1,q2,q_t,feasible");
    for (const auto& sweep : r.per_rate)
        for (const auto& p : sweep.points)
            grid.row({p.alpha, p.r_t_bps, p.d_opt_m, p.q1, p.q2, p.q_t, static_cast<long long>(p.feasible ? 1 : 0)});
    csv::Writer summary(dir / "asymptotic_summary.csv", "r_t_bps,alpha_opt,d_opt_m,q1,q2,q_t,feasible");
    for (const auto& sweep : r.per_rate) {
        const double r_t = sweep.points.empty() ? 0.0 : sweep.points.front().r_t_bps;
        summary.row({r_t, sweep.alpha_opt, sweep.d_opt_m, sweep.q1_opt, sweep.q2_opt, sweep.q_t_opt,
                     static_cast<long long>(sweep.feasible() ? 1 : 0)});
    }
}

// ------------------------------- compare -----------------------------------

struct CompareRow {
    double r_t_bps = 0;
    int k_per_cell = 0;
    double mean_q_opt = 0;
    double mean_q_subopt = 0;
    double var_q_subopt = 0;
    double q_t_asymptotic = 0;
    int trials = 0;            // trials aggregated (both allocators feasible)
    int infeasible_trials = 0;
};

struct CompareResult {
    std::vector<CompareRow> rows;
};

inline CompareResult run_compare(const ExperimentConfig& c, const kern::KernelConfig& kc = {}) {
    CompareResult out;
    const auto opts = detail::sweep_options(c);
    for (std::size_t ri = 0; ri < c.r_t_bps.size(); ++ri) {
        const double r_t = c.r_t_bps[ri];
        const auto scen = AsymptoticScenario::from_sum_rate_bps(r_t, c.system);
        const auto sweep = reuse_factor_sweep(scen, c.alpha_grid, opts, kc);
        if (!sweep.feasible()) throw std::runtime_error("run_compare: reuse-factor sweep found no feasible alpha");
        const auto window = detail::trial_alpha_window(c, sweep.alpha_opt);
        for (std::size_t ki = 0; ki < c.k_per_cell.size(); ++ki) {
            const int k = c.k_per_cell[ki];
            std::vector<detail::TrialOutcome> trials(c.trials);
            parallel_for(trials.size(), [&](std::size_t t) {
                trials[t] = detail::run_trial(c, k, r_t, sweep.alpha_opt, sweep.d_opt_m, window,
                                              rng::derive_seed(c.seed, detail::trial_stream(ri, ki, static_cast<int>(t))),
                                              kc);
            });
            CompareRow row;
            row.r_t_bps = r_t;
            row.k_per_cell = k;
            row.q_t_asymptotic = sweep.q_t_opt;
            double sum_opt = 0, sum_sub = 0, sum_sub2 = 0;
            for (const auto& t : trials) {
                if (t.opt_ok && t.sub_ok) {
                    ++row.trials;
                    sum_opt += t.q_opt;
                    sum_sub += t.q_sub;
                    sum_sub2 += t.q_sub * t.q_sub;
                } else {
                    ++row.infeasible_trials;
                }
            }
            if (row.trials > 0) {
                row.mean_q_opt = sum_opt / row.trials;
                row.mean_q_subopt = sum_sub / row.trials;
                row.var_q_subopt = std::max(0.0, sum_sub2 / row.trials - row.mean_q_subopt * row.mean_q_subopt);
            }
            out.rows.push_back(row);
        }
    }
    return out;
}

inline void write_compare_csv(const CompareResult& r, const std::filesystem::path& dir) {
    csv::Writer w(dir / "compare.csv",
                  "r_t_bps,k_per_cell,mean_q_opt,mean_q_subopt,var_q_subopt,q_t_asymptotic,trials,infeasible_trials");
    for (const auto& row : r.rows)
        w.row({row.r_t_bps, static_cast<long long>(row.k_per_cell), row.mean_q_opt, row.mean_q_subopt,
               row.var_q_subopt, row.q_t_asymptotic, static_cast<long long>(row.trials),
               static_cast<long long>(row.infeasible_trials)});
}

// ----------------------------- sensitivity ---------------------------------

struct SensitivityPoint {
    double d_m = 0;
    double mean_q_subopt = std::numeric_limits<double>::quiet_NaN();
    int trials = 0;
    int infeasible_trials = 0;
};

struct SensitivityResult {
    std::vector<SensitivityPoint> points;
    double d_opt_m = 0;      // asymptotically optimal pivot
    double alpha_opt = 0;
    int argmin_index = -1;
};

inline SensitivityResult run_sensitivity(const ExperimentConfig& c, const kern::KernelConfig& kc = {}) {
    if (c.r_t_bps.empty() || c.k_per_cell.empty()) throw ConfigError("sensitivity: need r_t_bps and k_per_cell");
    const double r_t = c.r_t_bps.front();
    const int k = c.k_per_cell.front();
    const auto scen = AsymptoticScenario::from_sum_rate_bps(r_t, c.system);
    const auto sweep = reuse_factor_sweep(scen, c.alpha_grid, detail::sweep_options(c), kc);
    if (!sweep.feasible()) throw std::runtime_error("run_sensitivity: reuse-factor sweep found no feasible alpha");

    SensitivityResult out;
    out.d_opt_m = sweep.d_opt_m;
    out.alpha_opt = sweep.alpha_opt;
    out.points.assign(c.d_grid_m.size(), SensitivityPoint{});

    SystemParams params = c.system;
    params.alpha = sweep.alpha_opt;
    const double rate_per_user = r_t * M_LN2 / k;

    struct Task {
        std::size_t d_idx;
        int trial;
    };
    std::vector<Task> tasks;
    for (std::size_t di = 0; di < c.d_grid_m.size(); ++di)
        for (int t = 0; t < c.trials; ++t) tasks.push_back({di, t});
    std::vector<double> q(tasks.size(), std::numeric_limits<double>::quiet_NaN());
    parallel_for(tasks.size(), [&](std::size_t i) {
        const auto [di, t] = tasks[i];
        const auto seed = rng::derive_seed(c.seed, detail::trial_stream(0, 0, t));  // same draws across d
        const auto [cell_a, cell_b] = generate_scenario(k, rate_per_user, seed, params);
        try {
            const auto sub = simplified_allocate(cell_a, cell_b, c.d_grid_m[di], c.d_grid_m[di], params, {}, kc);
            if (sub.feasible) q[i] = sub.alloc.q_total;
        } catch (const std::exception&) {
        }
    });
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        auto& p = out.points[tasks[i].d_idx];
        p.d_m = c.d_grid_m[tasks[i].d_idx];
        if (std::isfinite(q[i])) {
            p.mean_q_subopt = (std::isfinite(p.mean_q_subopt) ? p.mean_q_subopt : 0.0) + q[i];
            ++p.trials;
        } else {
            ++p.infeasible_trials;
        }
    }
    for (auto& p : out.points)
        if (p.trials > 0) p.mean_q_subopt /= p.trials;
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        if (out.points[i].trials == 0) continue;
        if (out.argmin_index < 0 || out.points[i].mean_q_subopt < out.points[out.argmin_index].mean_q_subopt)
            out.argmin_index = static_cast<int>(i);
    }
    return out;
}

inline void write_sensitivity_csv(const SensitivityResult& r, const std::filesystem::path& dir) {
    csv::Writer w(dir / "sensitivity.csv", "d_m,mean_q_subopt,trials,infeasible_trials");
    for (const auto& p : r.points)
        w.row({p.d_m, p.mean_q_subopt, static_cast<long long>(p.trials), static_cast<long long>(p.infeasible_trials)});
    csv::Writer s(dir / "sensitivity_summary.csv", "d_argmin_m,d_opt_m,alpha_opt");
    s.row({r.argmin_index >= 0 ? r.points[r.argmin_index].d_m : std::numeric_limits<double>::quiet_NaN(), r.d_opt_m,
           r.alpha_opt});
}

// --------------------------- mse convergence -------------------------------

struct MsePoint {
    int k_per_cell = 0;
    double normalized_mse = std::numeric_limits<double>::quiet_NaN();
    int trials = 0;
    int infeasible_trials = 0;
};

struct MseResult {
    std::vector<MsePoint> points;
    double q_t_asymptotic = 0;
};

inline MseResult run_mse_convergence(const ExperimentConfig& c, const kern::KernelConfig& kc = {}) {
    if (c.r_t_bps.empty()) throw ConfigError("mse_convergence: need r_t_bps");
    const double r_t = c.r_t_bps.front();
    const auto scen = AsymptoticScenario::from_sum_rate_bps(r_t, c.system);
    const auto sweep = reuse_factor_sweep(scen, c.alpha_grid, detail::sweep_options(c), kc);
    if (!sweep.feasible()) throw std::runtime_error("run_mse_convergence: reuse-factor sweep found no feasible alpha");
    const auto window = detail::trial_alpha_window(c, sweep.alpha_opt);

    MseResult out;
    out.q_t_asymptotic = sweep.q_t_opt;
    for (std::size_t ki = 0; ki < c.k_per_cell.size(); ++ki) {
        const int k = c.k_per_cell[ki];
        std::vector<detail::TrialOutcome> trials(c.trials);
        parallel_for(trials.size(), [&](std::size_t t) {
            trials[t] = detail::run_trial(c, k, r_t, sweep.alpha_opt, sweep.d_opt_m, window,
                                          rng::derive_seed(c.seed, detail::trial_stream(1, ki, static_cast<int>(t))),
                                          kc);
        });
        MsePoint p;
        p.k_per_cell = k;
        double sum = 0;
        for (const auto& t : trials) {
            if (t.opt_ok) {
                ++p.trials;
                const double rel = (t.q_opt - sweep.q_t_opt) / sweep.q_t_opt;
                sum += rel * rel;
            } else {
                ++p.infeasible_trials;
            }
        }
        if (p.trials > 0) p.normalized_mse = sum / p.trials;
        out.points.push_back(p);
    }
    return out;
}

inline void write_mse_csv(const MseResult& r, const std::filesystem::path& dir) {
    csv::Writer w(dir / "mse.csv", "k_per_cell,normalized_mse,trials,infeasible_trials");
    for (const auto& p : r.points)
        w.row({static_cast<long long>(p.k_per_cell), p.normalized_mse, static_cast<long long>(p.trials),
               static_cast<long long>(p.infeasible_trials)});
}

// --------------------------------------------------------------------------

inline void write_run_meta(const ExperimentConfig& c, const nlohmann::json& raw_config,
                           const std::filesystem::path& dir) {
    nlohmann::json meta;
    meta["seed"] = c.seed;
    meta["config"] = raw_config;
    std::ofstream out(dir / "run_meta.json", std::ios::binary);
    out << meta.dump(2) << '\n';
}

}  // namespace ofdma
