#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ofdma/grids.hpp"
#include "ofdma/kernels.hpp"
#include "ofdma/parallel.hpp"
#include "ofdma/system.hpp"

// Large-population limit: users are described by a density on [epsilon, D] and
// an aggregate per-Hz rate, the pivot becomes a distance d, and the band
// budgets/powers become integrals against the density. Solving the limiting
// system yields the pivot distance and reuse factor fed to the fixed-pivot
// allocator.

namespace ofdma {

struct Density {
    double lo = 0, hi = 0;
    std::function<double(double)> pdf;

    static Density uniform(double lo, double hi) {
        return Density{lo, hi, [lo, hi](double) { return 1.0 / (hi - lo); }};
    }
};

struct AsymptoticScenario {
    double mean_rate_nats_hz = 0;  // aggregate per-cell rate density: (t/2) * mean user rate, nats/s/Hz
    Density user_density;
    SystemParams params;
    double users_per_hz = 0;  // t = K/B; informational

    double sum_rate_bps() const { return mean_rate_nats_hz * params.bandwidth_hz / M_LN2; }

    static AsymptoticScenario from_sum_rate_bps(double r_t_bps, const SystemParams& params) {
        if (!(r_t_bps > 0)) throw std::invalid_argument("AsymptoticScenario: sum rate must be positive");
        params.validate();
        AsymptoticScenario s;
        s.params = params;
        s.mean_rate_nats_hz = r_t_bps * M_LN2 / params.bandwidth_hz;
        s.user_density = Density::uniform(params.epsilon_m, params.cell_radius_m);
        return s;
    }
};

// Per-user power density at position x and level beta in a band seeing
// interference power q_bar:  f_inv(g b~) / (g cap(g b~)) with b~ = beta/(1+xi).
inline double script_f(double x_m, double beta, double q_bar_w, double xi, const SystemParams& p,
                       const kern::KernelConfig& kc = {}) {
    const double g = g1(x_m, q_bar_w, p);
    const double y = g * beta / (1.0 + xi);
    if (y == 0.0) return 0.0;
    const auto e = kern::eval_at(y, kc);
    return e.m / (g * e.cap);
}

// Per-user bandwidth density: 1 / cap(g beta/(1+xi)).
inline double script_g(double x_m, double beta, double q_bar_w, double xi, const SystemParams& p,
                       const kern::KernelConfig& kc = {}) {
    const double g = g1(x_m, q_bar_w, p);
    return 1.0 / kern::cap(g * beta / (1.0 + xi), kc);
}

struct AsymSolveOptions {
    int quad_n = 32;          // Gauss-Legendre nodes per band integral
    double d_margin = 1e-9;   // relative inset of the d search range from [epsilon, D]
    int presample_n = 9;      // d presamples for bracketing and monotonicity guarding
};

struct RelaxedCellSolution {
    double d_m = 0;
    double beta1_tilde = 0;
    std::optional<double> beta2;
    double xi = 0;
    double q1_achieved = 0;
    bool equality = false;  // q1_achieved matches the cap
};

namespace detail {

class AsymptoticSolver {
  public:
    AsymptoticSolver(const AsymptoticScenario& scen, double alpha, const AsymSolveOptions& opt,
                     const kern::KernelConfig& kc)
        : scen_(scen), alpha_(alpha), opt_(opt), kc_(kc) {
        if (!(alpha >= 0 && alpha <= 1)) throw std::invalid_argument("asymptotic solve: alpha must lie in [0, 1]");
        if (!(scen.mean_rate_nats_hz > 0)) throw std::invalid_argument("asymptotic solve: mean rate must be positive");
        params_ = scen.params;
        params_.alpha = alpha;
        lo_ = scen.user_density.lo;
        hi_ = scen.user_density.hi;
        share2_ = 0.5 * (1.0 - alpha);
    }

    double alpha() const { return alpha_; }
    double protected_share() const { return share2_; }
    double d_min() const { return lo_ * (1 + opt_.d_margin); }
    double d_max() const { return hi_ * (1 - opt_.d_margin); }

    // r_bar * integral of h(x) against the user density over [a, b].
    template <class H>
    double band_integral(double a, double b, H&& h) const {
        if (!(b > a)) return 0.0;
        const auto& pdf = scen_.user_density.pdf;
        return scen_.mean_rate_nats_hz *
               quad::integrate_legendre([&](double x) { return h(x) * pdf(x); }, a, b, opt_.quad_n);
    }

    // Level filling the reused-band budget over [lo, d] at neighbor power q.
    double beta1_of(double d, double q_neighbor, double warm = 1.0) const {
        return solve_budget([&](double x) { return g1(x, q_neighbor, params_); }, lo_, d, alpha_, warm);
    }

    // Level filling the protected budget over [d, hi].
    double beta2_of(double d, double warm = 1.0) const {
        return solve_budget([&](double x) { return g2(x, params_); }, d, hi_, share2_, warm);
    }

    double q1_of(double d, double beta1t, double q_neighbor) const {
        return band_integral(lo_, d, [&](double x) { return script_f(x, beta1t, q_neighbor, 0.0, params_, kc_); });
    }

    double q2_of(double d, double beta2) const {
        return band_integral(d, hi_, [&](double x) { return script_f(x, beta2, 0.0, 0.0, params_, kc_); });
    }

    double xi_of(double d, double beta1t, double beta2, double q_neighbor) const {
        const double ga = g1(d, q_neighbor, params_);
        const double gb = g2(d, params_);
        return ga * kern::cap_f(ga * beta1t, kc_) / (gb * kern::cap_f(gb * beta2, kc_)) - 1.0;
    }

    struct PointState {
        double d = 0, beta1t = 0, beta2 = 0, q1 = 0, xi = 0;
    };

    PointState eval_point(double d, double q_neighbor, double warm1, double warm2) const {
        PointState s;
        s.d = d;
        s.beta1t = beta1_of(d, q_neighbor, warm1);
        s.beta2 = beta2_of(d, warm2);
        s.q1 = q1_of(d, s.beta1t, q_neighbor);
        s.xi = xi_of(d, s.beta1t, s.beta2, q_neighbor);
        return s;
    }

    // The relaxed per-cell solve: pick the pivot distance whose reused-band
    // power meets the cap with a nonnegative multiplier, or the interior
    // optimum (xi = 0) when the cap does not bind.
    std::optional<RelaxedCellSolution> solve_relaxed(double q1_cap, double q1_neighbor) const {
        if (!(q1_cap >= 0) || !(q1_neighbor >= 0)) throw std::domain_error("solve_relaxed_cell: powers must be >= 0");
        if (alpha_ == 0.0) {
            RelaxedCellSolution sol;
            sol.d_m = lo_;
            sol.beta2 = beta2_of(lo_);
            sol.equality = q1_cap <= 1e-15;
            return sol;
        }
        if (share2_ == 0.0) {  // alpha = 1: every user is reused, d pinned at D
            RelaxedCellSolution sol;
            sol.d_m = hi_;
            sol.beta1_tilde = beta1_of(d_max(), q1_neighbor);
            sol.q1_achieved = q1_of(d_max(), sol.beta1_tilde, q1_neighbor);
            sol.equality = std::fabs(sol.q1_achieved - q1_cap) <= 1e-9 * (1.0 + q1_cap);
            if (sol.q1_achieved > q1_cap * (1 + 1e-12) && !sol.equality) return std::nullopt;
            return sol;
        }

        // Presample q1(d) over the search range: bracket for the cap equality
        // and a numerical guard on its monotonicity.
        const int n = opt_.presample_n;
        std::vector<PointState> pre(n);
        double warm1 = 1.0, warm2 = 1.0;
        for (int i = 0; i < n; ++i) {
            const double d = d_min() + (d_max() - d_min()) * i / (n - 1.0);
            pre[i] = eval_point(d, q1_neighbor, warm1, warm2);
            warm1 = pre[i].beta1t;
            warm2 = pre[i].beta2;
        }

        auto finish = [&](const PointState& s, bool equality) {
            RelaxedCellSolution sol;
            sol.d_m = s.d;
            sol.beta1_tilde = s.beta1t;
            sol.beta2 = s.beta2;
            sol.xi = std::max(0.0, s.xi);
            sol.q1_achieved = s.q1;
            sol.equality = equality;
            return sol;
        };

        PointState eq;
        bool have_eq = false;
        if (q1_cap <= pre[n - 1].q1) {
            int bi = 0;
            while (bi < n - 1 && !(pre[bi].q1 <= q1_cap && q1_cap <= pre[bi + 1].q1)) ++bi;
            if (bi == n - 1) bi = 0;  // q1_cap below the first presample
            double w1 = pre[bi].beta1t, w2 = pre[bi].beta2;
            PointState last;
            auto g = [&](double d) {
                last = eval_point(d, q1_neighbor, w1, w2);
                w1 = last.beta1t;
                w2 = last.beta2;
                return last.q1 - q1_cap;
            };
            roots::Options ro;
            ro.y_tol = 1e-12 * (1.0 + q1_cap);
            const double lo_d = bi == 0 ? d_min() : pre[bi].d;
            const double lo_val = (bi == 0 ? 0.0 : pre[bi].q1) - q1_cap;
            roots::Bracket br{lo_d, pre[bi + 1].d, std::min(lo_val, 0.0), pre[bi + 1].q1 - q1_cap};
            const double d_eq = roots::illinois(g, br, ro);
            eq = last.d == d_eq ? last : eval_point(d_eq, q1_neighbor, w1, w2);
            have_eq = true;
            if (eq.xi >= -1e-9) return finish(eq, true);
        }
        // Cap unreachable or binding multiplier negative: interior optimum
        // where xi crosses zero, else the all-protected corner.
        const double d_hi = have_eq ? eq.d : d_max();
        double xi_lo = pre[0].xi;
        if (xi_lo <= 0) {
            RelaxedCellSolution sol;  // even the nearest users are better off protected
            sol.d_m = lo_;
            sol.beta2 = beta2_of(lo_);
            sol.equality = q1_cap <= 1e-15;
            return sol;
        }
        double w1 = pre[0].beta1t, w2 = pre[0].beta2;
        PointState last;
        auto gxi = [&](double d) {
            last = eval_point(d, q1_neighbor, w1, w2);
            w1 = last.beta1t;
            w2 = last.beta2;
            return last.xi;
        };
        const double xi_hi = have_eq ? eq.xi : pre[n - 1].xi;
        if (xi_hi > 0) {
            // xi positive across the whole range: the boundary solution d -> D.
            return finish(have_eq ? eq : pre[n - 1], false);
        }
        roots::Options ro;
        ro.y_tol = 1e-10;
        roots::Bracket br{pre[0].d, d_hi, xi_lo, xi_hi};
        const double d0 = roots::illinois(gxi, br, ro);
        const PointState s0 = last.d == d0 ? last : eval_point(d0, q1_neighbor, w1, w2);
        return finish(s0, std::fabs(s0.q1 - q1_cap) <= 1e-9 * (1.0 + q1_cap));
    }

    // Naive power scale: everything protected, reused band idle.
    double naive_power() const {
        const double b2 = beta2_of(lo_);
        return 2.0 * q2_of(lo_, b2);
    }

    const SystemParams& params() const { return params_; }

  private:
    template <class G>
    double solve_budget(G&& gain, double a, double b, double share, double warm) const {
        if (!(b > a)) throw std::invalid_argument("asymptotic solve: empty band interval");
        const int n = opt_.quad_n;
        const auto& rule = quad::gauss_legendre(n);
        const auto& pdf = scen_.user_density.pdf;
        const double c = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        std::vector<double> gx(n), px(n);
        for (int i = 0; i < n; ++i) {
            const double x = c + half * rule.node[i];
            gx[i] = gain(x);
            px[i] = pdf(x) * rule.weight[i] * half * scen_.mean_rate_nats_hz;
        }
        auto residual = [&](double beta) {
            double s = 0;
            for (int i = 0; i < n; ++i) s += px[i] / kern::cap(gx[i] * beta, kc_);
            return s - share;
        };
        auto br = roots::bracket_monotone_positive(residual, warm, kc_.max_bracket_expansions);
        if (!br) throw std::runtime_error("asymptotic solve: budget bracket expansion failed");
        roots::Options opt;
        opt.y_tol = 1e-13 * share;
        opt.pure_bisection = kc_.pure_bisection;
        return roots::newton_bisect(
            [&](double beta) {
                double s = 0, ds = 0;
                for (int i = 0; i < n; ++i) {
                    const auto e = kern::eval_at(gx[i] * beta, kc_);
                    s += px[i] / e.cap;
                    ds -= px[i] * e.dcap_dy * gx[i] / (e.cap * e.cap);
                }
                return std::pair<double, double>(s - share, ds);
            },
            *br, opt);
    }

    AsymptoticScenario scen_;
    double alpha_;
    AsymSolveOptions opt_;
    kern::KernelConfig kc_;
    SystemParams params_;
    double lo_ = 0, hi_ = 0, share2_ = 0;
};

}  // namespace detail

inline std::optional<RelaxedCellSolution> solve_relaxed_cell(double q1_cap_w, double q1_neighbor_w,
                                                             const AsymptoticScenario& scen, double alpha,
                                                             const AsymSolveOptions& opt = {},
                                                             const kern::KernelConfig& kc = {}) {
    return detail::AsymptoticSolver(scen, alpha, opt, kc).solve_relaxed(q1_cap_w, q1_neighbor_w);
}

struct AsymptoticCell {
    double d_m = 0;
    double beta1_tilde = 0;
    std::optional<double> beta2;
    double xi = 0;
    double q1 = 0, q2 = 0;

    double beta1() const { return beta1_tilde * (1.0 + xi); }
};

struct AsymptoticSolution {
    AsymptoticCell cell_a, cell_b;
    double q_t = 0;
    double alpha = 0;
};

struct AsymGridSpec {
    int diag_n = 40;          // diagonal grid resolution
    double lo_factor = 1e-3;  // grid spans [lo_factor, hi_factor] x naive power
    double hi_factor = 1e3;
    int golden_iters = 48;
    int max_expansions = 3;   // window widenings when the argmin sits on an edge
};

// Minimum-power solve for symmetric cells (the shipped experiments): the
// optimum lies on the diagonal of the power grid, so the 2D exhaustive search
// collapses to one dimension, scanned and then refined by golden section.
inline AsymptoticSolution asymptotic_search(const AsymptoticScenario& scen, double alpha,
                                            const AsymGridSpec& grid = {}, const AsymSolveOptions& opt = {},
                                            const kern::KernelConfig& kc = {}) {
    detail::AsymptoticSolver solver(scen, alpha, opt, kc);
    AsymptoticSolution out;
    out.alpha = alpha;

    auto fill = [&](const RelaxedCellSolution& s) {
        AsymptoticCell c;
        c.d_m = s.d_m;
        c.beta1_tilde = s.beta1_tilde;
        c.beta2 = s.beta2;
        c.xi = s.xi;
        c.q1 = s.q1_achieved;
        c.q2 = s.beta2 ? solver.q2_of(s.d_m, *s.beta2) : 0.0;
        return c;
    };

    if (alpha == 0.0) {
        const auto s = solver.solve_relaxed(0.0, 0.0);
        out.cell_a = out.cell_b = fill(*s);
        out.q_t = 2.0 * (out.cell_a.q1 + out.cell_a.q2);
        return out;
    }
    if (alpha == 1.0) {
        // Scalar fixed point of the full-population best response.
        double q = 0;
        bool converged = false;
        const double naive_scale = scen.mean_rate_nats_hz;  // only a divergence yardstick
        for (int it = 0; it < 500; ++it) {
            const auto s = solver.solve_relaxed(std::numeric_limits<double>::infinity(), q);
            const double next = s->q1_achieved;
            if (std::fabs(next - q) <= 1e-10 * (1.0 + next)) {
                q = next;
                converged = true;
                break;
            }
            if (!std::isfinite(next) || next > 1e12 * (1.0 + naive_scale)) break;
            q = next;
        }
        if (!converged) throw std::runtime_error("asymptotic_search: full-reuse fixed point diverged");
        const auto s = solver.solve_relaxed(q, q);
        out.cell_a = out.cell_b = fill(*s);
        out.q_t = 2.0 * out.cell_a.q1;
        return out;
    }

    const double scale = solver.naive_power();
    double lo = grid.lo_factor * scale;
    double hi = grid.hi_factor * scale;

    struct Eval {
        double q_t = std::numeric_limits<double>::infinity();
        std::optional<RelaxedCellSolution> sol;
    };
    auto eval = [&](double q_cap) {
        Eval e;
        const auto s = solver.solve_relaxed(q_cap, q_cap);
        if (s && s->equality) {
            e.sol = s;
            e.q_t = 2.0 * (s->q1_achieved + (s->beta2 ? solver.q2_of(s->d_m, *s->beta2) : 0.0));
        }
        return e;
    };

    int best = -1;
    std::vector<double> qs;
    std::vector<Eval> evals;
    for (int expansion = 0; expansion <= grid.max_expansions; ++expansion) {
        qs = detail::log_grid(lo, hi, grid.diag_n);
        evals.assign(qs.size(), Eval{});
        parallel_for(qs.size(), [&](std::size_t i) { evals[i] = eval(qs[i]); });
        best = -1;
        for (std::size_t i = 0; i < qs.size(); ++i)
            if (evals[i].sol && (best < 0 || evals[i].q_t < evals[best].q_t)) best = static_cast<int>(i);
        if (best < 0) throw std::runtime_error("asymptotic_search: every grid point was eliminated");
        if (best == 0) {
            hi = qs[1];
            lo = lo * grid.lo_factor;
        } else if (best == static_cast<int>(qs.size()) - 1) {
            lo = qs[qs.size() - 2];
            hi = hi * grid.hi_factor;
        } else {
            break;
        }
    }

    // Golden-section refinement between the argmin's neighbors.
    double a = std::log(qs[std::max(best - 1, 0)]);
    double b = std::log(qs[std::min<std::size_t>(best + 1, qs.size() - 1)]);
    auto value = [&](double lq) { return eval(std::exp(lq)).q_t; };
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double v1 = value(x1), v2 = value(x2);
    for (int i = 0; i < grid.golden_iters; ++i) {
        if (v1 <= v2) {
            b = x2;
            x2 = x1;
            v2 = v1;
            x1 = b - gr * (b - a);
            v1 = value(x1);
        } else {
            a = x1;
            x1 = x2;
            v1 = v2;
            x2 = a + gr * (b - a);
            v2 = value(x2);
        }
    }
    const double q_star = std::exp(0.5 * (a + b));
    Eval final_eval = eval(q_star);
    if (!final_eval.sol) final_eval = evals[best];
    out.cell_a = out.cell_b = fill(*final_eval.sol);
    out.q_t = final_eval.q_t;
    return out;
}

struct SweepPoint {
    double alpha = 0;
    double r_t_bps = 0;
    double d_opt_m = std::numeric_limits<double>::quiet_NaN();
    double q1 = std::numeric_limits<double>::quiet_NaN();
    double q2 = std::numeric_limits<double>::quiet_NaN();
    double q_t = std::numeric_limits<double>::quiet_NaN();
    bool feasible = false;
};

struct SweepOptions {
    AsymGridSpec grid;
    AsymSolveOptions solve;
    bool refine_alpha = true;  // golden-refine alpha around the grid argmin
    int alpha_refine_iters = 14;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    int best_index = -1;
    // Continuous refinement of the argmin (equals the grid argmin when
    // refinement is disabled or the minimum saturates a grid endpoint).
    double alpha_opt = std::numeric_limits<double>::quiet_NaN();
    double d_opt_m = std::numeric_limits<double>::quiet_NaN();
    double q1_opt = std::numeric_limits<double>::quiet_NaN();
    double q2_opt = std::numeric_limits<double>::quiet_NaN();
    double q_t_opt = std::numeric_limits<double>::quiet_NaN();
    bool feasible() const { return best_index >= 0; }
};

// Evaluates the minimum asymptotic power over a grid of reuse factors and
// returns the best one, optionally refined off-grid.
inline SweepResult reuse_factor_sweep(const AsymptoticScenario& scen, std::span<const double> alpha_grid,
                                      const SweepOptions& opt = {}, const kern::KernelConfig& kc = {}) {
    if (alpha_grid.size() < 3) throw std::invalid_argument("reuse_factor_sweep: need at least 3 alpha points");
    SweepResult out;
    out.points.assign(alpha_grid.size(), SweepPoint{});
    const double r_t = scen.sum_rate_bps();
    parallel_for(alpha_grid.size(), [&](std::size_t i) {
        SweepPoint& p = out.points[i];
        p.alpha = alpha_grid[i];
        p.r_t_bps = r_t;
        try {
            const auto sol = asymptotic_search(scen, alpha_grid[i], opt.grid, opt.solve, kc);
            p.d_opt_m = sol.cell_a.d_m;
            p.q1 = sol.cell_a.q1;
            p.q2 = sol.cell_a.q2;
            p.q_t = sol.q_t;
            p.feasible = true;
        } catch (const std::exception&) {
            p.feasible = false;
        }
    });
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        if (!out.points[i].feasible) continue;
        if (out.best_index < 0 || out.points[i].q_t < out.points[out.best_index].q_t)
            out.best_index = static_cast<int>(i);
    }
    if (out.best_index < 0) return out;

    const auto& bp = out.points[out.best_index];
    out.alpha_opt = bp.alpha;
    out.d_opt_m = bp.d_opt_m;
    out.q1_opt = bp.q1;
    out.q2_opt = bp.q2;
    out.q_t_opt = bp.q_t;

    const int bi = out.best_index;
    const bool interior = bi > 0 && bi + 1 < static_cast<int>(out.points.size()) && out.points[bi - 1].feasible &&
                          out.points[bi + 1].feasible;
    if (opt.refine_alpha && interior) {
        auto value = [&](double a) -> std::pair<double, AsymptoticSolution> {
            try {
                auto sol = asymptotic_search(scen, a, opt.grid, opt.solve, kc);
                return {sol.q_t, sol};
            } catch (const std::exception&) {
                return {std::numeric_limits<double>::infinity(), AsymptoticSolution{}};
            }
        };
        double a = alpha_grid[bi - 1], b = alpha_grid[bi + 1];
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        auto e1 = value(x1), e2 = value(x2);
        for (int i = 0; i < opt.alpha_refine_iters; ++i) {
            if (e1.first <= e2.first) {
                b = x2;
                x2 = x1;
                e2 = e1;
                x1 = b - gr * (b - a);
                e1 = value(x1);
            } else {
                a = x1;
                x1 = x2;
                e1 = e2;
                x2 = a + gr * (b - a);
                e2 = value(x2);
            }
        }
        const auto& eb = e1.first <= e2.first ? e1 : e2;
        if (std::isfinite(eb.first) && eb.first <= out.q_t_opt) {
            out.alpha_opt = eb.second.alpha;
            out.d_opt_m = eb.second.cell_a.d_m;
            out.q1_opt = eb.second.cell_a.q1;
            out.q2_opt = eb.second.cell_a.q2;
            out.q_t_opt = eb.first;
        }
    }
    return out;
}

}  // namespace ofdma
