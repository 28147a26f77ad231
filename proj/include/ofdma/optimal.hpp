#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ofdma/grids.hpp"
#include "ofdma/pingpong.hpp"
#include "ofdma/single_cell.hpp"
#include "ofdma/system.hpp"

namespace ofdma {

struct UserAllocation {
    double gamma1 = 0, gamma2 = 0;  // band-fraction shares
    double p1 = 0, p2 = 0;          // per-subcarrier powers, W
};

// One cell of the jointly optimal allocation: a pivot user splits the sorted
// population, users before it live in the reused band, users after it in the
// protected band, and the pivot may split its rate across both.
struct CellSystemSolution {
    int pivot_index = 0;          // 1-based; for hard partitions, the count of reused-band users
    double beta1_tilde = 0;       // beta1 / (1 + xi); 0 when the reused band is unused
    std::optional<double> beta2;  // protected-band level; empty when that band is unused
    double xi = 0;
    double q1 = 0, q2 = 0;
    std::vector<UserAllocation> per_user;
    bool pivot_rule_ok = true;

    double beta1() const { return beta1_tilde * (1.0 + xi); }
};

enum class CellSystemFailure {
    none,
    cap_unreachable,    // even the all-reused configuration spends less than the target
    target_below_min,   // the band cannot run below the target (alpha = 1 cases)
    xi_negative,        // equality holds only with a negative multiplier
    pivot_rule,         // the solved pivot violates the min-index selection rule
};

enum class SolveMode {
    equality,  // power in the reused band must equal the target exactly
    relaxed,   // power may fall below the target (KKT point of the capped problem)
};

struct CellSystemResult {
    std::optional<CellSystemSolution> solution;
    CellSystemFailure failure = CellSystemFailure::none;
    bool equality = false;  // q1 of the solution matches the target
};

// a_l / b_l level sequences, l = 0..K. a[l] fills the reused-band budget with
// the l nearest users; b[l] fills the protected budget with the K - l farthest.
struct PivotSequences {
    std::vector<double> a;
    std::vector<double> b;
};

namespace detail {

// Per-cell solver. Construction freezes everything that does not depend on the
// neighbor power (rates, protected-band gains and the b levels); solve() is
// then cheap enough to sit inside a 2D grid search.
class CellSolver {
  public:
    CellSolver(const CellScenario& cell, const SystemParams& params, const kern::KernelConfig& kc)
        : params_(params), kc_(kc) {
        params_.validate();
        const std::size_t n = cell.users.size();
        x_.reserve(n);
        rate_hz_.reserve(n);
        g2_.reserve(n);
        for (const auto& u : cell.users) {
            if (!(u.rate_nats_s > 0)) throw std::invalid_argument("CellSolver: rates must be positive");
            if (!x_.empty() && u.position_m < x_.back())
                throw std::invalid_argument("CellSolver: users must be sorted by distance");
            x_.push_back(u.position_m);
            rate_hz_.push_back(u.rate_nats_s / params_.bandwidth_hz);
            g2_.push_back(g2(u.position_m, params_));
        }
        share2_ = params_.protected_share();
        if (share2_ > 0) build_protected_levels();
    }

    int size() const { return static_cast<int>(x_.size()); }
    const std::vector<double>& protected_levels() const { return b_; }

    std::vector<double> reused_levels(double q1_neighbor) const {
        const auto g = reused_gains(q1_neighbor);
        std::vector<double> a(size() + 1, 0.0);
        double warm = 1.0;
        for (int l = 1; l <= size(); ++l) {
            std::vector<BandUser> prefix;
            prefix.reserve(l);
            for (int k = 0; k < l; ++k) prefix.push_back({g[k], rate_hz_[k]});
            warm = solve_band_level(prefix, params_.alpha, kc_, warm);
            a[l] = warm;
        }
        return a;
    }

    CellSystemResult solve(double q1_target, double q1_neighbor, SolveMode mode, bool enforce_pivot_rule) const {
        if (!(q1_target >= 0) || !(q1_neighbor >= 0))
            throw std::domain_error("solve_cell_system: powers must be >= 0");
        if (size() == 0) throw std::invalid_argument("solve_cell_system: empty scenario");
        CellSystemResult res;
        if (params_.alpha == 0.0) return solve_alpha_zero(q1_target, mode);
        const auto g1v = reused_gains(q1_neighbor);
        if (share2_ == 0.0) return solve_alpha_one(q1_target, g1v, mode);

        // beta_max fills the reused budget with the whole population.
        std::vector<BandUser> all;
        all.reserve(size());
        for (int k = 0; k < size(); ++k) all.push_back({g1v[k], rate_hz_[k]});
        const double beta_max = solve_band_level(all, params_.alpha, kc_);
        const double q1_max = structure_at(beta_max, g1v).q1;

        double beta_eq = -1;
        if (q1_target <= q1_max * (1 + 1e-12)) {
            beta_eq = q1_target <= 0 ? 0.0 : solve_power_level(std::min(q1_target, q1_max), g1v, beta_max);
        } else if (mode == SolveMode::equality) {
            res.failure = CellSystemFailure::cap_unreachable;
            return res;
        }

        double beta_star = beta_eq;
        if (beta_eq >= 0) {
            const double xi_eq = xi_at(beta_eq, g1v);
            if (xi_eq < -kXiTol) {
                if (mode == SolveMode::equality) {
                    res.failure = CellSystemFailure::xi_negative;
                    return res;
                }
                beta_star = find_xi_zero(0.0, beta_eq, g1v);  // interior optimum, cap slack
            }
        } else {
            // relaxed mode with an unreachable cap: the cap never binds.
            const double xi_hi = xi_at(beta_max, g1v);
            beta_star = xi_hi >= 0 ? beta_max : find_xi_zero(0.0, beta_max, g1v);
        }

        CellSystemSolution sol = assemble(beta_star, g1v);
        if (enforce_pivot_rule && sol.beta1_tilde > 0) {
            sol.pivot_rule_ok = pivot_rule_holds(sol, g1v);
            if (!sol.pivot_rule_ok && mode == SolveMode::equality) {
                res.failure = CellSystemFailure::pivot_rule;
                return res;
            }
        }
        res.equality = std::fabs(sol.q1 - q1_target) <= 1e-9 * (1.0 + q1_target);
        res.solution = std::move(sol);
        return res;
    }

  private:
    static constexpr double kXiTol = 1e-9;

    struct Structure {
        int pivot = 1;         // 1-based L
        double gamma_l1 = 0;   // pivot residual share in the reused band
        double theta = 0;      // pivot rate carried by the reused band, nats/s/Hz
        double q1 = 0;
    };

    std::vector<double> reused_gains(double q1_neighbor) const {
        std::vector<double> g(size());
        for (int k = 0; k < size(); ++k) g[k] = g1(x_[k], q1_neighbor, params_);
        return g;
    }

    void build_protected_levels() {
        const int n = size();
        b_.assign(n + 1, 0.0);
        double warm = 1.0;
        for (int l = n - 1; l >= 0; --l) {
            std::vector<BandUser> suffix;
            suffix.reserve(n - l);
            for (int k = l; k < n; ++k) suffix.push_back({g2_[k], rate_hz_[k]});
            warm = solve_band_level(suffix, share2_, kc_, warm);
            b_[l] = warm;
        }
    }

    // Walks the sorted users at level beta1t: users whose cumulative budget
    // fits under alpha are fully reused, the first overflow user is the pivot.
    Structure structure_at(double beta1t, const std::vector<double>& g1v) const {
        Structure s;
        if (beta1t <= 0) {
            s.gamma_l1 = 0;
            return s;
        }
        const double alpha = params_.alpha;
        double cum = 0;
        for (int k = 0; k < size(); ++k) {
            const auto e = kern::eval_at(g1v[k] * beta1t, kc_);
            const double share = rate_hz_[k] / e.cap;
            if (cum + share >= alpha || k + 1 == size()) {
                s.pivot = k + 1;
                s.gamma_l1 = alpha - cum;
                s.theta = std::min(s.gamma_l1 * e.cap, rate_hz_[k]);
                s.q1 += s.gamma_l1 * e.m / g1v[k];
                return s;
            }
            cum += share;
            s.q1 += share * e.m / g1v[k];
        }
        return s;  // unreachable
    }

    // Root of q1(beta1t) = target on [0, beta_max]; q1 is continuous and
    // strictly increasing in beta1t.
    double solve_power_level(double target, const std::vector<double>& g1v, double beta_max) const {
        roots::Options opt;
        opt.y_tol = 1e-12 * (1.0 + target);
        roots::Bracket br{0.0, beta_max, -target, structure_at(beta_max, g1v).q1 - target};
        if (br.f_hi < 0) return beta_max;
        return roots::illinois([&](double b) { return structure_at(b, g1v).q1 - target; }, br, opt);
    }

    // Protected level consistent with the pivot rate split: solves
    // gamma_l2(beta2) * cap(g2_L beta2) = rate_L - theta on [b_L, b_{L-1}].
    std::optional<double> protected_level_for(const Structure& s, double* gamma_l2_out) const {
        const int L = s.pivot;  // 1-based
        const double rate2 = rate_hz_[L - 1] - s.theta;
        const double lo = b_[L];
        const double hi = b_[L - 1];
        auto gamma_l2 = [&](double beta2) {
            double sum = 0;
            for (int k = L; k < size(); ++k) sum += rate_hz_[k] / kern::cap(g2_[k] * beta2, kc_);
            return share2_ - sum;
        };
        if (rate2 <= 1e-14 * rate_hz_[L - 1]) {
            *gamma_l2_out = L == size() ? share2_ : 0.0;
            return lo;
        }
        if (s.theta <= 1e-14 * rate_hz_[L - 1]) {
            *gamma_l2_out = gamma_l2(hi);
            return hi;
        }
        auto value_and_slope = [&](double beta2) {
            double sum = 0, dsum = 0;
            for (int k = L; k < size(); ++k) {
                const auto e = kern::eval_at(g2_[k] * beta2, kc_);
                sum += rate_hz_[k] / e.cap;
                dsum -= rate_hz_[k] * e.dcap_dy * g2_[k] / (e.cap * e.cap);
            }
            const double gl2 = share2_ - sum;
            const auto ep = kern::eval_at(g2_[L - 1] * beta2, kc_);
            const double val = gl2 * ep.cap - rate2;
            const double slope = -dsum * ep.cap + gl2 * ep.dcap_dy * g2_[L - 1];
            return std::pair<double, double>(val, slope);
        };
        roots::Options opt;
        opt.y_tol = 1e-13 * rate_hz_[L - 1];
        roots::Bracket br{lo, hi, -rate2, s.theta};
        const double beta2 = roots::newton_bisect(value_and_slope, br, opt);
        *gamma_l2_out = gamma_l2(beta2);
        return beta2;
    }

    double xi_at(double beta1t, const std::vector<double>& g1v) const {
        const Structure s = structure_at(beta1t, g1v);
        double gl2 = 0;
        const auto beta2 = protected_level_for(s, &gl2);
        const int L = s.pivot - 1;
        const double lhs = g1v[L] * kern::cap_f(g1v[L] * beta1t, kc_);
        const double rhs = g2_[L] * kern::cap_f(g2_[L] * *beta2, kc_);
        return lhs / rhs - 1.0;
    }

    double find_xi_zero(double lo, double hi, const std::vector<double>& g1v) const {
        // xi decreases in beta1t: a larger reused-band load cheapens the
        // protected marginal relative to the reused one.
        const double lo_eval = std::max(lo, hi * 1e-12);
        const double xi_lo = xi_at(lo_eval, g1v);
        if (xi_lo <= 0) return 0.0;  // even the first sliver of reuse is overpriced
        roots::Options opt;
        opt.y_tol = kXiTol * 0.1;
        roots::Bracket br{lo_eval, hi, xi_lo, xi_at(hi, g1v)};
        return roots::illinois([&](double b) { return xi_at(b, g1v); }, br, opt);
    }

    CellSystemResult solve_alpha_zero(double q1_target, SolveMode mode) const {
        CellSystemResult res;
        if (mode == SolveMode::equality && q1_target > 1e-15) {
            res.failure = CellSystemFailure::cap_unreachable;
            return res;
        }
        CellSystemSolution sol;
        sol.pivot_index = 1;
        sol.beta1_tilde = 0;
        sol.beta2 = b_[0];
        sol.per_user.resize(size());
        for (int k = 0; k < size(); ++k) {
            const auto e = kern::eval_at(g2_[k] * b_[0], kc_);
            sol.per_user[k].gamma2 = rate_hz_[k] / e.cap;
            sol.per_user[k].p2 = e.m / g2_[k];
            sol.q2 += sol.per_user[k].gamma2 * sol.per_user[k].p2;
        }
        res.equality = q1_target <= 1e-15;
        res.solution = std::move(sol);
        return res;
    }

    CellSystemResult solve_alpha_one(double q1_target, const std::vector<double>& g1v, SolveMode mode) const {
        CellSystemResult res;
        std::vector<BandUser> all;
        all.reserve(size());
        for (int k = 0; k < size(); ++k) all.push_back({g1v[k], rate_hz_[k]});
        const double beta = solve_band_level(all, params_.alpha, kc_);
        CellSystemSolution sol;
        sol.pivot_index = size();
        sol.beta1_tilde = beta;
        sol.per_user.resize(size());
        for (int k = 0; k < size(); ++k) {
            const auto e = kern::eval_at(g1v[k] * beta, kc_);
            sol.per_user[k].gamma1 = rate_hz_[k] / e.cap;
            sol.per_user[k].p1 = e.m / g1v[k];
            sol.q1 += sol.per_user[k].gamma1 * sol.per_user[k].p1;
        }
        res.equality = std::fabs(sol.q1 - q1_target) <= 1e-9 * (1.0 + q1_target);
        if (mode == SolveMode::equality && !res.equality) {
            res.failure = sol.q1 > q1_target ? CellSystemFailure::target_below_min : CellSystemFailure::cap_unreachable;
            return res;
        }
        if (mode == SolveMode::relaxed && sol.q1 > q1_target * (1 + 1e-12)) {
            res.failure = CellSystemFailure::target_below_min;
            return res;
        }
        res.solution = std::move(sol);
        return res;
    }

    CellSystemSolution assemble(double beta1t, const std::vector<double>& g1v) const {
        const Structure s = structure_at(beta1t, g1v);
        CellSystemSolution sol;
        sol.pivot_index = s.pivot;
        sol.beta1_tilde = beta1t;
        sol.q1 = s.q1;
        sol.per_user.resize(size());
        double gl2 = 0;
        sol.beta2 = protected_level_for(s, &gl2);
        const int L = s.pivot - 1;  // 0-based
        for (int k = 0; k < L; ++k) {
            const auto e = kern::eval_at(g1v[k] * beta1t, kc_);
            sol.per_user[k].gamma1 = rate_hz_[k] / e.cap;
            sol.per_user[k].p1 = e.m / g1v[k];
        }
        if (s.gamma_l1 > 0 && beta1t > 0) {
            const auto e = kern::eval_at(g1v[L] * beta1t, kc_);
            sol.per_user[L].gamma1 = s.gamma_l1;
            sol.per_user[L].p1 = e.m / g1v[L];
        }
        if (gl2 > 0) {
            const auto e = kern::eval_at(g2_[L] * *sol.beta2, kc_);
            sol.per_user[L].gamma2 = gl2;
            sol.per_user[L].p2 = e.m / g2_[L];
        }
        for (int k = L + 1; k < size(); ++k) {
            const auto e = kern::eval_at(g2_[k] * *sol.beta2, kc_);
            sol.per_user[k].gamma2 = rate_hz_[k] / e.cap;
            sol.per_user[k].p2 = e.m / g2_[k];
        }
        sol.q2 = 0;
        for (int k = L; k < size(); ++k) sol.q2 += sol.per_user[k].gamma2 * sol.per_user[k].p2;
        sol.xi = std::max(0.0, xi_from(sol, g1v));
        return sol;
    }

    double xi_from(const CellSystemSolution& sol, const std::vector<double>& g1v) const {
        if (!sol.beta2 || sol.beta1_tilde <= 0) return 0.0;
        const int L = sol.pivot_index - 1;
        const double lhs = g1v[L] * kern::cap_f(g1v[L] * sol.beta1_tilde, kc_);
        const double rhs = g2_[L] * kern::cap_f(g2_[L] * *sol.beta2, kc_);
        return lhs / rhs - 1.0;
    }

    // Min-index selection rule for the pivot: the solved L must be the first
    // index where the reused-band marginal at fill level a_l (prefactor scaled
    // by 1/(1+xi), argument at the unscaled product g*a_l, i.e. a_l read as a
    // normalized level like beta1_tilde) drops to the protected marginal at
    // b_l. Reading the scaling into the argument as well rejects genuine
    // optima, so the normalized-level form is the one checked here.
    bool pivot_rule_holds(const CellSystemSolution& sol, const std::vector<double>& g1v) const {
        const int L = sol.pivot_index;
        const double scale = 1.0 / (1.0 + sol.xi);
        std::vector<double> a(L + 1, 0.0);
        double warm = sol.beta1_tilde > 0 ? sol.beta1_tilde : 1.0;
        for (int l = 1; l <= L; ++l) {
            std::vector<BandUser> prefix;
            prefix.reserve(l);
            for (int k = 0; k < l; ++k) prefix.push_back({g1v[k], rate_hz_[k]});
            warm = solve_band_level(prefix, params_.alpha, kc_, warm);
            a[l] = warm;
        }
        constexpr double kSlack = 1e-6;
        for (int l = 1; l <= L; ++l) {
            const double lhs = g1v[l - 1] * scale * kern::cap_f(g1v[l - 1] * a[l], kc_);
            const double rhs = g2_[l - 1] * kern::cap_f(g2_[l - 1] * b_[l], kc_);
            const bool selected = lhs <= rhs * (1 + kSlack);
            if (l < L && lhs <= rhs * (1 - kSlack)) return false;  // an earlier index already qualifies
            if (l == L && !selected) return false;
        }
        return true;
    }

    SystemParams params_;
    kern::KernelConfig kc_;
    std::vector<double> x_, rate_hz_, g2_, b_;
    double share2_ = 0;
};

}  // namespace detail

inline PivotSequences pivot_sequences(const CellScenario& cell, double q1_neighbor, const SystemParams& params,
                                      const kern::KernelConfig& kc = {}) {
    if (!(params.alpha > 0) || !(params.alpha < 1))
        throw std::invalid_argument("pivot_sequences: both bands must be nonempty (0 < alpha < 1)");
    detail::CellSolver solver(cell, params, kc);
    PivotSequences seq;
    seq.a = solver.reused_levels(q1_neighbor);
    seq.b = solver.protected_levels();
    return seq;
}

inline CellSystemResult solve_cell_system(const CellScenario& cell, double q1_target, double q1_neighbor,
                                          const SystemParams& params, const kern::KernelConfig& kc = {},
                                          SolveMode mode = SolveMode::equality, bool enforce_pivot_rule = true) {
    detail::CellSolver solver(cell, params, kc);
    return solver.solve(q1_target, q1_neighbor, mode, enforce_pivot_rule);
}

// Total power of the configuration that never uses the reused band: each cell
// serves everyone inside its protected half of the spectrum. Upper bound for
// any optimal allocation and the power scale of the grid search.
inline double all_protected_benchmark(const CellScenario& a, const CellScenario& b, const SystemParams& params,
                                      const kern::KernelConfig& kc = {}) {
    const double share = params.protected_share();
    if (!(share > 0)) throw std::invalid_argument("all_protected_benchmark: alpha = 1 leaves no protected band");
    const auto ua = protected_band_users(a.users, params);
    const auto ub = protected_band_users(b.users, params);
    return allocate_protected(ua, share, kc).q2 + allocate_protected(ub, share, kc).q2;
}

struct GridPointDiagnostics {
    double q1_a = 0, q1_b = 0;
    bool feasible = false;
    double q_total = std::numeric_limits<double>::quiet_NaN();
};

struct JointAllocationResult {
    CellSystemSolution cell_a;
    CellSystemSolution cell_b;
    double q_total = 0;
    std::pair<double, double> grid_point{0, 0};
    std::vector<GridPointDiagnostics> grid_diagnostics;
    int pivot_rule_flags = 0;
};

enum class GridAnchor {
    best_response,  // span ends at ~3x the zero-interference best responses
    benchmark,      // span [lo_factor, hi_factor] x the all-protected power
};

struct GridSpec {
    int n = 32;  // coarse grid is n x n, log-spaced
    GridAnchor anchor = GridAnchor::best_response;
    double lo_factor = 1e-3;  // benchmark anchoring only
    double hi_factor = 1e3;
    int refine_levels = 1;
    int refine_n = 9;
    bool polish = true;  // simplex descent from the grid argmin
    int polish_max_evals = 120;
    std::vector<std::pair<double, double>> seed_points;  // extra candidates, solved in relaxed mode
    bool enforce_pivot_rule = true;
    bool keep_diagnostics = true;
};

namespace detail {

struct JointCandidate {
    double q_total = std::numeric_limits<double>::infinity();
    double qa = 0, qb = 0;
    CellSystemSolution sol_a, sol_b;
    bool valid = false;
    int rule_flags = 0;
};

inline bool better(const JointCandidate& lhs, const JointCandidate& rhs) {
    if (!lhs.valid) return false;
    if (!rhs.valid) return true;
    if (lhs.q_total != rhs.q_total) return lhs.q_total < rhs.q_total;
    if (lhs.qa != rhs.qa) return lhs.qa < rhs.qa;
    return lhs.qb < rhs.qb;
}

// Deterministic Nelder-Mead on R^2, minimizing fn (infinite values allowed).
template <class Fn>
std::array<double, 2> nelder_mead_2d(Fn&& fn, std::array<double, 2> start, double scale, int max_evals) {
    struct Vertex {
        std::array<double, 2> x;
        double v;
    };
    std::array<Vertex, 3> s;
    int evals = 0;
    auto eval = [&](std::array<double, 2> x) {
        ++evals;
        return fn(x);
    };
    s[0] = {start, eval(start)};
    s[1] = {{start[0] + scale, start[1]}, 0};
    s[1].v = eval(s[1].x);
    s[2] = {{start[0], start[1] + scale}, 0};
    s[2].v = eval(s[2].x);
    while (evals < max_evals) {
        std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.v < b.v; });
        const double spread = std::max(std::fabs(s[2].x[0] - s[0].x[0]), std::fabs(s[2].x[1] - s[0].x[1]));
        if (spread < 1e-10) break;
        const std::array<double, 2> c{0.5 * (s[0].x[0] + s[1].x[0]), 0.5 * (s[0].x[1] + s[1].x[1])};
        auto blend = [&](double t) {
            return std::array<double, 2>{c[0] + t * (c[0] - s[2].x[0]), c[1] + t * (c[1] - s[2].x[1])};
        };
        const auto xr = blend(1.0);
        const double vr = eval(xr);
        if (vr < s[0].v) {
            const auto xe = blend(2.0);
            const double ve = eval(xe);
            s[2] = ve < vr ? Vertex{xe, ve} : Vertex{xr, vr};
        } else if (vr < s[1].v) {
            s[2] = {xr, vr};
        } else {
            const auto xc = blend(vr < s[2].v ? 0.5 : -0.5);
            const double vc = eval(xc);
            if (vc < std::min(vr, s[2].v)) {
                s[2] = {xc, vc};
            } else {
                for (int i = 1; i < 3; ++i) {
                    s[i].x = {0.5 * (s[i].x[0] + s[0].x[0]), 0.5 * (s[i].x[1] + s[0].x[1])};
                    s[i].v = eval(s[i].x);
                }
            }
        }
    }
    std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.v < b.v; });
    return s[0].x;
}

}  // namespace detail

// Exhaustive search over candidate reused-band power pairs: at each grid point
// both cells' systems are solved with the cross-coupled powers, infeasible
// points are discarded, and the feasible point of minimum total power wins.
// The argmin is then refined locally and polished by a simplex descent.
inline JointAllocationResult optimal_allocate(const CellScenario& cell_a, const CellScenario& cell_b,
                                              const SystemParams& params, const GridSpec& spec = {},
                                              const kern::KernelConfig& kc = {}) {
    params.validate();
    JointAllocationResult out;

    if (params.alpha == 0.0) {
        // No reused band: the joint problem separates into two protected solves.
        const auto ra = solve_cell_system(cell_a, 0.0, 0.0, params, kc);
        const auto rb = solve_cell_system(cell_b, 0.0, 0.0, params, kc);
        out.cell_a = *ra.solution;
        out.cell_b = *rb.solution;
        out.q_total = out.cell_a.q2 + out.cell_b.q2;
        return out;
    }
    if (params.alpha == 1.0) {
        // No protected band: the unique solution is the full-population fixed
        // point of the reused-band best responses.
        PingPongOptions pp;
        const auto r = run_pingpong(cell_a.users, cell_b.users, params, pp, kc);
        if (!r.converged) throw std::runtime_error("optimal_allocate: reused-band fixed point diverged at alpha = 1");
        const double inf = std::numeric_limits<double>::infinity();
        const auto ra = solve_cell_system(cell_a, inf, r.cell_b.q1, params, kc, SolveMode::relaxed);
        const auto rb = solve_cell_system(cell_b, inf, r.cell_a.q1, params, kc, SolveMode::relaxed);
        out.cell_a = *ra.solution;
        out.cell_b = *rb.solution;
        out.q_total = out.cell_a.q1 + out.cell_b.q1;
        out.grid_point = {out.cell_a.q1, out.cell_b.q1};
        return out;
    }

    detail::CellSolver solver_a(cell_a, params, kc);
    detail::CellSolver solver_b(cell_b, params, kc);

    auto evaluate = [&](double qa, double qb, SolveMode mode) {
        detail::JointCandidate cand;
        if (!(qa >= 0) || !(qb >= 0) || !std::isfinite(qa) || !std::isfinite(qb)) return cand;
        const auto ra = solver_a.solve(qa, qb, mode, spec.enforce_pivot_rule);
        if (!ra.solution) return cand;
        const auto rb = solver_b.solve(qb, qa, mode, spec.enforce_pivot_rule);
        if (!rb.solution) return cand;
        cand.sol_a = *ra.solution;
        cand.sol_b = *rb.solution;
        cand.qa = cand.sol_a.q1;
        cand.qb = cand.sol_b.q1;
        cand.q_total = cand.sol_a.q1 + cand.sol_a.q2 + cand.sol_b.q1 + cand.sol_b.q2;
        cand.rule_flags = (cand.sol_a.pivot_rule_ok ? 0 : 1) + (cand.sol_b.pivot_rule_ok ? 0 : 1);
        cand.valid = true;
        return cand;
    };

    double axis_lo, axis_hi;
    if (spec.anchor == GridAnchor::benchmark) {
        const double benchmark = all_protected_benchmark(cell_a, cell_b, params, kc);
        axis_lo = spec.lo_factor * benchmark;
        axis_hi = spec.hi_factor * benchmark;
    } else {
        // The feasible reused-band powers end at the best-response curves, so a
        // span pinned to the zero-interference responses covers the whole
        // feasible set without wasting grid rows on unreachable powers.
        const double inf = std::numeric_limits<double>::infinity();
        const auto br_a = solver_a.solve(inf, 0.0, SolveMode::relaxed, false);
        const auto br_b = solver_b.solve(inf, 0.0, SolveMode::relaxed, false);
        const double br = std::max(br_a.solution ? br_a.solution->q1 : 0.0,
                                   br_b.solution ? br_b.solution->q1 : 0.0);
        if (!(br > 0)) throw std::runtime_error("optimal_allocate: degenerate best-response scale");
        axis_hi = 3.0 * br;
        axis_lo = 1e-4 * axis_hi;
    }
    const auto axis = detail::log_grid(axis_lo, axis_hi, spec.n);
    const double step = spec.n > 1 ? std::pow(axis_hi / axis_lo, 1.0 / (spec.n - 1)) : 4.0;

    detail::JointCandidate best;
    auto consider = [&](const detail::JointCandidate& c) {
        if (detail::better(c, best)) best = c;
        if (c.valid) out.pivot_rule_flags += c.rule_flags;
    };

    for (double qa : axis) {
        for (double qb : axis) {
            const auto c = evaluate(qa, qb, SolveMode::equality);
            if (spec.keep_diagnostics) out.grid_diagnostics.push_back({qa, qb, c.valid, c.q_total});
            consider(c);
        }
    }
    for (const auto& [sa, sb] : spec.seed_points) {
        const auto c = evaluate(sa, sb, SolveMode::relaxed);
        if (spec.keep_diagnostics) out.grid_diagnostics.push_back({sa, sb, c.valid, c.q_total});
        consider(c);
    }
    if (!best.valid) throw std::runtime_error("optimal_allocate: no feasible grid point");

    double span = step;
    for (int level = 0; level < spec.refine_levels; ++level) {
        const auto fa = detail::log_grid(best.qa / span, best.qa * span, spec.refine_n);
        const auto fb = detail::log_grid(best.qb / span, best.qb * span, spec.refine_n);
        for (double qa : fa) {
            for (double qb : fb) {
                const auto c = evaluate(qa, qb, SolveMode::equality);
                if (spec.keep_diagnostics) out.grid_diagnostics.push_back({qa, qb, c.valid, c.q_total});
                consider(c);
            }
        }
        span = std::pow(span, 2.0 / (spec.refine_n - 1));
    }

    if (spec.polish) {
        auto objective = [&](std::array<double, 2> lq) {
            const auto c = evaluate(std::exp(lq[0]), std::exp(lq[1]), SolveMode::equality);
            consider(c);
            return c.valid ? c.q_total : std::numeric_limits<double>::infinity();
        };
        detail::nelder_mead_2d(objective, {std::log(best.qa), std::log(best.qb)}, 0.05, spec.polish_max_evals);
    }

    out.cell_a = std::move(best.sol_a);
    out.cell_b = std::move(best.sol_b);
    out.q_total = best.q_total;
    out.grid_point = {best.qa, best.qb};
    return out;
}

struct SimplifiedResult {
    bool feasible = false;
    JointAllocationResult alloc;
    PingPongResult pingpong;
};

// Fixed-pivot scheme: users nearer than the pivot distance are confined to the
// reused band (solved by the distributed fixed point), the rest to the
// protected band. No user splits across bands.
inline SimplifiedResult simplified_allocate(const CellScenario& cell_a, const CellScenario& cell_b, double d_subopt_a,
                                            double d_subopt_b, const SystemParams& params,
                                            const PingPongOptions& pp_opt = {}, const kern::KernelConfig& kc = {}) {
    params.validate();
    for (double d : {d_subopt_a, d_subopt_b})
        if (!(d >= params.epsilon_m && d <= params.cell_radius_m))
            throw std::invalid_argument("simplified_allocate: pivot distance outside [epsilon, D]");
    SimplifiedResult out;

    auto split_at = [](const CellScenario& c, double d) {
        std::size_t n = 0;
        while (n < c.users.size() && c.users[n].position_m < d) ++n;
        return n;
    };
    const std::size_t na = split_at(cell_a, d_subopt_a);
    const std::size_t nb = split_at(cell_b, d_subopt_b);
    const std::span<const UserRecord> a_if(cell_a.users.data(), na);
    const std::span<const UserRecord> b_if(cell_b.users.data(), nb);

    out.pingpong = run_pingpong(a_if, b_if, params, pp_opt, kc);
    if (!out.pingpong.converged) return out;

    const double share2 = params.protected_share();
    auto fill_cell = [&](const CellScenario& cell, std::size_t n_if, const InterferenceCellSolve& pp) {
        CellSystemSolution sol;
        sol.pivot_index = static_cast<int>(n_if);
        sol.beta1_tilde = pp.beta1.value_or(0.0);
        sol.q1 = pp.q1;
        sol.per_user.resize(cell.users.size());
        for (std::size_t k = 0; k < n_if; ++k) {
            sol.per_user[k].gamma1 = pp.per_user[k].gamma1;
            sol.per_user[k].p1 = pp.per_user[k].p1;
        }
        std::vector<UserRecord> rest(cell.users.begin() + n_if, cell.users.end());
        if (!rest.empty()) {
            if (!(share2 > 0)) throw std::runtime_error("simplified_allocate: protected users but alpha = 1");
            const auto prot = allocate_protected(protected_band_users(rest, params), share2, kc);
            sol.beta2 = prot.beta2;
            sol.q2 = prot.q2;
            for (std::size_t k = 0; k < rest.size(); ++k) {
                sol.per_user[n_if + k].gamma2 = prot.per_user[k].gamma2;
                sol.per_user[n_if + k].p2 = prot.per_user[k].p2;
            }
        }
        return sol;
    };

    out.alloc.cell_a = fill_cell(cell_a, na, out.pingpong.cell_a);
    out.alloc.cell_b = fill_cell(cell_b, nb, out.pingpong.cell_b);
    out.alloc.q_total =
        out.alloc.cell_a.q1 + out.alloc.cell_a.q2 + out.alloc.cell_b.q1 + out.alloc.cell_b.q2;
    out.alloc.grid_point = {out.alloc.cell_a.q1, out.alloc.cell_b.q1};
    out.feasible = true;
    return out;
}

}  // namespace ofdma
