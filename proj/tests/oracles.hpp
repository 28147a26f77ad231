#pragma once

// Independent reference implementations used only by tests. The kernel
// references integrate with a double-exponential rule (nothing shared with the
// Gauss-Laguerre / expint paths in the library); the system oracles re-solve
// the allocation equations by plain grid scans and bisection, sharing only the
// scalar kernels that the kernel oracles themselves certify.

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <optional>
#include <vector>

#include "ofdma/kernels.hpp"
#include "ofdma/optimal.hpp"
#include "ofdma/system.hpp"

namespace oracle {

inline double e_log_ref(double x) {
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate([x](double z) { return std::exp(-z) * std::log1p(x * z); }, 1e-12);
}

inline double e_ratio_ref(double x) {
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate([x](double z) { return std::exp(-z) * z / (1.0 + x * z); }, 1e-12);
}

inline double f_ref(double x) { return x == 0 ? 0.0 : e_log_ref(x) / e_ratio_ref(x) - x; }

inline double f_inv_ref(double y) {
    if (y == 0) return 0.0;
    double lo = 0, hi = 1;
    while (f_ref(hi) < y) hi *= 2;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f_ref(mid) < y ? lo : hi) = mid;
        if (hi - lo < 1e-14 * hi) break;
    }
    return 0.5 * (lo + hi);
}

inline double cap_ref(double y) { return y == 0 ? 0.0 : e_log_ref(f_inv_ref(y)); }
inline double cap_f_ref(double y) { return y == 0 ? 1.0 : e_ratio_ref(f_inv_ref(y)); }

// Budget solve by plain bisection: sum_k rate_k / cap(g_k * beta) = share.
inline double band_level_ref(const std::vector<double>& gains, const std::vector<double>& rates, double share,
                             const ofdma::kern::KernelConfig& kc = {}) {
    auto lhs = [&](double beta) {
        double s = 0;
        for (std::size_t k = 0; k < gains.size(); ++k) s += rates[k] / ofdma::kern::cap(gains[k] * beta, kc);
        return s;
    };
    double lo = 1, hi = 1;
    while (lhs(lo) < share) lo *= 0.5;
    while (lhs(hi) > share) hi *= 2;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (lhs(mid) > share ? lo : hi) = mid;
        if (hi - lo < 1e-14 * hi) break;
    }
    return 0.5 * (lo + hi);
}

// Reused-band power of one cell at a frozen neighbor power, re-derived from
// the budget and power definitions without the library's solver plumbing.
inline double cell_q1_ref(const std::vector<ofdma::UserRecord>& users, double q_neighbor,
                          const ofdma::SystemParams& p) {
    std::vector<double> gains, rates;
    for (const auto& u : users) {
        gains.push_back(ofdma::g1(u.position_m, q_neighbor, p));
        rates.push_back(u.rate_nats_s / p.bandwidth_hz);
    }
    const double beta = band_level_ref(gains, rates, p.alpha);
    double q = 0;
    for (std::size_t k = 0; k < gains.size(); ++k) {
        const double m = f_inv_ref(gains[k] * beta);
        q += rates[k] * m / (gains[k] * e_log_ref(m));
    }
    return q;
}

// --------------------------------------------------------------------------
// Dense-grid oracle for the per-cell optimal system at tiny K: scans pivot
// index, xi and the protected level on refined grids, derives the reused
// level from the pivot marginal-equality, and keeps the feasible point with
// the smallest worst residual.
// --------------------------------------------------------------------------

struct TinySolution {
    int pivot = 0;
    double beta1 = 0;  // recombined: beta1_tilde * (1 + xi)
    double beta1_tilde = 0;
    double beta2 = 0;
    double xi = 0;
    double q1 = 0;
    double score = 0;
};

inline std::optional<TinySolution> tiny_cell_system_ref(const ofdma::CellScenario& cell, double q1_target,
                                                        double q1_neighbor, const ofdma::SystemParams& p,
                                                        const ofdma::kern::KernelConfig& kc = {}) {
    using ofdma::kern::cap;
    using ofdma::kern::cap_f;
    using ofdma::kern::f_inv;
    const int K = static_cast<int>(cell.users.size());
    const double share2 = p.protected_share();
    std::vector<double> g1v, g2v, rate;
    for (const auto& u : cell.users) {
        g1v.push_back(ofdma::g1(u.position_m, q1_neighbor, p));
        g2v.push_back(ofdma::g2(u.position_m, p));
        rate.push_back(u.rate_nats_s / p.bandwidth_hz);
    }
    // Reference pivot level sequences (plain bisection).
    std::vector<double> a(K + 1, 0.0), b(K + 1, 0.0);
    for (int l = 1; l <= K; ++l) {
        a[l] = band_level_ref({g1v.begin(), g1v.begin() + l}, {rate.begin(), rate.begin() + l}, p.alpha, kc);
        if (l < K) b[l] = band_level_ref({g2v.begin() + l, g2v.end()}, {rate.begin() + l, rate.end()}, share2, kc);
    }
    b[0] = band_level_ref(g2v, rate, share2, kc);

    auto evaluate = [&](int L, double xi, double beta2) -> std::optional<TinySolution> {
        const int Li = L - 1;
        // Derive beta1_tilde from the pivot marginal equality.
        const double rhs = g2v[Li] * cap_f(g2v[Li] * beta2, kc);
        const double lhs0 = g1v[Li] / (1 + xi);
        if (!(rhs > 0) || !(lhs0 > 0)) return std::nullopt;
        double lo = 0, hi = 1;
        auto lhs = [&](double bt) { return lhs0 * cap_f(g1v[Li] * bt, kc); };
        if (lhs(0.0) < rhs) return std::nullopt;  // no crossing: marginals cannot balance
        while (lhs(hi) > rhs) {
            hi *= 2;
            if (hi > 1e12) return std::nullopt;
        }
        for (int i = 0; i < 120; ++i) {
            const double mid = 0.5 * (lo + hi);
            (lhs(mid) > rhs ? lo : hi) = mid;
        }
        const double beta1t = 0.5 * (lo + hi);
        // Shares from the budgets.
        double sum1 = 0;
        for (int k = 0; k < Li; ++k) sum1 += rate[k] / cap(g1v[k] * beta1t, kc);
        const double gl1 = p.alpha - sum1;
        double sum2 = 0;
        for (int k = L; k < K; ++k) sum2 += rate[k] / cap(g2v[k] * beta2, kc);
        const double gl2 = share2 - sum2;
        const double tol_share = 1e-9;
        if (gl1 < -tol_share || gl2 < -tol_share) return std::nullopt;
        const double r1 = std::max(0.0, gl1) * cap(g1v[Li] * beta1t, kc);
        const double r2 = std::max(0.0, gl2) * cap(g2v[Li] * beta2, kc);
        double q1 = std::max(0.0, gl1) * f_inv(g1v[Li] * beta1t, kc) / g1v[Li];
        for (int k = 0; k < Li; ++k)
            q1 += rate[k] / cap(g1v[k] * beta1t, kc) * f_inv(g1v[k] * beta1t, kc) / g1v[k];
        TinySolution s;
        s.pivot = L;
        s.beta1_tilde = beta1t;
        s.beta1 = beta1t * (1 + xi);
        s.beta2 = beta2;
        s.xi = xi;
        s.q1 = q1;
        const double rate_resid = std::fabs(r1 + r2 - rate[Li]) / rate[Li];
        const double power_resid = std::fabs(q1 - q1_target) / (1e-30 + q1_target);
        // Min-index pivot selection: a_l read as a normalized level, so the
        // 1/(1+xi) scaling sits on the prefactor only.
        for (int l = 1; l <= L; ++l) {
            const double sel_lhs = g1v[l - 1] / (1 + xi) * cap_f(g1v[l - 1] * a[l], kc);
            const double sel_rhs = g2v[l - 1] * cap_f(g2v[l - 1] * b[l], kc);
            const bool selected = sel_lhs <= sel_rhs * (1 + 1e-6);
            if (l < L && sel_lhs <= sel_rhs * (1 - 1e-6)) return std::nullopt;
            if (l == L && !selected) return std::nullopt;
        }
        s.score = std::max(rate_resid, power_resid);
        return s;
    };

    std::optional<TinySolution> best;
    for (int L = 1; L <= K; ++L) {
        // Multi-level refinement on (xi, beta2), widening the xi range when the
        // optimum presses against its upper edge.
        double xi_lo = 0, xi_hi = 15;
        const double b2_lo0 = b[L] > 0 ? b[L] : b[L - 1] * 1e-6;
        const double b2_hi0 = b[L - 1];
        if (!(b2_hi0 > 0)) continue;
        double b2_lo = b2_lo0, b2_hi = b2_hi0;
        std::optional<TinySolution> local;
        for (int level = 0; level < 6; ++level) {
            const int n_xi = 33, n_b2 = 33;
            int bi = -1, bj = -1;
            for (int i = 0; i < n_xi; ++i) {
                const double xi = xi_lo + (xi_hi - xi_lo) * i / (n_xi - 1.0);
                for (int j = 0; j < n_b2; ++j) {
                    const double b2 = b2_lo + (b2_hi - b2_lo) * j / (n_b2 - 1.0);
                    auto cand = evaluate(L, xi, b2);
                    if (cand && (!local || cand->score < local->score)) {
                        local = cand;
                        bi = i;
                        bj = j;
                    }
                }
            }
            if (bi < 0) break;
            if (level == 0 && bi >= n_xi - 2 && xi_hi < 1e4) {
                xi_hi *= 4;  // optimum at the edge: widen and restart this level
                local.reset();
                --level;
                continue;
            }
            const double dxi = (xi_hi - xi_lo) / (n_xi - 1.0);
            const double db2 = (b2_hi - b2_lo) / (n_b2 - 1.0);
            const double cx = xi_lo + dxi * bi;
            const double cb = b2_lo + db2 * bj;
            xi_lo = std::max(0.0, cx - 1.5 * dxi);
            xi_hi = cx + 1.5 * dxi;
            b2_lo = std::max(0.0, cb - 1.5 * db2);
            b2_hi = cb + 1.5 * db2;
        }
        if (local && (!best || local->score < best->score)) best = local;
    }
    if (best && best->score < 1e-3) return best;
    return std::nullopt;
}

}  // namespace oracle
