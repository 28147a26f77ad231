#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ofdma/single_cell.hpp"
#include "ofdma/system.hpp"

namespace ofdma {

struct InterferenceUserAlloc {
    double gamma1 = 0;
    double p1 = 0;  // W per subcarrier
};

struct InterferenceCellSolve {
    std::optional<double> beta1;  // empty when the cell has no interfering users
    double q1 = 0;                // sum gamma1 * p1
    std::vector<InterferenceUserAlloc> per_user;
};

// Best response of one cell in the reused band: with the neighbor power frozen
// at q1_neighbor, the gains g1(x, q1_neighbor) are constants, beta1 follows
// from the band budget sum gamma1 = alpha, and q1 is an evaluation. This is
// the map whose fixed point the ping-pong iteration seeks.
inline InterferenceCellSolve cell_response(std::span<const UserRecord> users_if, double q1_neighbor_w,
                                           const SystemParams& p, const kern::KernelConfig& kc = {}) {
    if (!(q1_neighbor_w >= 0)) throw std::domain_error("cell_response: neighbor power must be >= 0");
    InterferenceCellSolve out;
    if (users_if.empty()) return out;
    if (!(p.alpha > 0)) throw std::invalid_argument("cell_response: alpha must be positive when interfering users exist");
    std::vector<BandUser> band;
    band.reserve(users_if.size());
    for (const auto& u : users_if) band.push_back({g1(u.position_m, q1_neighbor_w, p), u.rate_nats_s / p.bandwidth_hz});
    const double beta1 = detail::solve_band_level(band, p.alpha, kc);
    out.beta1 = beta1;
    out.per_user.reserve(band.size());
    for (const auto& u : band) {
        const auto e = kern::eval_at(u.gain * beta1, kc);
        InterferenceUserAlloc a;
        a.p1 = e.m / u.gain;
        a.gamma1 = u.rate_hz / e.cap;
        out.q1 += a.gamma1 * a.p1;
        out.per_user.push_back(a);
    }
    return out;
}

struct PingPongOptions {
    double fp_tol = 1e-6;  // relative change of (q1_a, q1_b) at convergence
    int max_iters = 200;
    double init_q1_b = 0.0;
    // Declared divergent once an iterate exceeds ceiling_factor times the
    // zero-interference response power.
    double ceiling_factor = 1e6;
};

struct PingPongResult {
    InterferenceCellSolve cell_a;
    InterferenceCellSolve cell_b;
    int iterations = 0;
    bool converged = false;
    std::vector<std::pair<double, double>> trace;  // (q1_a, q1_b) after each sweep
};

// Alternating best responses from Q1_B = init (0 in the reference scheme).
// Converges to the unique fixed point when the interfering-user problem is
// feasible; grows without bound when it is not, which the power ceiling turns
// into converged = false.
inline PingPongResult run_pingpong(std::span<const UserRecord> a_if, std::span<const UserRecord> b_if,
                                   const SystemParams& p, const PingPongOptions& opt = {},
                                   const kern::KernelConfig& kc = {}) {
    if (opt.max_iters < 1) throw std::invalid_argument("run_pingpong: max_iters must be >= 1");
    PingPongResult r;
    if (a_if.empty() && b_if.empty()) {
        r.converged = true;
        return r;
    }
    const double scale_a = a_if.empty() ? 0.0 : cell_response(a_if, 0.0, p, kc).q1;
    const double scale_b = b_if.empty() ? 0.0 : cell_response(b_if, 0.0, p, kc).q1;
    const double ceiling = opt.ceiling_factor * (scale_a + scale_b);

    auto rel = [](double now, double before) {
        const double scale = std::max({now, before, 1e-300});
        return std::fabs(now - before) / scale;
    };
    double qa = 0;
    double qb = opt.init_q1_b;
    double prev_a = -1, prev_b = -1;
    for (int it = 1; it <= opt.max_iters; ++it) {
        // A divergent instance can push the band levels beyond anything the
        // solvers can bracket; treat that exactly like crossing the ceiling.
        try {
            r.cell_a = cell_response(a_if, qb, p, kc);
            qa = r.cell_a.q1;
            r.cell_b = cell_response(b_if, qa, p, kc);
            qb = r.cell_b.q1;
        } catch (const std::exception&) {
            r.iterations = it;
            break;
        }
        r.iterations = it;
        r.trace.emplace_back(qa, qb);
        if (qa > ceiling || qb > ceiling) break;  // diverging: no fixed point
        if (it > 1) {
            if (rel(qa, prev_a) <= opt.fp_tol && rel(qb, prev_b) <= opt.fp_tol) {
                r.converged = true;
                break;
            }
        } else if (a_if.empty() || b_if.empty()) {
            // Decoupled: one sweep suffices.
            r.converged = true;
            break;
        }
        prev_a = qa;
        prev_b = qb;
    }
    if (r.converged) {
        // Extra sweeps down to machine precision (not counted against the
        // nominal iteration budget) so the reported allocations, gains and
        // rates are mutually consistent well below fp_tol.
        for (int it = 0; it < 60; ++it) {
            prev_a = qa;
            prev_b = qb;
            r.cell_a = cell_response(a_if, qb, p, kc);
            qa = r.cell_a.q1;
            r.cell_b = cell_response(b_if, qa, p, kc);
            qb = r.cell_b.q1;
            r.trace.emplace_back(qa, qb);
            if (rel(qa, prev_a) <= 1e-14 && rel(qb, prev_b) <= 1e-14) break;
        }
        r.cell_a = cell_response(a_if, qb, p, kc);
    }
    return r;
}

struct InterferencePropertyViolation {
    std::string property;
    double qa = 0, qb = 0;
    double t = 0;  // scaling factor, when relevant
};

struct InterferencePropertyReport {
    bool positivity = true;
    bool monotonicity = true;
    bool scalability = true;
    std::vector<InterferencePropertyViolation> counterexamples;
    bool ok() const { return positivity && monotonicity && scalability; }
};

// Numerically checks that the joint best-response map is a standard
// interference function on the supplied grid: positive, componentwise
// monotone, and strictly sub-homogeneous (t*I(q) > I(t*q) for t > 1).
inline InterferencePropertyReport check_interference_function_properties(
    std::span<const std::pair<double, double>> q_grid, std::span<const double> t_values,
    std::span<const UserRecord> a_if, std::span<const UserRecord> b_if, const SystemParams& p,
    const kern::KernelConfig& kc = {}) {
    InterferencePropertyReport rep;
    auto I = [&](double qa, double qb) {
        return std::pair<double, double>(cell_response(a_if, qb, p, kc).q1, cell_response(b_if, qa, p, kc).q1);
    };
    std::vector<std::pair<double, double>> img(q_grid.size());
    for (std::size_t i = 0; i < q_grid.size(); ++i) {
        img[i] = I(q_grid[i].first, q_grid[i].second);
        if (!(img[i].first > 0) || !(img[i].second > 0)) {
            rep.positivity = false;
            rep.counterexamples.push_back({"positivity", q_grid[i].first, q_grid[i].second, 0});
        }
    }
    const double slack = 1e-9;
    for (std::size_t i = 0; i < q_grid.size(); ++i) {
        for (std::size_t j = 0; j < q_grid.size(); ++j) {
            if (q_grid[i].first >= q_grid[j].first && q_grid[i].second >= q_grid[j].second) {
                if (img[i].first < img[j].first * (1 - slack) || img[i].second < img[j].second * (1 - slack)) {
                    rep.monotonicity = false;
                    rep.counterexamples.push_back({"monotonicity", q_grid[i].first, q_grid[i].second, 0});
                }
            }
        }
        for (double t : t_values) {
            if (!(t > 1)) throw std::invalid_argument("check_interference_function_properties: t values must exceed 1");
            const auto scaled = I(t * q_grid[i].first, t * q_grid[i].second);
            if (!(t * img[i].first > scaled.first * (1 - slack)) || !(t * img[i].second > scaled.second * (1 - slack))) {
                rep.scalability = false;
                rep.counterexamples.push_back({"scalability", q_grid[i].first, q_grid[i].second, t});
            }
        }
    }
    return rep;
}

}  // namespace ofdma
