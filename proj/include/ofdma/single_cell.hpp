#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ofdma/kernels.hpp"
#include "ofdma/system.hpp"

namespace ofdma {

// A user reduced to what the band solvers need: its gain-to-noise ratio in the
// band and its per-Hz rate target.
struct BandUser {
    double gain = 0;     // dimensionless GNR
    double rate_hz = 0;  // nats/s/Hz
};

inline std::vector<BandUser> protected_band_users(std::span<const UserRecord> users, const SystemParams& p) {
    std::vector<BandUser> out;
    out.reserve(users.size());
    for (const auto& u : users) out.push_back({g2(u.position_m, p), u.rate_nats_s / p.bandwidth_hz});
    return out;
}

struct ProtectedUserAlloc {
    double gamma2 = 0;  // band-fraction share
    double p2 = 0;      // per-subcarrier power, W
};

struct ProtectedAllocation {
    std::optional<double> beta2;  // empty for the no-users degenerate case
    std::vector<ProtectedUserAlloc> per_user;
    double q2 = 0;  // sum gamma2 * p2
};

namespace detail {

// Solves sum_k rate_k / cap(gain_k * beta) = share for beta. The left side
// decreases continuously from +inf to 0, so a doubling bracket around beta = 1
// always straddles the root.
inline double solve_band_level(std::span<const BandUser> users, double share, const kern::KernelConfig& kc,
                               double warm_start = 1.0) {
    auto residual = [&](double beta) {
        double s = 0;
        for (const auto& u : users) s += u.rate_hz / kern::cap(u.gain * beta, kc);
        return s - share;
    };
    auto br = roots::bracket_monotone_positive(residual, warm_start, kc.max_bracket_expansions);
    if (!br) throw std::runtime_error("solve_band_level: bracket expansion failed");
    roots::Options opt;
    opt.y_tol = 1e-13 * share;
    opt.pure_bisection = kc.pure_bisection;
    return roots::newton_bisect(
        [&](double beta) {
            double s = 0;
            double ds = 0;
            for (const auto& u : users) {
                const auto e = kern::eval_at(u.gain * beta, kc);
                s += u.rate_hz / e.cap;
                ds -= u.rate_hz * e.dcap_dy * u.gain / (e.cap * e.cap);
            }
            return std::pair<double, double>(s - share, ds);
        },
        *br, opt);
}

}  // namespace detail

inline double solve_beta2(std::span<const BandUser> users, double band_share, const kern::KernelConfig& kc = {}) {
    if (users.empty()) throw std::invalid_argument("solve_beta2: user set must be nonempty");
    if (!(band_share > 0)) throw std::invalid_argument("solve_beta2: band_share must be positive");
    for (const auto& u : users)
        if (!(u.gain > 0) || !(u.rate_hz > 0)) throw std::invalid_argument("solve_beta2: gains and rates must be positive");
    return detail::solve_band_level(users, band_share, kc);
}

// Power-minimal allocation of a band of width band_share to users confined to
// it: p2 = f_inv(g*beta2)/g and gamma2 = rate/cap(g*beta2), which meets every
// rate target with equality and fills the band exactly.
inline ProtectedAllocation allocate_protected(std::span<const BandUser> users, double band_share,
                                              const kern::KernelConfig& kc = {}) {
    ProtectedAllocation out;
    if (users.empty()) return out;  // legal: the band goes unused
    if (!(band_share > 0)) throw std::invalid_argument("allocate_protected: band_share must be positive for nonempty users");
    const double beta2 = solve_beta2(users, band_share, kc);
    out.beta2 = beta2;
    out.per_user.reserve(users.size());
    for (const auto& u : users) {
        const auto e = kern::eval_at(u.gain * beta2, kc);
        ProtectedUserAlloc a;
        a.p2 = e.m / u.gain;
        a.gamma2 = u.rate_hz / e.cap;
        out.q2 += a.gamma2 * a.p2;
        out.per_user.push_back(a);
    }
    return out;
}

}  // namespace ofdma
