#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

namespace ofdma::roots {

struct Options {
    double x_tol_rel = 1e-13;  // stop when bracket width <= x_tol_rel * (1 + |x|)
    double y_tol = 0.0;        // stop when |residual| <= y_tol (0 disables)
    int max_iter = 300;
    bool pure_bisection = false;
};

struct Bracket {
    double lo = 0, hi = 0;
    double f_lo = 0, f_hi = 0;
};

namespace detail {
inline bool converged_x(double lo, double hi, const Options& opt) {
    return (hi - lo) <= opt.x_tol_rel * (1.0 + std::fabs(lo) + std::fabs(hi));
}
}  // namespace detail

// Expands a bracket geometrically on (0, inf) from x0 until g changes sign.
// g must be monotone. Returns nullopt after max_expansions.
template <class F>
std::optional<Bracket> bracket_monotone_positive(F&& g, double x0, int max_expansions) {
    if (!(x0 > 0) || !std::isfinite(x0)) x0 = 1.0;
    double f0 = g(x0);
    if (f0 == 0.0) return Bracket{x0, x0, 0.0, 0.0};
    // Probe upward to learn the direction of g.
    double x1 = x0 * 2.0;
    double f1 = g(x1);
    const bool increasing = f1 > f0;
    // Want f(lo) and f(hi) on opposite sides of zero.
    Bracket b;
    if ((increasing && f0 > 0) || (!increasing && f0 < 0)) {
        // Root is below x0: shrink lo.
        b.hi = x0;
        b.f_hi = f0;
        double lo = x0;
        double flo = f0;
        for (int i = 0; i < max_expansions; ++i) {
            lo *= 0.5;
            flo = g(lo);
            if ((flo <= 0 && f0 >= 0) || (flo >= 0 && f0 <= 0)) {
                b.lo = lo;
                b.f_lo = flo;
                return b;
            }
        }
        return std::nullopt;
    }
    // Root is above x0 (or between x0 and x1).
    b.lo = x0;
    b.f_lo = f0;
    if ((f1 <= 0 && f0 >= 0) || (f1 >= 0 && f0 <= 0)) {
        b.hi = x1;
        b.f_hi = f1;
        return b;
    }
    double hi = x1;
    double fhi = f1;
    for (int i = 0; i < max_expansions; ++i) {
        hi *= 2.0;
        fhi = g(hi);
        if ((fhi <= 0 && f0 >= 0) || (fhi >= 0 && f0 <= 0)) {
            b.lo = x0;
            b.f_lo = f0;
            b.hi = hi;
            b.f_hi = fhi;
            return b;
        }
    }
    return std::nullopt;
}

// Plain bisection for a continuous g with g(lo), g(hi) of opposite sign.
template <class F>
double bisect(F&& g, Bracket b, const Options& opt = {}) {
    if (b.f_lo == 0.0) return b.lo;
    if (b.f_hi == 0.0) return b.hi;
    if ((b.f_lo > 0) == (b.f_hi > 0)) throw std::runtime_error("bisect: bracket does not straddle a root");
    for (int i = 0; i < opt.max_iter; ++i) {
        const double mid = 0.5 * (b.lo + b.hi);
        const double fm = g(mid);
        if (opt.y_tol > 0 && std::fabs(fm) <= opt.y_tol) return mid;
        if ((fm > 0) == (b.f_hi > 0)) {
            b.hi = mid;
            b.f_hi = fm;
        } else {
            b.lo = mid;
            b.f_lo = fm;
        }
        if (detail::converged_x(b.lo, b.hi, opt)) return 0.5 * (b.lo + b.hi);
    }
    return 0.5 * (b.lo + b.hi);
}

// Bracketed Newton: g returns {value, slope}. Newton steps are taken only while
// they stay inside the current bracket; otherwise the step degrades to
// bisection, so convergence is as safe as plain bisection.
template <class FVS>
double newton_bisect(FVS&& g, Bracket b, const Options& opt = {}) {
    if (b.f_lo == 0.0) return b.lo;
    if (b.f_hi == 0.0) return b.hi;
    if ((b.f_lo > 0) == (b.f_hi > 0)) throw std::runtime_error("newton_bisect: bracket does not straddle a root");
    double x = 0.5 * (b.lo + b.hi);
    for (int i = 0; i < opt.max_iter; ++i) {
        const auto [v, s] = g(x);
        if (opt.y_tol > 0 && std::fabs(v) <= opt.y_tol) return x;
        if ((v > 0) == (b.f_hi > 0)) {
            b.hi = x;
            b.f_hi = v;
        } else {
            b.lo = x;
            b.f_lo = v;
        }
        if (detail::converged_x(b.lo, b.hi, opt)) return 0.5 * (b.lo + b.hi);
        double next = std::numeric_limits<double>::quiet_NaN();
        if (!opt.pure_bisection && s != 0.0 && std::isfinite(s)) next = x - v / s;
        if (!(next > b.lo && next < b.hi)) next = 0.5 * (b.lo + b.hi);
        x = next;
    }
    return 0.5 * (b.lo + b.hi);
}

// Regula falsi with the Illinois modification plus a bisection safeguard.
// For monotone functions whose slope is awkward to obtain.
template <class F>
double illinois(F&& g, Bracket b, const Options& opt = {}) {
    if (b.f_lo == 0.0) return b.lo;
    if (b.f_hi == 0.0) return b.hi;
    if ((b.f_lo > 0) == (b.f_hi > 0)) throw std::runtime_error("illinois: bracket does not straddle a root");
    int side = 0;
    for (int i = 0; i < opt.max_iter; ++i) {
        double x = (b.lo * b.f_hi - b.hi * b.f_lo) / (b.f_hi - b.f_lo);
        const double mid = 0.5 * (b.lo + b.hi);
        if (!(x > b.lo && x < b.hi)) x = mid;
        // Every fourth step force bisection to guarantee bracket shrinkage.
        if ((i & 3) == 3) x = mid;
        const double fx = g(x);
        if (opt.y_tol > 0 && std::fabs(fx) <= opt.y_tol) return x;
        if ((fx > 0) == (b.f_hi > 0)) {
            b.hi = x;
            b.f_hi = fx;
            if (side == 1) b.f_lo *= 0.5;
            side = 1;
        } else {
            b.lo = x;
            b.f_lo = fx;
            if (side == -1) b.f_hi *= 0.5;
            side = -1;
        }
        if (detail::converged_x(b.lo, b.hi, opt)) return 0.5 * (b.lo + b.hi);
    }
    return 0.5 * (b.lo + b.hi);
}

}  // namespace ofdma::roots
