#pragma once

#include <boost/math/special_functions/expint.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ofdma/quadrature.hpp"
#include "ofdma/roots.hpp"

// Scalar kernels over the unit-mean exponential fading variable Z:
//
//   e_log(x)   = E[log(1 + x Z)]
//   e_ratio(x) = E[Z / (1 + x Z)]
//   f(x)       = e_log(x) / e_ratio(x) - x
//   cap(y)     = e_log(f_inv(y))      (spectral efficiency at level y)
//   cap_f(y)   = e_ratio(f_inv(y))    (marginal-power weight at level y)
//
// Every allocation in this library is assembled from these five functions and
// the monotone inverse f_inv.

namespace ofdma::kern {

enum class Method {
    closed_form,  // exponential-integral identities (fast path)
    quadrature,   // Gauss-Laguerre with adaptive fallback
};

struct KernelConfig {
    double quad_abs_tol = 1e-12;
    double quad_rel_tol = 1e-10;
    double root_tol = 1e-9;  // |f(f_inv(y)) - y| <= root_tol
    // Doublings allowed while hunting a sign change. Divergent interference
    // iterations legitimately visit levels hundreds of decades up, so the
    // budget is nearly the full double range.
    int max_bracket_expansions = 960;
    Method method = Method::closed_form;
    bool pure_bisection = false;  // disable Newton steps inside the f_inv bracket

    void validate() const {
        if (!(quad_abs_tol > 0) || !(quad_rel_tol > 0) || !(root_tol > 0))
            throw std::invalid_argument("KernelConfig: tolerances must be strictly positive");
        if (root_tol < 10.0 * std::numeric_limits<double>::epsilon())
            throw std::invalid_argument("KernelConfig: root_tol below 10*machine epsilon");
        if (max_bracket_expansions < 1)
            throw std::invalid_argument("KernelConfig: max_bracket_expansions must be >= 1");
    }
};

struct Moments {
    double e_log = 0;
    double e_ratio = 1;
    double e_ratio2 = 2;  // E[Z^2 / (1 + x Z)^2]
};

namespace detail {

inline void check_domain(double x, const char* fn) {
    if (!(x >= 0) || !std::isfinite(x)) throw std::domain_error(std::string(fn) + ": argument must be finite and >= 0");
}

// Truncated asymptotic series around x = 0. With 13 terms the truncation error
// is below 1e-15 relative for x <= 1e-2.
constexpr double kSeriesCut = 1e-2;

inline Moments moments_series(double x) {
    Moments m;
    // e_log = sum_{n>=1} (-1)^{n+1} (n-1)! x^n
    double term = x;
    double s = x;
    for (int n = 2; n <= 13; ++n) {
        term *= -(n - 1) * x;
        s += term;
    }
    m.e_log = s;
    // e_ratio = sum_{n>=0} (n+1)! (-x)^n
    term = 1.0;
    s = 1.0;
    for (int n = 1; n <= 13; ++n) {
        term *= -x * (n + 1);
        s += term;
    }
    m.e_ratio = s;
    // e_ratio2 = sum_{n>=0} (n+1) (n+2)! (-x)^n
    term = 2.0;
    s = 2.0;
    for (int n = 1; n <= 13; ++n) {
        term *= -x * (n + 1) * (n + 2) / n;
        s += term;
    }
    m.e_ratio2 = s;
    return m;
}

// Identities for x >= kSeriesCut (so y = 1/x <= 100 and exp(y) cannot overflow):
//   e_log(x)   = e^{1/x} E_1(1/x)
//   e_ratio(x) = (1 - psi) / x            with psi = E[1/(1+xZ)] = e_log(x)/x
//   E[1/(1+xZ)^2] = e_ratio(x)            (integration by parts)
//   e_ratio2(x)   = (1 - 2 psi + e_ratio(x)) / x^2
inline Moments moments_closed(double x) {
    if (x < kSeriesCut) return moments_series(x);
    const double y = 1.0 / x;
    Moments m;
    m.e_log = std::exp(y) * boost::math::expint(1, y);
    const double psi = m.e_log * y;
    m.e_ratio = y * (1.0 - psi);
    m.e_ratio2 = y * y * (1.0 - 2.0 * psi + m.e_ratio);
    return m;
}

inline Moments moments_quadrature(double x, const KernelConfig& cfg) {
    auto eval = [x](int n) {
        Moments m;
        m.e_log = quad::integrate_laguerre([x](double z) { return std::log1p(x * z); }, n);
        m.e_ratio = quad::integrate_laguerre([x](double z) { return z / (1.0 + x * z); }, n);
        m.e_ratio2 = quad::integrate_laguerre(
            [x](double z) {
                const double d = 1.0 + x * z;
                return z * z / (d * d);
            },
            n);
        return m;
    };
    const Moments lo = eval(64);
    const Moments hi = eval(128);
    auto ok = [&](double a, double b) {
        return std::fabs(a - b) <= std::max(cfg.quad_abs_tol, cfg.quad_rel_tol * std::fabs(b));
    };
    if (ok(lo.e_log, hi.e_log) && ok(lo.e_ratio, hi.e_ratio) && ok(lo.e_ratio2, hi.e_ratio2)) return hi;
    // Fallback for arguments where the fixed rules disagree: the integrand is
    // concentrated near 0, so integrate e^{-z} h(z) adaptively on a truncated
    // range (e^{-64} ~ 1.6e-28 makes the tail negligible at our tolerances).
    constexpr double z_max = 64.0;
    Moments m;
    m.e_log = quad::adaptive_simpson([x](double z) { return std::exp(-z) * std::log1p(x * z); }, 0.0, z_max,
                                     cfg.quad_abs_tol);
    m.e_ratio = quad::adaptive_simpson([x](double z) { return std::exp(-z) * z / (1.0 + x * z); }, 0.0, z_max,
                                       cfg.quad_abs_tol);
    m.e_ratio2 = quad::adaptive_simpson(
        [x](double z) {
            const double d = 1.0 + x * z;
            return std::exp(-z) * z * z / (d * d);
        },
        0.0, z_max, cfg.quad_abs_tol);
    return m;
}

inline Moments moments(double x, const KernelConfig& cfg) {
    if (x == 0.0) return Moments{};
    return cfg.method == Method::closed_form ? moments_closed(x) : moments_quadrature(x, cfg);
}

}  // namespace detail

inline double e_log(double x, const KernelConfig& cfg = {}) {
    detail::check_domain(x, "e_log");
    return detail::moments(x, cfg).e_log;
}

inline double e_ratio(double x, const KernelConfig& cfg = {}) {
    detail::check_domain(x, "e_ratio");
    return detail::moments(x, cfg).e_ratio;
}

inline double f(double x, const KernelConfig& cfg = {}) {
    detail::check_domain(x, "f");
    if (x == 0.0) return 0.0;
    const auto m = detail::moments(x, cfg);
    return std::max(0.0, m.e_log / m.e_ratio - x);
}

// f'(x) = e_log(x) * e_ratio2(x) / e_ratio(x)^2  (strictly positive on x > 0)
inline double f_prime(double x, const KernelConfig& cfg = {}) {
    detail::check_domain(x, "f_prime");
    if (x == 0.0) return 0.0;
    const auto m = detail::moments(x, cfg);
    return m.e_log * m.e_ratio2 / (m.e_ratio * m.e_ratio);
}

inline double f_inv(double y, const KernelConfig& cfg = {}) {
    detail::check_domain(y, "f_inv");
    if (y == 0.0) return 0.0;
    // f(x) ~ x^2 near 0 and ~ x log x for large x; sqrt(y) is a bracketing
    // seed good to roughly one doubling over the whole range of interest.
    const double x0 = std::max(std::sqrt(y), y / (1.0 + std::log1p(y)));
    auto g = [&](double x) { return f(x, cfg) - y; };
    auto br = roots::bracket_monotone_positive(g, x0, cfg.max_bracket_expansions);
    if (!br) throw std::runtime_error("f_inv: bracket expansion exceeded max_bracket_expansions");
    roots::Options opt;
    opt.y_tol = 0.25 * cfg.root_tol;
    opt.pure_bisection = cfg.pure_bisection;
    return roots::newton_bisect(
        [&](double x) { return std::pair<double, double>(f(x, cfg) - y, f_prime(x, cfg)); }, *br, opt);
}

inline double cap(double y, const KernelConfig& cfg = {}) {
    detail::check_domain(y, "cap");
    if (y == 0.0) return 0.0;
    return e_log(f_inv(y, cfg), cfg);
}

inline double cap_f(double y, const KernelConfig& cfg = {}) {
    detail::check_domain(y, "cap_f");
    if (y == 0.0) return 1.0;
    return e_ratio(f_inv(y, cfg), cfg);
}

// Bundled evaluation at a level y = g * beta. One inversion feeds the SNR
// m = f_inv(y), the rate cap(y), the weight cap_f(y) and the slopes needed by
// the Newton solvers upstream.
struct PointEval {
    double m = 0;        // f_inv(y)
    double cap = 0;      // e_log(m)
    double cap_f = 1;    // e_ratio(m)
    double dm_dy = 0;    // 1 / f'(m)
    double dcap_dy = 0;  // e_ratio(m) / f'(m)
};

inline PointEval eval_at(double y, const KernelConfig& cfg = {}) {
    detail::check_domain(y, "eval_at");
    PointEval e;
    if (y == 0.0) return e;
    e.m = f_inv(y, cfg);
    const auto mo = detail::moments(e.m, cfg);
    e.cap = mo.e_log;
    e.cap_f = mo.e_ratio;
    const double fp = mo.e_log * mo.e_ratio2 / (mo.e_ratio * mo.e_ratio);
    e.dm_dy = fp > 0 ? 1.0 / fp : 0.0;
    e.dcap_dy = mo.e_ratio * e.dm_dy;
    return e;
}

}  // namespace ofdma::kern
