#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace ofdma::quad {

struct Rule {
    std::vector<double> node;
    std::vector<double> weight;
};

namespace detail {

// Gauss-Laguerre nodes/weights for weight e^{-z} on (0, inf).
// Newton iteration on the Laguerre recurrence; standard initial guesses.
inline Rule make_gauss_laguerre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_laguerre: order must be >= 1");
    Rule r;
    r.node.resize(n);
    r.weight.resize(n);
    double z = 0;
    for (int i = 0; i < n; ++i) {
        if (i == 0) {
            z = 3.0 / (1.0 + 2.4 * n);
        } else if (i == 1) {
            z += 15.0 / (1.0 + 2.5 * n);
        } else {
            const double ai = i - 1;
            z += ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - r.node[i - 2]);
        }
        double pp = 0;
        double p2 = 0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0;
            p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0 - z) * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (p1 - p2) / z;
            const double dz = p1 / pp;
            z -= dz;
            if (std::fabs(dz) <= 1e-15 * (1.0 + z)) {
                // One recompute so that pp, p2 match the converged node.
                double q1 = 1.0;
                p2 = 0.0;
                for (int j = 1; j <= n; ++j) {
                    const double q3 = p2;
                    p2 = q1;
                    q1 = ((2.0 * j - 1.0 - z) * p2 - (j - 1.0) * q3) / j;
                }
                pp = n * (q1 - p2) / z;
                break;
            }
        }
        r.node[i] = z;
        r.weight[i] = -1.0 / (pp * n * p2);
    }
    return r;
}

// Gauss-Legendre nodes/weights on (-1, 1).
inline Rule make_gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    Rule r;
    r.node.resize(n);
    r.weight.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0;
            double p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::fabs(dz) <= 1e-15) break;
        }
        r.node[i] = -z;
        r.node[n - 1 - i] = z;
        r.weight[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        r.weight[n - 1 - i] = r.weight[i];
    }
    return r;
}

template <Rule (*Maker)(int)>
const Rule& cached_rule(int n) {
    static std::mutex mu;
    static std::map<int, Rule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, Maker(n)).first;
    return it->second;
}

}  // namespace detail

inline const Rule& gauss_laguerre(int n) { return detail::cached_rule<detail::make_gauss_laguerre>(n); }
inline const Rule& gauss_legendre(int n) { return detail::cached_rule<detail::make_gauss_legendre>(n); }

// ∫_0^∞ e^{-z} h(z) dz
template <class F>
double integrate_laguerre(F&& h, int n) {
    const Rule& r = gauss_laguerre(n);
    double sum = 0;
    for (int i = 0; i < n; ++i) sum += r.weight[i] * h(r.node[i]);
    return sum;
}

// ∫_a^b h(x) dx
template <class F>
double integrate_legendre(F&& h, double a, double b, int n) {
    const Rule& r = gauss_legendre(n);
    const double c = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0;
    for (int i = 0; i < n; ++i) sum += r.weight[i] * h(c + half * r.node[i]);
    return sum * half;
}

namespace detail {
template <class F>
double simpson_rec(F&& h, double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = h(lm);
    const double frm = h(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_rec(h, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(h, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double adaptive_simpson(F&& h, double a, double b, double abs_tol, int max_depth = 48) {
    const double fa = h(a);
    const double fb = h(b);
    const double m = 0.5 * (a + b);
    const double fm = h(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(h, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

}  // namespace ofdma::quad
