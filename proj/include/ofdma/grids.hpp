#pragma once

#include <cmath>
#include <vector>

namespace ofdma::detail {

inline std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    if (n == 1) {
        g[0] = std::sqrt(lo * hi);
        return g;
    }
    const double step = std::log(hi / lo) / (n - 1);
    for (int i = 0; i < n; ++i) g[i] = lo * std::exp(step * i);
    return g;
}

inline std::vector<double> linear_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    if (n == 1) {
        g[0] = 0.5 * (lo + hi);
        return g;
    }
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1.0);
    return g;
}

}  // namespace ofdma::detail
