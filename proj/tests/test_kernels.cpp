#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <thread>
#include <vector>

#include "ofdma/kernels.hpp"
#include "oracles.hpp"

using namespace ofdma;
using Catch::Approx;

namespace {
kern::KernelConfig quad_cfg() {
    kern::KernelConfig kc;
    kc.method = kern::Method::quadrature;
    return kc;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, i / (n - 1.0));
    return g;
}
}  // namespace

TEST_CASE("e_log matches its fixed values and oracle") {
    CHECK(kern::e_log(0.0) == 0.0);
    CHECK(kern::e_log(1.0) == Approx(0.596347).margin(1e-5));
    CHECK(kern::e_log(10.0) == Approx(oracle::e_log_ref(10.0)).epsilon(1e-8));
    CHECK_THROWS_AS(kern::e_log(-1.0), std::domain_error);
    CHECK_THROWS_AS(kern::e_log(std::numeric_limits<double>::infinity()), std::domain_error);
}

TEST_CASE("e_ratio matches its fixed values and limits") {
    CHECK(kern::e_ratio(0.0) == 1.0);
    CHECK(kern::e_ratio(1.0) == Approx(0.403653).margin(1e-5));
    CHECK(kern::e_ratio(1e6) < 1e-4);
    CHECK_THROWS_AS(kern::e_ratio(-0.5), std::domain_error);
}

TEST_CASE("closed-form and quadrature methods agree with the reference integrator") {
    const auto qc = quad_cfg();
    for (double x : log_spaced(1e-3, 1e3, 13)) {
        const double ref_log = oracle::e_log_ref(x);
        const double ref_ratio = oracle::e_ratio_ref(x);
        CHECK(kern::e_log(x) == Approx(ref_log).epsilon(1e-8));
        CHECK(kern::e_ratio(x) == Approx(ref_ratio).epsilon(1e-8));
        CHECK(kern::e_log(x, qc) == Approx(ref_log).epsilon(1e-8));
        CHECK(kern::e_ratio(x, qc) == Approx(ref_ratio).epsilon(1e-8));
    }
}

TEST_CASE("f fixed values and monotonicity") {
    CHECK(kern::f(0.0) == 0.0);
    CHECK(kern::f(1.0) == Approx(0.477397).margin(1e-4));
    CHECK(kern::f(2.0) > kern::f(1.0));
    CHECK_THROWS_AS(kern::f(-1e-9), std::domain_error);
    for (double x : log_spaced(1e-4, 1e4, 25)) {
        const double delta = 1e-3 * x;
        CHECK(kern::f(x + delta) > kern::f(x));
    }
}

TEST_CASE("f_inv inverts f") {
    kern::KernelConfig kc;
    CHECK(kern::f_inv(0.0) == 0.0);
    CHECK(kern::f_inv(0.477397) == Approx(1.0).margin(1e-3));
    for (double y : {0.01, 0.1, 1.0, 5.0}) {
        CHECK(std::fabs(kern::f(kern::f_inv(y, kc), kc) - y) <= kc.root_tol);
    }
    for (double y : log_spaced(1e-3, 1e2, 20)) {
        CHECK(std::fabs(kern::f(kern::f_inv(y, kc), kc) - y) <= 10 * kc.root_tol);
    }
}

TEST_CASE("pure bisection and safeguarded Newton agree") {
    kern::KernelConfig pure;
    pure.pure_bisection = true;
    for (double y : log_spaced(1e-3, 1e2, 9)) {
        const double a = kern::f_inv(y);
        const double bb = kern::f_inv(y, pure);
        CHECK(std::fabs(kern::f(a) - kern::f(bb)) <= 2 * pure.root_tol);
    }
}

TEST_CASE("cap fixed values and growth") {
    CHECK(kern::cap(0.0) == 0.0);
    CHECK(kern::cap(0.477397) == Approx(0.596347).margin(1e-3));
    double prev = kern::cap(0.1);
    for (double y : log_spaced(0.15, 10.0, 12)) {
        const double c = kern::cap(y);
        CHECK(c > prev);
        prev = c;
    }
}

TEST_CASE("cap_f fixed values and decay") {
    CHECK(kern::cap_f(0.0) == 1.0);
    CHECK(kern::cap_f(0.477397) == Approx(0.403653).margin(1e-3));
    CHECK(kern::cap_f(5.0) < kern::cap_f(1.0));
}

TEST_CASE("definitional identities cap(f(x)) = e_log(x), cap_f(f(x)) = e_ratio(x)") {
    for (double x : log_spaced(1e-2, 1e2, 11)) {
        const double y = kern::f(x);
        CHECK(kern::cap(y) == Approx(kern::e_log(x)).epsilon(1e-6));
        CHECK(kern::cap_f(y) == Approx(kern::e_ratio(x)).epsilon(1e-6));
    }
}

TEST_CASE("eval_at bundles the scalar kernels consistently") {
    for (double y : {0.05, 0.7, 3.0}) {
        const auto e = kern::eval_at(y);
        CHECK(e.m == Approx(kern::f_inv(y)).epsilon(1e-12));
        CHECK(e.cap == Approx(kern::cap(y)).epsilon(1e-12));
        CHECK(e.cap_f == Approx(kern::cap_f(y)).epsilon(1e-12));
        // Slope check against a central difference.
        const double h = 1e-6 * y;
        const double num = (kern::cap(y + h) - kern::cap(y - h)) / (2 * h);
        CHECK(e.dcap_dy == Approx(num).epsilon(1e-4));
    }
}

TEST_CASE("kernels are safe under concurrent evaluation") {
    const auto grid = log_spaced(1e-2, 1e2, 64);
    std::vector<double> expect(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) expect[i] = kern::cap(grid[i]);
    std::vector<double> got(grid.size());
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < grid.size(); i += 4) got[i] = kern::cap(grid[i]);
        });
    for (auto& th : pool) th.join();
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(got[i] == expect[i]);
}

TEST_CASE("kernel config validation") {
    kern::KernelConfig kc;
    kc.root_tol = 0;
    CHECK_THROWS_AS(kc.validate(), std::invalid_argument);
    kc = {};
    kc.quad_rel_tol = -1;
    CHECK_THROWS_AS(kc.validate(), std::invalid_argument);
    CHECK_NOTHROW(kern::KernelConfig{}.validate());
}
