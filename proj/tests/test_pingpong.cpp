#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ofdma/pingpong.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ofdma;
using Catch::Approx;

namespace {
std::vector<UserRecord> mirror(const std::vector<UserRecord>& u) { return u; }
}

TEST_CASE("cell response without interference equals the protected-band solve at share alpha") {
    auto p = testutil::params(0.4);
    const std::vector<UserRecord> users{{80.0, 2e5}, {210.0, 1e5}, {390.0, 3e5}};
    const auto resp = cell_response(users, 0.0, p);
    const auto band = protected_band_users(users, p);
    const double beta_ref = solve_beta2(band, p.alpha);
    REQUIRE(resp.beta1.has_value());
    CHECK(*resp.beta1 == Approx(beta_ref).epsilon(1e-10));
    const auto prot = allocate_protected(band, p.alpha);
    CHECK(resp.q1 == Approx(prot.q2).epsilon(1e-10));
}

TEST_CASE("cell response decouples when the cross gain is zero") {
    auto p = testutil::params(0.5);
    p.cross_gain_scale = 0.0;
    const std::vector<UserRecord> users{{60.0, 2e5}, {300.0, 2e5}};
    const auto r0 = cell_response(users, 0.0, p);
    const auto r1 = cell_response(users, 5.0e-3, p);
    CHECK(r0.q1 == Approx(r1.q1).epsilon(1e-14));
    CHECK(*r0.beta1 == Approx(*r1.beta1).epsilon(1e-14));
}

TEST_CASE("cell response matches an independent re-derivation of the band equations") {
    auto p = testutil::params_radius(1000.0, 0.45);
    const std::vector<UserRecord> users{{1000.0, 4e5}};
    for (double q_neighbor : {0.0, 1e-5, 5e-4}) {
        const auto resp = cell_response(users, q_neighbor, p);
        CHECK(resp.q1 == Approx(oracle::cell_q1_ref(users, q_neighbor, p)).epsilon(1e-6));
    }
    auto p2 = testutil::params(0.5);
    const std::vector<UserRecord> many{{40.0, 1e5}, {150.0, 2e5}, {260.0, 5e4}, {420.0, 2e5}};
    for (double q_neighbor : {0.0, 2e-4}) {
        const auto resp = cell_response(many, q_neighbor, p2);
        CHECK(resp.q1 == Approx(oracle::cell_q1_ref(many, q_neighbor, p2)).epsilon(1e-6));
    }
}

TEST_CASE("empty interfering set yields zero power") {
    auto p = testutil::params(0.3);
    const auto resp = cell_response({}, 1e-4, p);
    CHECK_FALSE(resp.beta1.has_value());
    CHECK(resp.q1 == 0.0);
}

TEST_CASE("symmetric scenarios converge to a symmetric fixed point") {
    auto p = testutil::params(0.5);
    const std::vector<UserRecord> users{{70.0, 2e5}, {180.0, 2e5}, {330.0, 2e5}};
    const auto r = run_pingpong(users, mirror(users), p);
    REQUIRE(r.converged);
    CHECK(r.cell_a.q1 == Approx(r.cell_b.q1).epsilon(1e-6));
}

TEST_CASE("distinct initializations reach the same fixed point") {
    auto p = testutil::params(0.5);
    const std::vector<UserRecord> a{{90.0, 2e5}, {200.0, 1e5}, {410.0, 5e4}};
    const std::vector<UserRecord> b{{60.0, 1e5}, {250.0, 2e5}, {350.0, 1e5}};
    const auto r1 = run_pingpong(a, b, p);
    PingPongOptions warm;
    warm.init_q1_b = 10.0 * (r1.cell_a.q1 + r1.cell_b.q1);
    const auto r2 = run_pingpong(a, b, p, warm);
    REQUIRE(r1.converged);
    REQUIRE(r2.converged);
    CHECK(r1.cell_a.q1 == Approx(r2.cell_a.q1).epsilon(1e-6));
    CHECK(r1.cell_b.q1 == Approx(r2.cell_b.q1).epsilon(1e-6));
}

TEST_CASE("iterates from zero are nondecreasing and satisfy the fixed-point residual") {
    auto p = testutil::params(0.45);
    const auto [ca, cb] = generate_scenario(25, 2e5, 7, p);
    const auto r = run_pingpong(ca.users, cb.users, p);
    REQUIRE(r.converged);
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
        CHECK(r.trace[i].first >= r.trace[i - 1].first * (1 - 1e-9));
        CHECK(r.trace[i].second >= r.trace[i - 1].second * (1 - 1e-9));
    }
    // Residual of the best-response map at the reported point.
    const double ia = cell_response(ca.users, r.cell_b.q1, p).q1;
    const double ib = cell_response(cb.users, r.cell_a.q1, p).q1;
    CHECK(std::fabs(r.cell_a.q1 - ia) <= 1e-6 * (1 + r.cell_a.q1));
    CHECK(std::fabs(r.cell_b.q1 - ib) <= 1e-6 * (1 + r.cell_b.q1));
}

TEST_CASE("converged allocations satisfy rates with equality and fill the band") {
    auto p = testutil::params(0.4);
    const auto [ca, cb] = generate_scenario(12, 3e5, 21, p);
    const auto r = run_pingpong(ca.users, cb.users, p);
    REQUIRE(r.converged);
    double sum_gamma = 0;
    for (std::size_t k = 0; k < ca.users.size(); ++k) {
        const auto& a = r.cell_a.per_user[k];
        sum_gamma += a.gamma1;
        const double g = g1(ca.users[k].position_m, r.cell_b.q1, p);
        const double delivered = a.gamma1 * kern::e_log(g * a.p1);
        CHECK(delivered == Approx(ca.users[k].rate_nats_s / p.bandwidth_hz).epsilon(1e-8));
    }
    CHECK(std::fabs(sum_gamma - p.alpha) <= 1e-9);
}

TEST_CASE("overloaded scenarios are reported divergent, not crashed") {
    auto p = testutil::params(0.08);
    // Crushing rate targets in a sliver of reused band with strong coupling.
    std::vector<UserRecord> a, b;
    for (int i = 0; i < 8; ++i) {
        a.push_back({480.0 + i, 4e6});
        b.push_back({480.0 + i, 4e6});
    }
    PingPongOptions opt;
    opt.max_iters = 400;
    const auto r = run_pingpong(a, b, p, opt);
    CHECK_FALSE(r.converged);
}

TEST_CASE("the best-response map is a standard interference function on a grid") {
    auto p = testutil::params(0.5);
    const auto [ca, cb] = generate_scenario(10, 2e5, 3, p);
    std::vector<std::pair<double, double>> grid;
    for (double qa : {0.0, 1e-5, 1e-4, 1e-3}) {
        for (double qb : {0.0, 1e-5, 1e-4, 1e-3}) grid.emplace_back(qa, qb);
    }
    const std::vector<double> ts{1.5, 2.0, 4.0};
    const auto rep = check_interference_function_properties(grid, ts, ca.users, cb.users, p);
    CHECK(rep.positivity);
    CHECK(rep.monotonicity);
    CHECK(rep.scalability);
    CHECK(rep.counterexamples.empty());
    CHECK_THROWS_AS(check_interference_function_properties(grid, std::vector<double>{0.5}, ca.users, cb.users, p),
                    std::invalid_argument);
}
