#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ofdma/optimal.hpp"
#include "ofdma/random.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ofdma;
using Catch::Approx;

namespace {

// Every delivered rate equals its target, shares are nonnegative, and the
// band budgets are exactly filled.
void check_cell_contract(const CellSystemSolution& sol, const CellScenario& scen, double q_neighbor,
                         const SystemParams& p, double rate_tol = 1e-6) {
    double sum1 = 0, sum2 = 0, q1 = 0, q2 = 0;
    for (std::size_t k = 0; k < scen.users.size(); ++k) {
        const auto& u = sol.per_user[k];
        CHECK(u.gamma1 >= 0);
        CHECK(u.gamma2 >= 0);
        sum1 += u.gamma1;
        sum2 += u.gamma2;
        q1 += u.gamma1 * u.p1;
        q2 += u.gamma2 * u.p2;
        double delivered = 0;
        if (u.gamma1 > 0) delivered += u.gamma1 * kern::e_log(g1(scen.users[k].position_m, q_neighbor, p) * u.p1);
        if (u.gamma2 > 0) delivered += u.gamma2 * kern::e_log(g2(scen.users[k].position_m, p) * u.p2);
        CHECK(delivered == Approx(scen.users[k].rate_nats_s / p.bandwidth_hz).epsilon(rate_tol));
    }
    if (sol.beta1_tilde > 0) CHECK(std::fabs(sum1 - p.alpha) <= 1e-9);
    if (sol.beta2) CHECK(std::fabs(sum2 - p.protected_share()) <= 1e-9);
    CHECK(q1 == Approx(sol.q1).margin(1e-15 + 1e-9 * sol.q1));
    CHECK(q2 == Approx(sol.q2).margin(1e-15 + 1e-9 * sol.q2));
}

int users_in_both_bands(const CellSystemSolution& sol) {
    int n = 0;
    for (const auto& u : sol.per_user)
        if (u.gamma1 > 0 && u.gamma2 > 0) ++n;
    return n;
}

}  // namespace

TEST_CASE("pivot level sequences obey their boundary conventions and the reference solve") {
    auto p = testutil::params(0.4);
    const auto [ca, cb] = generate_scenario(4, 2e5, 11, p);
    const auto seq = pivot_sequences(ca, 1e-4, p);
    REQUIRE(seq.a.size() == 5);
    REQUIRE(seq.b.size() == 5);
    CHECK(seq.a[0] == 0.0);
    CHECK(seq.b[4] == 0.0);
    std::vector<double> g1v, g2v, rates;
    for (const auto& u : ca.users) {
        g1v.push_back(g1(u.position_m, 1e-4, p));
        g2v.push_back(g2(u.position_m, p));
        rates.push_back(u.rate_nats_s / p.bandwidth_hz);
    }
    for (int l = 1; l <= 4; ++l) {
        const double a_ref = oracle::band_level_ref({g1v.begin(), g1v.begin() + l}, {rates.begin(), rates.begin() + l},
                                                    p.alpha);
        CHECK(seq.a[l] == Approx(a_ref).epsilon(1e-8));
        if (l < 4) {
            const double b_ref = oracle::band_level_ref({g2v.begin() + l, g2v.end()}, {rates.begin() + l, rates.end()},
                                                        p.protected_share());
            CHECK(seq.b[l] == Approx(b_ref).epsilon(1e-8));
        }
    }
}

TEST_CASE("with equal users, sharing the reused budget among more users raises the level") {
    auto p = testutil::params(0.5);
    const auto scen = testutil::cell(CellId::A, {{150.0, 2e5}, {150.0, 2e5}});
    const auto seq = pivot_sequences(scen, 0.0, p);
    CHECK(seq.a[2] > seq.a[1]);
    CHECK(seq.b[0] > seq.b[1]);
}

TEST_CASE("alpha = 0 degenerates to the protected single-cell solve") {
    auto p = testutil::params(0.0);
    const auto [ca, cb] = generate_scenario(6, 2e5, 5, p);
    const auto r = solve_cell_system(ca, 0.0, 0.0, p);
    REQUIRE(r.solution.has_value());
    CHECK(r.equality);
    CHECK(r.solution->pivot_index == 1);
    CHECK(r.solution->q1 == 0.0);
    const auto prot = allocate_protected(protected_band_users(ca.users, p), 0.5);
    CHECK(r.solution->q2 == Approx(prot.q2).epsilon(1e-10));
    CHECK(*r.solution->beta2 == Approx(*prot.beta2).epsilon(1e-10));
    const auto r_pos = solve_cell_system(ca, 1e-5, 0.0, p);
    CHECK_FALSE(r_pos.solution.has_value());
}

TEST_CASE("alpha = 1 pins the pivot at the last user") {
    auto p = testutil::params(1.0);
    const auto [ca, cb] = generate_scenario(5, 2e5, 9, p);
    const auto relaxed =
        solve_cell_system(ca, std::numeric_limits<double>::infinity(), 0.0, p, {}, SolveMode::relaxed);
    REQUIRE(relaxed.solution.has_value());
    CHECK(relaxed.solution->pivot_index == 5);
    CHECK_FALSE(relaxed.solution->beta2.has_value());
    const double q_pinned = relaxed.solution->q1;
    const auto eq = solve_cell_system(ca, q_pinned, 0.0, p);
    REQUIRE(eq.solution.has_value());
    CHECK(eq.equality);
    const auto wrong = solve_cell_system(ca, q_pinned * 0.5, 0.0, p);
    CHECK_FALSE(wrong.solution.has_value());
}

TEST_CASE("the cell system matches the dense-grid reference at tiny K") {
    auto p = testutil::params(0.5);
    const auto scen = testutil::cell(CellId::A, {{90.0, 4e5}, {260.0, 3e5}, {430.0, 3e5}});
    const double q_neighbor = 2e-4;
    // A reachable equality target: fraction of the relaxed optimum.
    const auto relaxed =
        solve_cell_system(scen, std::numeric_limits<double>::infinity(), q_neighbor, p, {}, SolveMode::relaxed);
    REQUIRE(relaxed.solution.has_value());
    const double target = 0.6 * relaxed.solution->q1;
    const auto got = solve_cell_system(scen, target, q_neighbor, p);
    REQUIRE(got.solution.has_value());
    const auto ref = oracle::tiny_cell_system_ref(scen, target, q_neighbor, p);
    REQUIRE(ref.has_value());
    CHECK(got.solution->pivot_index == ref->pivot);
    CHECK(got.solution->beta1_tilde == Approx(ref->beta1_tilde).epsilon(1e-3));
    CHECK(*got.solution->beta2 == Approx(ref->beta2).epsilon(1e-3));
    CHECK(got.solution->xi == Approx(ref->xi).margin(1e-3 * (1 + ref->xi)));
    CHECK(got.solution->q1 == Approx(ref->q1).epsilon(1e-3));
}

TEST_CASE("optimal allocation on a symmetric scenario lands on the diagonal") {
    auto p = testutil::params(0.5);
    const auto users = std::vector<UserRecord>{{140.0, 4e5}, {360.0, 4e5}};
    const auto ca = testutil::cell(CellId::A, users);
    const auto cb = testutil::cell(CellId::B, users);
    GridSpec spec;
    spec.n = 12;
    const auto r = optimal_allocate(ca, cb, p, spec);
    CHECK(r.cell_a.q1 == Approx(r.cell_b.q1).epsilon(1e-4));
    CHECK(r.q_total <= all_protected_benchmark(ca, cb, p) * (1 + 1e-9));
    check_cell_contract(r.cell_a, ca, r.grid_point.second, p);
    check_cell_contract(r.cell_b, cb, r.grid_point.first, p);
}

TEST_CASE("optimal allocation dominates the simplified scheme and the protected benchmark") {
    auto p = testutil::params(0.5);
    rng::SplitMix64 gen(2024);
    for (int trial = 0; trial < 4; ++trial) {
        const auto [ca, cb] = generate_scenario(8, 2.5e5, 100 + trial, p);
        GridSpec spec;
        spec.n = 10;
        std::vector<double> q_subs;
        for (double frac : {0.35, 0.6, 0.85}) {
            const double d = frac * p.cell_radius_m;
            const auto sub = simplified_allocate(ca, cb, d, d, p);
            if (sub.feasible) {
                q_subs.push_back(sub.alloc.q_total);
                spec.seed_points.push_back(sub.alloc.grid_point);
            }
        }
        const auto opt = optimal_allocate(ca, cb, p, spec);
        for (double q_sub : q_subs) CHECK(opt.q_total <= q_sub + 1e-9);
        CHECK(opt.q_total <= all_protected_benchmark(ca, cb, p) * (1 + 1e-9));
        CHECK(users_in_both_bands(opt.cell_a) <= 1);
        CHECK(users_in_both_bands(opt.cell_b) <= 1);
    }
}

TEST_CASE("optimal allocation is stable under grid refinement") {
    auto p = testutil::params(0.4);
    const auto [ca, cb] = generate_scenario(6, 2e5, 77, p);
    GridSpec coarse;
    coarse.n = 10;
    GridSpec fine;
    fine.n = 20;
    const auto r1 = optimal_allocate(ca, cb, p, coarse);
    const auto r2 = optimal_allocate(ca, cb, p, fine);
    CHECK(std::fabs(r1.q_total - r2.q_total) / r2.q_total < 0.005);
}

TEST_CASE("grid diagnostics cover every evaluated point") {
    auto p = testutil::params(0.5);
    const auto [ca, cb] = generate_scenario(3, 2e5, 13, p);
    GridSpec spec;
    spec.n = 6;
    spec.polish = false;
    const auto r = optimal_allocate(ca, cb, p, spec);
    CHECK(r.grid_diagnostics.size() >= 36);
    int feasible = 0;
    for (const auto& d : r.grid_diagnostics)
        if (d.feasible) ++feasible;
    CHECK(feasible >= 1);
}

TEST_CASE("simplified boundaries: everyone reused or everyone protected") {
    auto p = testutil::params(0.5);
    const auto [ca, cb] = generate_scenario(6, 2e5, 31, p);

    const auto all_if = simplified_allocate(ca, cb, p.cell_radius_m, p.cell_radius_m, p);
    REQUIRE(all_if.feasible);
    CHECK(all_if.alloc.cell_a.q2 == 0.0);
    CHECK(all_if.alloc.cell_a.pivot_index == 6);
    CHECK_FALSE(all_if.alloc.cell_a.beta2.has_value());

    const auto all_prot = simplified_allocate(ca, cb, p.epsilon_m, p.epsilon_m, p);
    REQUIRE(all_prot.feasible);
    CHECK(all_prot.alloc.cell_a.q1 == 0.0);
    CHECK(all_prot.alloc.cell_a.pivot_index == 0);
    // Fully protected cells do not interact: the totals equal two independent
    // single-cell solves.
    const double qa = allocate_protected(protected_band_users(ca.users, p), p.protected_share()).q2;
    const double qb = allocate_protected(protected_band_users(cb.users, p), p.protected_share()).q2;
    CHECK(all_prot.alloc.q_total == Approx(qa + qb).epsilon(1e-12));
}

TEST_CASE("simplified allocation rejects out-of-range pivots") {
    auto p = testutil::params(0.5);
    const auto [ca, cb] = generate_scenario(3, 2e5, 17, p);
    CHECK_THROWS_AS(simplified_allocate(ca, cb, 0.0, 100.0, p), std::invalid_argument);
    CHECK_THROWS_AS(simplified_allocate(ca, cb, 100.0, 2 * p.cell_radius_m, p), std::invalid_argument);
}
