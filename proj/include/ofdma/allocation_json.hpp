#pragma once

#include "json.hpp"
#include "ofdma/optimal.hpp"

namespace ofdma {

inline nlohmann::json allocation_to_json(const CellSystemSolution& sol, const CellScenario& scen) {
    nlohmann::json users = nlohmann::json::array();
    for (std::size_t k = 0; k < sol.per_user.size(); ++k) {
        const auto& u = sol.per_user[k];
        users.push_back({{"x_m", scen.users[k].position_m},
                         {"r_nats_s", scen.users[k].rate_nats_s},
                         {"gamma1", u.gamma1},
                         {"gamma2", u.gamma2},
                         {"p1_w", u.p1},
                         {"p2_w", u.p2}});
    }
    nlohmann::json j{{"cell_id", to_string(scen.cell_id)},
                     {"pivot_index", sol.pivot_index},
                     {"beta1_tilde", sol.beta1_tilde},
                     {"beta1", sol.beta1()},
                     {"xi", sol.xi},
                     {"q1_w", sol.q1},
                     {"q2_w", sol.q2},
                     {"users", std::move(users)}};
    if (sol.beta2) j["beta2"] = *sol.beta2;
    return j;
}

inline nlohmann::json allocation_to_json(const JointAllocationResult& r, const ScenarioFile& scen,
                                         const std::string& mode) {
    return nlohmann::json{{"mode", mode},
                          {"alpha", scen.system.alpha},
                          {"q_total_w", r.q_total},
                          {"q1_a_w", r.grid_point.first},
                          {"q1_b_w", r.grid_point.second},
                          {"cells", {allocation_to_json(r.cell_a, scen.cell_a), allocation_to_json(r.cell_b, scen.cell_b)}}};
}

}  // namespace ofdma
