#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ofdma/random.hpp"

namespace ofdma {

// Monomial path loss, parameterized in dB against distance in km:
//   rho_dB(x) = offset_db + 10 * exponent * log10(x_km)
struct PathLossModel {
    double exponent = 2.0;
    double offset_db = 100.04;
};

// Free-space-loss and open-area defaults at 2.4 GHz.
inline PathLossModel path_loss_s2() { return PathLossModel{2.0, 100.04}; }
inline PathLossModel path_loss_s3() { return PathLossModel{3.0, 97.52}; }

struct SystemParams {
    double bandwidth_hz = 5e6;
    double noise_psd_dbm_hz = -170.0;
    double cell_radius_m = 500.0;
    double carrier_ghz = 2.4;  // informational; the loss offsets already encode it
    double alpha = 0.5;        // reuse factor: fraction of subcarriers shared by both cells
    PathLossModel path_loss{};
    double epsilon_m = 1.0;  // minimum user distance
    // Scale on the cross-cell path gain rho(2D - x); 1 is the physical model,
    // 0 decouples the two cells entirely.
    double cross_gain_scale = 1.0;

    double noise_power_w() const { return std::pow(10.0, (noise_psd_dbm_hz - 30.0) / 10.0) * bandwidth_hz; }
    double protected_share() const { return 0.5 * (1.0 - alpha); }

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("SystemParams: alpha must lie in [0, 1]");
        if (!(bandwidth_hz > 0)) throw std::invalid_argument("SystemParams: bandwidth_hz must be positive");
        if (!(epsilon_m > 0 && epsilon_m < cell_radius_m))
            throw std::invalid_argument("SystemParams: require 0 < epsilon_m < cell_radius_m");
        if (!(path_loss.exponent >= 2.0)) throw std::invalid_argument("SystemParams: path loss exponent must be >= 2");
        if (!(cross_gain_scale >= 0.0)) throw std::invalid_argument("SystemParams: cross_gain_scale must be >= 0");
    }
};

// Linear power gain at distance x meters.
inline double rho(double x_m, const PathLossModel& model) {
    if (!(x_m > 0)) throw std::domain_error("rho: distance must be positive");
    const double db = model.offset_db + 10.0 * model.exponent * std::log10(x_m / 1000.0);
    return std::pow(10.0, -db / 10.0);
}

namespace detail {
inline void check_position(double x_m, const SystemParams& p, const char* fn) {
    if (!(x_m >= p.epsilon_m && x_m <= p.cell_radius_m))
        throw std::domain_error(std::string(fn) + ": position outside [epsilon, D]");
}
}  // namespace detail

// Gain-to-noise ratio in the protected band.
inline double g2(double x_m, const SystemParams& p) {
    detail::check_position(x_m, p, "g2");
    return rho(x_m, p.path_loss) / p.noise_power_w();
}

// Gain-to-interference-plus-noise ratio in the reused band when the adjacent
// base station spends q_bar watts there. Base stations sit 2D apart on a line,
// so the interfering path covers 2D - x.
inline double g1(double x_m, double q_bar_w, const SystemParams& p) {
    detail::check_position(x_m, p, "g1");
    if (!(q_bar_w >= 0)) throw std::domain_error("g1: interfering power must be >= 0");
    const double cross = rho(2.0 * p.cell_radius_m - x_m, p.path_loss) * p.cross_gain_scale;
    return rho(x_m, p.path_loss) / (cross * q_bar_w + p.noise_power_w());
}

struct UserRecord {
    double position_m = 0;
    double rate_nats_s = 0;  // target rate in nats/s over the full band
};

enum class CellId { A, B };

inline const char* to_string(CellId c) { return c == CellId::A ? "A" : "B"; }

// Users sorted ascending by distance to the serving base station; ties keep
// input order.
struct CellScenario {
    CellId cell_id = CellId::A;
    std::vector<UserRecord> users;

    static CellScenario make(CellId id, std::vector<UserRecord> users) {
        std::stable_sort(users.begin(), users.end(),
                         [](const UserRecord& a, const UserRecord& b) { return a.position_m < b.position_m; });
        return CellScenario{id, std::move(users)};
    }
};

// Draws k users per cell, i.i.d. uniform on [epsilon, D], all with the same
// target rate. Deterministic in the seed.
inline std::pair<CellScenario, CellScenario> generate_scenario(int k_per_cell, double rate_per_user_nats_s,
                                                               std::uint64_t seed, const SystemParams& p) {
    if (k_per_cell < 1) throw std::invalid_argument("generate_scenario: k_per_cell must be >= 1");
    auto draw_cell = [&](CellId id, std::uint64_t stream) {
        rng::SplitMix64 gen(rng::derive_seed(seed, stream));
        std::vector<UserRecord> users(k_per_cell);
        for (auto& u : users) {
            u.position_m = gen.uniform(p.epsilon_m, p.cell_radius_m);
            u.rate_nats_s = rate_per_user_nats_s;
        }
        return CellScenario::make(id, std::move(users));
    };
    return {draw_cell(CellId::A, 0), draw_cell(CellId::B, 1)};
}

// ---------------------------------------------------------------------------
// Scenario file schema:
// { "system": {...}, "cells": [ {"cell_id": "A", "users": [{"x_m":..,
//   "r_nats_s":..}, ...]}, ... ] }
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const PathLossModel& m) {
    j = nlohmann::json{{"exponent", m.exponent}, {"offset_db", m.offset_db}};
}

inline void from_json(const nlohmann::json& j, PathLossModel& m) {
    j.at("exponent").get_to(m.exponent);
    j.at("offset_db").get_to(m.offset_db);
}

inline void to_json(nlohmann::json& j, const SystemParams& p) {
    j = nlohmann::json{{"bandwidth_hz", p.bandwidth_hz},
                       {"noise_psd_dbm_hz", p.noise_psd_dbm_hz},
                       {"cell_radius_m", p.cell_radius_m},
                       {"carrier_ghz", p.carrier_ghz},
                       {"alpha", p.alpha},
                       {"path_loss", p.path_loss},
                       {"epsilon_m", p.epsilon_m}};
    if (p.cross_gain_scale != 1.0) j["cross_gain_scale"] = p.cross_gain_scale;
}

inline void from_json(const nlohmann::json& j, SystemParams& p) {
    j.at("bandwidth_hz").get_to(p.bandwidth_hz);
    j.at("noise_psd_dbm_hz").get_to(p.noise_psd_dbm_hz);
    j.at("cell_radius_m").get_to(p.cell_radius_m);
    j.at("carrier_ghz").get_to(p.carrier_ghz);
    j.at("alpha").get_to(p.alpha);
    j.at("path_loss").get_to(p.path_loss);
    j.at("epsilon_m").get_to(p.epsilon_m);
    p.cross_gain_scale = j.value("cross_gain_scale", 1.0);
}

inline void to_json(nlohmann::json& j, const CellScenario& c) {
    nlohmann::json users = nlohmann::json::array();
    for (const auto& u : c.users) users.push_back({{"x_m", u.position_m}, {"r_nats_s", u.rate_nats_s}});
    j = nlohmann::json{{"cell_id", to_string(c.cell_id)}, {"users", std::move(users)}};
}

inline void from_json(const nlohmann::json& j, CellScenario& c) {
    const std::string id = j.at("cell_id").get<std::string>();
    if (id != "A" && id != "B") throw std::invalid_argument("cell_id must be \"A\" or \"B\"");
    std::vector<UserRecord> users;
    for (const auto& ju : j.at("users")) {
        UserRecord u;
        ju.at("x_m").get_to(u.position_m);
        ju.at("r_nats_s").get_to(u.rate_nats_s);
        users.push_back(u);
    }
    c = CellScenario::make(id == "A" ? CellId::A : CellId::B, std::move(users));
}

struct ScenarioFile {
    SystemParams system;
    CellScenario cell_a;
    CellScenario cell_b;
};

inline void to_json(nlohmann::json& j, const ScenarioFile& s) {
    j = nlohmann::json{{"system", s.system}, {"cells", {s.cell_a, s.cell_b}}};
}

inline void from_json(const nlohmann::json& j, ScenarioFile& s) {
    j.at("system").get_to(s.system);
    const auto& cells = j.at("cells");
    if (cells.size() != 2) throw std::invalid_argument("scenario file must list exactly two cells");
    cells.at(0).get_to(s.cell_a);
    cells.at(1).get_to(s.cell_b);
    if (s.cell_a.cell_id == s.cell_b.cell_id) throw std::invalid_argument("scenario cells must be A and B");
    if (s.cell_a.cell_id == CellId::B) std::swap(s.cell_a, s.cell_b);
}

inline ScenarioFile load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path.string());
    nlohmann::json j;
    in >> j;
    ScenarioFile s = j.get<ScenarioFile>();
    s.system.validate();
    return s;
}

inline void save_scenario(const ScenarioFile& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scenario file: " + path.string());
    out << nlohmann::json(s).dump(2) << '\n';
}

}  // namespace ofdma
