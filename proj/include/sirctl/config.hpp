// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "sirctl/costs.hpp"
#include "sirctl/params.hpp"

namespace sirctl {

/// Malformed or invalid configuration; the message names the offending key.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ZonesBlock {
    std::size_t n_points = 200;
};

struct SimulateBlock {
    State x0{0.4, 0.03};
    double horizon = 5000.0;
    double step = 1e-3;
};

struct ValueBlock {
    std::size_t ns = 60;
    std::size_t ni = 60;
    std::size_t a_grid = 64;
};

struct VerifyHjBlock {
    std::size_t samples = 10000;
    std::size_t a_grid = 64;
    double tolerance = 1e-8;
};

struct CheckCostBlock {
    GridSpec grid{200, 200, 21};
    GridSpec gencond_grid{200, 200, 64};
};

struct LpSolveBlock {
    int r = 2;
    double q = 0.1;
    double T = 20.0;
    State x0{0.4, 0.03};
    std::size_t iters = 10;
    double gap = 1e-6;
    std::size_t budget = 50;
    double step = 5e-3;
    nlohmann::json cost = {{"kind", "state_product"}, {"lambda", 1.0}};  // needs a control-independent cost
};

struct ReachBlock {
    State x0{0.4, 0.03};
    std::optional<double> T;
    std::size_t n_points = 400;
};

struct ExperimentConfig {
    EpidemicParams params{};
    double population = 67e6;  // reporting only
    nlohmann::json cost = {{"kind", "multiplicative_si"}, {"lambda", 1.0}};
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    unsigned threads = 1;
    ZonesBlock zones;
    SimulateBlock simulate;
    ValueBlock value;
    VerifyHjBlock verify_hj;
    CheckCostBlock check_cost;
    LpSolveBlock lp_solve;
    ReachBlock reach;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (const char* key : keys) known = known || k == key;
        if (!known) throw ConfigError((where.empty() ? "" : where + ".") + k + ": unknown key");
    }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError((where.empty() ? "" : where + ".") + key + ": wrong type");
    }
}

inline void read_state(const nlohmann::json& j, const char* key, State& out, const std::string& where) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(where + "." + key + ": expected [s, i]");
    out = {v[0].get<double>(), v[1].get<double>()};
}

inline void read_grid(const nlohmann::json& j, const char* key, GridSpec& g, const std::string& where) {
    if (!j.contains(key)) return;
    const std::string w = where + "." + key;
    reject_unknown(j.at(key), {"ns", "ni", "na"}, w);
    read(j.at(key), "ns", g.ns, w);
    read(j.at(key), "ni", g.ni, w);
    read(j.at(key), "na", g.na, w);
    if (g.ns < 2 || g.ni < 2 || g.na < 2) throw ConfigError(w + ": every axis needs at least 2 points");
}

inline void need_positive(double v, const std::string& name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(name + ": must be positive");
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using detail::read;
    ExperimentConfig cfg;
    detail::reject_unknown(j, {"params", "population", "cost", "output_dir", "seed", "threads", "zones", "simulate",
                               "value", "verify_hj", "check_cost", "lp_solve", "reach"},
                           "");
    if (j.contains("params")) {
        const auto& p = j.at("params");
        detail::reject_unknown(p, {"beta", "gamma", "abar", "istar", "q"}, "params");
        read(p, "beta", cfg.params.beta, "params");
        read(p, "gamma", cfg.params.gamma, "params");
        read(p, "abar", cfg.params.abar, "params");
        read(p, "istar", cfg.params.istar, "params");
        read(p, "q", cfg.params.q, "params");
    }
    try {
        cfg.params.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("params.") + e.what());
    }
    read(j, "population", cfg.population, "");
    detail::need_positive(cfg.population, "population");
    if (j.contains("cost")) cfg.cost = j.at("cost");
    read(j, "output_dir", cfg.output_dir, "");
    read(j, "seed", cfg.seed, "");
    read(j, "threads", cfg.threads, "");

    if (j.contains("zones")) {
        const auto& b = j.at("zones");
        detail::reject_unknown(b, {"n_points"}, "zones");
        read(b, "n_points", cfg.zones.n_points, "zones");
        if (cfg.zones.n_points < 2) throw ConfigError("zones.n_points: must be at least 2");
    }
    if (j.contains("simulate")) {
        const auto& b = j.at("simulate");
        detail::reject_unknown(b, {"x0", "horizon", "step"}, "simulate");
        detail::read_state(b, "x0", cfg.simulate.x0, "simulate");
        read(b, "horizon", cfg.simulate.horizon, "simulate");
        read(b, "step", cfg.simulate.step, "simulate");
        detail::need_positive(cfg.simulate.horizon, "simulate.horizon");
        detail::need_positive(cfg.simulate.step, "simulate.step");
    }
    if (j.contains("value")) {
        const auto& b = j.at("value");
        detail::reject_unknown(b, {"ns", "ni", "a_grid"}, "value");
        read(b, "ns", cfg.value.ns, "value");
        read(b, "ni", cfg.value.ni, "value");
        read(b, "a_grid", cfg.value.a_grid, "value");
        if (cfg.value.ns < 2 || cfg.value.ni < 2 || cfg.value.a_grid < 1)
            throw ConfigError("value: grid sizes too small");
    }
    if (j.contains("verify_hj")) {
        const auto& b = j.at("verify_hj");
        detail::reject_unknown(b, {"samples", "a_grid", "tolerance"}, "verify_hj");
        read(b, "samples", cfg.verify_hj.samples, "verify_hj");
        read(b, "a_grid", cfg.verify_hj.a_grid, "verify_hj");
        read(b, "tolerance", cfg.verify_hj.tolerance, "verify_hj");
        if (cfg.verify_hj.a_grid < 1) throw ConfigError("verify_hj.a_grid: must be at least 1");
        detail::need_positive(cfg.verify_hj.tolerance, "verify_hj.tolerance");
    }
    if (j.contains("check_cost")) {
        const auto& b = j.at("check_cost");
        detail::reject_unknown(b, {"grid", "gencond_grid"}, "check_cost");
        detail::read_grid(b, "grid", cfg.check_cost.grid, "check_cost");
        detail::read_grid(b, "gencond_grid", cfg.check_cost.gencond_grid, "check_cost");
    }
    if (j.contains("lp_solve")) {
        const auto& b = j.at("lp_solve");
        auto& lp = cfg.lp_solve;
        detail::reject_unknown(b, {"r", "q", "T", "x0", "iters", "gap", "budget", "step", "cost"}, "lp_solve");
        read(b, "r", lp.r, "lp_solve");
        read(b, "q", lp.q, "lp_solve");
        read(b, "T", lp.T, "lp_solve");
        detail::read_state(b, "x0", lp.x0, "lp_solve");
        read(b, "iters", lp.iters, "lp_solve");
        read(b, "gap", lp.gap, "lp_solve");
        read(b, "budget", lp.budget, "lp_solve");
        read(b, "step", lp.step, "lp_solve");
        if (b.contains("cost")) lp.cost = b.at("cost");
    }
    if (j.contains("reach")) {
        const auto& b = j.at("reach");
        detail::reject_unknown(b, {"x0", "T", "n_points"}, "reach");
        detail::read_state(b, "x0", cfg.reach.x0, "reach");
        if (b.contains("T") && !b.at("T").is_null()) {
            double T = 0.0;
            read(b, "T", T, "reach");
            cfg.reach.T = T;
        }
        read(b, "n_points", cfg.reach.n_points, "reach");
    }
    return cfg;
}

/// Checks the dual-DP settings; separate so command-line overrides can be re-validated.
inline void validate_lp_block(const LpSolveBlock& lp) {
    if (lp.r < 1 || lp.r > 6) throw ConfigError("lp_solve.r: must lie in [1, 6]");
    detail::need_positive(lp.q, "lp_solve.q");
    detail::need_positive(lp.T, "lp_solve.T");
    detail::need_positive(lp.step, "lp_solve.step");
    if (lp.iters < 1) throw ConfigError("lp_solve.iters: must be at least 1");
    if (!(lp.gap >= 0.0)) throw ConfigError("lp_solve.gap: must be non-negative");
    if (lp.budget < 1) throw ConfigError("lp_solve.budget: must be at least 1");
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(j);
}

/// Builds a cost from {"kind": ..., parameters}.
inline CostModel make_cost(const nlohmann::json& spec) {
    if (!spec.is_object() || !spec.contains("kind") || !spec.at("kind").is_string())
        throw ConfigError("cost.kind: missing");
    const std::string kind = spec.at("kind").get<std::string>();
    double lambda = 1.0;
    auto lam = [&](std::initializer_list<const char*> extra) {
        std::initializer_list<const char*> base = {"kind", "lambda"};
        nlohmann::json rest = spec;
        for (const char* k : base) rest.erase(k);
        detail::reject_unknown(rest, extra, "cost");
        detail::read(spec, "lambda", lambda, "cost");
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("cost.lambda: must be non-negative");
    };
    if (kind == "affine") {
        lam({});
        return affine_cost(lambda);
    }
    if (kind == "multiplicative_power") {
        lam({"eta"});
        double eta = 1.0;
        detail::read(spec, "eta", eta, "cost");
        if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("cost.eta: must lie in [0, 1]");
        return power_cost(lambda, eta);
    }
    if (kind == "multiplicative_si") {
        lam({});
        return multiplicative_cost([lambda](double s, double i) { return lambda * s * i; }, "multiplicative_si");
    }
    if (kind == "multiplicative_exp_s_i2") {
        lam({});
        return multiplicative_cost([lambda](double s, double i) { return lambda * std::exp(s) * i * i; },
                                   "multiplicative_exp_s_i2");
    }
    if (kind == "state_product") {
        lam({});
        return state_cost([lambda](double s, double i) { return lambda * s * i; }, "state_product");
    }
    if (kind == "zero") {
        detail::reject_unknown(spec, {"kind"}, "cost");
        return zero_cost();
    }
    if (kind == "table") {
        detail::reject_unknown(spec, {"kind", "path"}, "cost");
        std::string path;
        detail::read(spec, "path", path, "cost");
        if (path.empty()) throw ConfigError("cost.path: required for table costs");
        try {
            return table_cost(TableCost::from_file(path));
        } catch (const DomainError& e) {
            throw ConfigError(std::string("cost.path: ") + e.what());
        }
    }
    throw ConfigError("cost.kind: unknown kind '" + kind + "'");
}

}  // namespace sirctl
