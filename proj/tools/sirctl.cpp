// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: every subcommand writes CSV/JSON into --out.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sirctl/config.hpp"
#include "sirctl/costs.hpp"
#include "sirctl/dual_dp.hpp"
#include "sirctl/parallel.hpp"
#include "sirctl/policy.hpp"
#include "sirctl/reachable.hpp"
#include "sirctl/zones.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sirctl;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

CostModel multiplicative_cost_from(const ExperimentConfig& cfg) {
    CostModel c = make_cost(cfg.cost);
    if (!c.meta.multiplicative) throw ConfigError("cost.kind: the closed-form value needs l1 = lambda(s,i) a");
    return c;
}

json state_json(const State& x) { return json::array({x.s, x.i}); }

class Output {
public:
    explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void text(const std::string& name, const std::string& body) const {
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
        f << body;
    }
    void json_file(const std::string& name, const json& j) const { text(name, j.dump(2) + "\n"); }
    [[nodiscard]] fs::path path(const std::string& name) const { return dir_ / name; }

private:
    fs::path dir_;
};

struct Context {
    ExperimentConfig cfg;
    Output out;
};

json check_item_json(const CheckItem& c) {
    json j = {{"name", c.name},     {"applicable", c.applicable}, {"passed", c.passed()},
              {"checked", c.checked}, {"violations", c.violations}, {"worst_margin", c.worst}};
    if (!std::isnan(c.s)) j["worst_point"] = {c.s, c.i, c.a};
    return j;
}

// ---------------------------------------------------------------------------

void cmd_zones(const Context& ctx) {
    const auto& p = ctx.cfg.params;
    const std::size_t n = ctx.cfg.zones.n_points;
    std::ostringstream csv;
    csv << "i,phi,b_curve,psi,psi_tilde\n";
    for (std::size_t k = 0; k < n; ++k) {
        const double i = k == 0 ? kZeroLevel : (k + 1 == n ? p.istar : p.istar * double(k) / double(n - 1));
        csv << num(i) << ',' << num(phi(p, i)) << ',' << num(band_curve(p, i)) << ',' << num(psi(p, i)) << ','
            << num(psi_tilde(p, i)) << '\n';
    }
    ctx.out.text("zones.csv", csv.str());

    const double N = ctx.cfg.population;
    const json tips = {{"green_at_istar", phi(p, p.istar)},
                       {"green_at_zero", phi_at_zero(p)},
                       {"yellow_at_istar", psi(p, p.istar)},
                       {"yellow_at_zero", psi_at_zero(p)}};
    json counts;
    for (const auto& [k, v] : tips.items()) counts[k] = std::round(v.get<double>() * N);
    ctx.out.json_file("zones.json", {{"tips", tips},
                                     {"population", N},
                                     {"population_counts", counts},
                                     {"band_at_istar", band_curve(p, p.istar)},
                                     {"band_at_zero", band_at_zero(p)}});
    std::cout << "zones: green " << num(tips["green_at_istar"].get<double>()) << ".."
              << num(tips["green_at_zero"].get<double>()) << ", yellow " << num(tips["yellow_at_istar"].get<double>())
              << ".." << num(tips["yellow_at_zero"].get<double>()) << "\n";
}

void cmd_simulate(const Context& ctx) {
    const auto& p = ctx.cfg.params;
    const auto& b = ctx.cfg.simulate;
    const CostModel c = make_cost(ctx.cfg.cost);
    const GreedyResult g = greedy_simulate(p, b.x0, c, {b.horizon, b.step, true});
    std::ostringstream csv;
    write_csv(csv, g.trajectory);
    ctx.out.text("trajectory.csv", csv.str());
    json j = {{"x0", state_json(b.x0)},
              {"zone", to_string(classify(p, b.x0))},
              {"cost", c.meta.name},
              {"accumulated_cost", g.cost},
              {"max_i", g.trajectory.max_i()},
              {"terminal_event", to_string(g.trajectory.terminal_event)},
              {"samples", g.trajectory.samples.size()}};
    j["tau_green"] = g.tau_green ? json(*g.tau_green) : json(nullptr);
    if (c.meta.multiplicative) j["W"] = value_W(p, c, b.x0);
    ctx.out.json_file("simulate.json", j);
    std::cout << "simulate: cost " << num(g.cost) << " over " << g.trajectory.samples.size() << " samples\n";
}

void cmd_value(const Context& ctx) {
    const auto& p = ctx.cfg.params;
    const auto& b = ctx.cfg.value;
    const CostModel c = multiplicative_cost_from(ctx.cfg);
    const double s_hi = psi_at_zero(p);
    std::vector<std::string> rows(b.ns);
    parallel_for(b.ns, ctx.cfg.threads, [&](std::size_t ks) {
        const double s = s_hi * double(ks + 1) / double(b.ns);
        std::ostringstream os;
        for (std::size_t ki = 0; ki < b.ni; ++ki) {
            const double i = p.istar * double(ki + 1) / double(b.ni);
            const State x{s, i};
            const ZoneLabel z = classify(p, x);
            double W = NAN, ds = NAN, di = NAN, res = NAN;
            if (in_yellow(p, x)) {
                W = value_W(p, c, x);
                if (is_differentiability_point(p, x)) {
                    const Gradient g = value_gradient(p, c, x);
                    ds = g.ds;
                    di = g.di;
                    res = hj_residual(p, c, x, b.a_grid).max_residual;
                }
            }
            os << num(s) << ',' << num(i) << ',' << to_string(z) << ',' << num(W) << ',' << num(ds) << ',' << num(di)
               << ',' << num(res) << '\n';
        }
        rows[ks] = os.str();
    });
    std::string body = "s,i,zone,W,dWds,dWdi,hj_residual\n";
    for (const auto& r : rows) body += r;
    ctx.out.text("value.csv", body);
    std::cout << "value: " << b.ns * b.ni << " grid points\n";
}

void cmd_verify_hj(const Context& ctx) {
    const auto& p = ctx.cfg.params;
    const auto& b = ctx.cfg.verify_hj;
    const CostModel c = multiplicative_cost_from(ctx.cfg);
    std::mt19937_64 rng(ctx.cfg.seed);
    std::uniform_real_distribution<double> us(0.0, psi_at_zero(p)), ui(0.0, p.istar);
    std::vector<State> pts;
    while (pts.size() < b.samples) {
        const State x{us(rng), ui(rng)};
        if (x.s > 0.0 && x.i > 0.0 && in_yellow(p, x) && is_differentiability_point(p, x)) pts.push_back(x);
    }
    std::vector<HjResidual> res(pts.size());
    parallel_for(pts.size(), ctx.cfg.threads, [&](std::size_t k) { res[k] = hj_residual(p, c, pts[k], b.a_grid); });
    std::size_t worst = 0, nonzero = 0;
    for (std::size_t k = 0; k < res.size(); ++k) {
        if (res[k].max_residual > res[worst].max_residual) worst = k;
        if (res[k].argmax_index != 0) ++nonzero;
    }
    const double max_res = res.empty() ? 0.0 : res[worst].max_residual;
    const bool passed = max_res <= b.tolerance && nonzero == 0;
    std::ostringstream summary;
    summary << "max residual " << (max_res <= b.tolerance ? "<= " : "> ") << num(b.tolerance) << ", argmax a = 0 at "
            << (nonzero == 0 ? "all points" : std::to_string(pts.size() - nonzero) + " of " + std::to_string(pts.size()) + " points");
    json j = {{"cost", c.meta.name},       {"samples", pts.size()},  {"a_grid", b.a_grid},
              {"tolerance", b.tolerance},  {"max_residual", max_res}, {"margin", b.tolerance - max_res},
              {"nonzero_argmax", nonzero}, {"passed", passed},        {"summary", summary.str()}};
    if (!pts.empty()) {
        j["worst_point"] = state_json(pts[worst]);
        j["worst_zone"] = to_string(classify(p, pts[worst]));
        j["worst_argmax_a"] = res[worst].argmax_a;
    }
    ctx.out.json_file("verify_hj.json", j);
    std::cout << "verify-hj: " << summary.str() << "\n";
}

void cmd_check_cost(const Context& ctx) {
    const auto& p = ctx.cfg.params;
    const CostModel c = make_cost(ctx.cfg.cost);
    const AssumptionReport rep = check_assumptions(c, p, ctx.cfg.check_cost.grid);
    json items = json::array();
    for (const CheckItem* it : rep.items()) items.push_back(check_item_json(*it));
    json j = {{"cost", c.meta.name}, {"standing_assumptions", rep.standing_assumptions()}, {"items", items}};
    if (c.meta.multiplicative) {
        const GenCondReport g = check_gencond(c, p, ctx.cfg.check_cost.gencond_grid);
        j["gencond"] = {{"holds", g.holds()},
                        {"checked", g.checked},
                        {"violations", g.violations},
                        {"worst_margin", std::isfinite(g.worst_margin) ? json(g.worst_margin) : json(nullptr)}};
        if (g.checked > 0) {
            j["gencond"]["worst_point"] = state_json(g.worst_point);
            j["gencond"]["worst_zone"] = to_string(g.worst_zone);
        }
    }
    ctx.out.json_file("check_cost.json", j);
    std::cout << "check-cost: standing assumptions " << (rep.standing_assumptions() ? "hold" : "violated") << "\n";
}

void cmd_lp_solve(const Context& ctx, const LpSolveBlock& lp) {
    validate_lp_block(lp);
    EpidemicParams p = ctx.cfg.params;
    p.q = lp.q;
    const CostModel c = make_cost(lp.cost);
    if (!c.meta.control_independent) throw ConfigError("lp_solve.cost.kind: needs a control-independent cost");
    if (!in_yellow(p, lp.x0)) throw ConfigError("lp_solve.x0: outside the yellow zone");
    TwoStageOptions opt;
    opt.r = lp.r;
    opt.T = lp.T;
    opt.max_iters = lp.iters;
    opt.gap_tol = lp.gap;
    opt.scenarios.budget = lp.budget;
    opt.scenarios.seed = ctx.cfg.seed;
    opt.scenarios.step = lp.step;
    opt.scenarios.threads = ctx.cfg.threads;
    const TwoStageResult res = two_stage_solve(p, c, lp.x0, opt);

    std::string lines;
    for (const auto& rec : res.records) {
        json j = rec;
        lines += j.dump() + "\n";
    }
    ctx.out.text("lp_solve.jsonl", lines);
    std::cout << lines;
    json cuts = json::array();
    for (const auto& cut : res.cuts.cuts) cuts.push_back(cut);
    ctx.out.json_file("cuts.json", {{"r", res.cuts.r}, {"q", res.cuts.q}, {"cuts", cuts}, {"history", res.cuts.history}});
    ctx.out.json_file("lp_summary.json", {{"x0", state_json(lp.x0)},
                                          {"r", lp.r},
                                          {"q", lp.q},
                                          {"T", lp.T},
                                          {"scenarios", res.scenarios.size()},
                                          {"converged", res.converged},
                                          {"lower", res.lower_trace.back()},
                                          {"upper", res.upper_trace.back()}});
}

void cmd_reach(const Context& ctx) {
    const auto& p = ctx.cfg.params;
    const auto& b = ctx.cfg.reach;
    if (!in_yellow(p, b.x0)) throw ConfigError("reach.x0: outside the yellow zone");
    const ReachableSpec rs = reachable_spec(p, b.x0, b.T, b.n_points);
    std::ostringstream csv;
    csv << "branch,control,piece,s,i\n";
    auto emit = [&](const char* name, const OrbitBranch& br) {
        for (std::size_t k = 0; k < br.pieces.size(); ++k)
            for (const State& x : br.pieces[k])
                csv << name << ',' << num(br.control) << ',' << k << ',' << num(x.s) << ',' << num(x.i) << '\n';
    };
    emit("upper", rs.upper_branch);
    emit("lower", rs.lower_branch);
    ctx.out.text("reach.csv", csv.str());
    json j = {{"x0", state_json(b.x0)},
              {"upper_points", rs.upper_branch.size()},
              {"lower_points", rs.lower_branch.size()},
              {"upper_pieces", rs.upper_branch.pieces.size()},
              {"lower_pieces", rs.lower_branch.pieces.size()}};
    j["T"] = b.T ? json(*b.T) : json(nullptr);
    if (rs.s_lower_limits) j["s_lower_limits"] = {rs.s_lower_limits->first, rs.s_lower_limits->second};
    ctx.out.json_file("reach.json", j);
    std::cout << "reach: " << rs.upper_branch.size() << " + " << rs.lower_branch.size() << " boundary points\n";
}

State parse_state(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw ConfigError("--x0: expected s,i");
    try {
        return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
    } catch (const std::exception&) {
        throw ConfigError("--x0: expected two numbers s,i");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal lockdown control of the SIR model under an ICU cap"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory (overrides output_dir)");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--threads", threads, "worker threads");

    auto* zones = app.add_subcommand("zones", "curve tables and zone data tips");
    auto* simulate = app.add_subcommand("simulate", "greedy trajectory from simulate.x0");
    auto* value = app.add_subcommand("value", "value function on a grid");
    auto* verify = app.add_subcommand("verify-hj", "sampled Hamilton-Jacobi residual report");
    auto* check = app.add_subcommand("check-cost", "sampled cost assumption checks");
    auto* lp = app.add_subcommand("lp-solve", "two-stage dual dynamic programming bounds");
    auto* reach = app.add_subcommand("reach", "reachable-set boundary");

    std::optional<int> lp_r;
    std::optional<double> lp_q, lp_T, lp_gap;
    std::optional<std::size_t> lp_iters;
    std::string lp_x0;
    lp->add_option("--r", lp_r, "relaxation order");
    lp->add_option("--q", lp_q, "discount rate");
    lp->add_option("--T", lp_T, "first-stage horizon");
    lp->add_option("--x0", lp_x0, "initial state s,i");
    lp->add_option("--iters", lp_iters, "maximum iterations");
    lp->add_option("--gap", lp_gap, "stopping gap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    try {
        ExperimentConfig cfg = config_path.empty() ? parse_config(json::object()) : load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (threads) cfg.threads = *threads;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        const Context ctx{cfg, Output(cfg.output_dir)};

        if (*zones) cmd_zones(ctx);
        if (*simulate) cmd_simulate(ctx);
        if (*value) cmd_value(ctx);
        if (*verify) cmd_verify_hj(ctx);
        if (*check) cmd_check_cost(ctx);
        if (*reach) cmd_reach(ctx);
        if (*lp) {
            LpSolveBlock b = cfg.lp_solve;
            if (lp_r) b.r = *lp_r;
            if (lp_q) b.q = *lp_q;
            if (lp_T) b.T = *lp_T;
            if (lp_iters) b.iters = *lp_iters;
            if (lp_gap) b.gap = *lp_gap;
            if (!lp_x0.empty()) b.x0 = parse_state(lp_x0);
            cmd_lp_solve(ctx, b);
        }
    } catch (const std::logic_error& e) {
        // ConfigError, DomainError, ZoneMismatch: bad input
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
