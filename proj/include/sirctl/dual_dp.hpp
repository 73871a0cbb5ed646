// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "sirctl/costs.hpp"
#include "sirctl/dynamics.hpp"
#include "sirctl/moments.hpp"
#include "sirctl/parallel.hpp"
#include "sirctl/params.hpp"
#include "sirctl/policy.hpp"
#include "sirctl/simplex.hpp"
#include "sirctl/zones.hpp"

namespace sirctl {

class EmptyCutSet : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NoFeasibleScenario : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Terminal measure: weighted Dirac masses.
struct Scenario {
    std::vector<std::pair<State, double>> support;
    std::string policy;
    MomentVector moments;
    double stage_cost = 0.0;  // q int_0^T e^{-qt} l1 dt along the generating trajectory

    static Scenario dirac(const State& x, std::string name = "dirac") {
        Scenario sc;
        sc.support = {{x, 1.0}};
        sc.policy = std::move(name);
        return sc;
    }
};

/// Accumulated backward-stage polynomials; b(g2) = max_p <q p, g2>.
struct CutSet {
    int r = 2;
    double q = 0.0;
    std::vector<Polynomial> cuts;
    std::vector<double> history;

    [[nodiscard]] double value(const State& x) const {
        if (cuts.empty()) throw EmptyCutSet("cut set is empty");
        double best = -INFINITY;
        for (const auto& p : cuts) best = std::max(best, q * p(x.s, x.i));
        return best;
    }
};

inline double lower_bound(const CutSet& cs, const Scenario& sc) {
    if (cs.cuts.empty()) throw EmptyCutSet("lower_bound: cut set is empty");
    double best = -INFINITY;
    for (const auto& p : cs.cuts) {
        double v = 0.0;
        for (const auto& [x, w] : sc.support) v += w * cs.q * p(x.s, x.i);
        best = std::max(best, v);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Backward stage

enum class NodeSpacing { Uniform, ChebyshevLobatto };

struct PositivityGrid {
    std::size_t ns = 33;
    std::size_t ni = 33;
    std::size_t na = 9;
    NodeSpacing spacing = NodeSpacing::ChebyshevLobatto;

    [[nodiscard]] PositivityGrid refined(std::size_t f) const {
        return {(ns - 1) * f + 1, (ni - 1) * f + 1, (na - 1) * f + 1, NodeSpacing::Uniform};
    }
};

struct BackwardResult {
    Polynomial cut;           // raw coefficients in (s, i)
    double objective = 0.0;   // <q p, gamma2>
    double grid_margin = 0.0; // worst violation on the LP grid
    std::size_t rows = 0;
    std::size_t pivots = 0;
};

namespace detail {

/// Row of the subsolution inequality q p - l1 - grad p . F <= 0 in scaled
/// coordinates u = s/s_max, v = i/i*.
inline std::vector<double> subsolution_row(const EpidemicParams& p, const std::vector<MonomialIndex>& basis, double smax,
                                           double s, double i, double a) {
    const Velocity f = vector_field(p, {s, i}, a);
    const double u = s / smax, v = i / p.istar;
    std::vector<double> row(basis.size());
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const int e1 = basis[k].a1, e2 = basis[k].a2;
        const double mono = std::pow(u, e1) * std::pow(v, e2);
        const double du = e1 > 0 ? e1 * std::pow(u, e1 - 1) * std::pow(v, e2) / smax : 0.0;
        const double dv = e2 > 0 ? e2 * std::pow(u, e1) * std::pow(v, e2 - 1) / p.istar : 0.0;
        row[k] = p.q * mono - (du * f.ds + dv * f.di);
    }
    return row;
}

inline double grid_value(double hi, std::size_t k, std::size_t n, NodeSpacing sp = NodeSpacing::Uniform) {
    if (n <= 1) return 0.0;
    const double u = double(k) / double(n - 1);
    if (sp == NodeSpacing::Uniform) return hi * u;
    // clustered at both edges, where sampled positivity leaks first
    return hi * 0.5 * (1.0 - std::cos(M_PI * u));
}

}  // namespace detail

/// Worst violation of p >= 0 and of the subsolution inequality on a grid of the
/// box [0, gamma/(beta(1-abar))] x [0, i*] x [0, abar]. The inequality is affine
/// in a, so the two extreme control levels decide every grid column exactly.
inline double positivity_violation(const Polynomial& cut, const CostModel& c, const EpidemicParams& p,
                                   const PositivityGrid& g) {
    const double smax = p.herd_confined();
    double worst = 0.0;
    for (std::size_t ks = 0; ks < g.ns; ++ks) {
        const double s = detail::grid_value(smax, ks, g.ns, g.spacing);
        for (std::size_t ki = 0; ki < g.ni; ++ki) {
            const double i = detail::grid_value(p.istar, ki, g.ni, g.spacing);
            const double val = cut(s, i), gs = cut.ds(s, i), gi = cut.di(s, i);
            worst = std::max(worst, -val);
            for (double a : {0.0, p.abar}) {
                const Velocity f = vector_field(p, {s, i}, a);
                worst = std::max(worst, p.q * val - c(s, i, 0.0) - gs * f.ds - gi * f.di);
            }
        }
    }
    return worst;
}

/// Grid-sampled cut LP: maximize <q p, gamma2> over p of degree <= 2r with
/// p >= 0 and q p - l1 - grad p . F <= 0 at the grid nodes. The LP is solved in
/// dual form (few equality rows, many columns) and p is read off the multipliers.
inline BackwardResult backward_step(int r, const CostModel& c, const EpidemicParams& p, const Scenario& gamma2,
                                    const PositivityGrid& grid = {}) {
    if (r < 0) throw DomainError("backward_step: r must be non-negative");
    if (!(p.q > 0.0)) throw DomainError("backward_step: q must be positive");
    if (!c.meta.control_independent) throw DomainError("backward_step: the running cost must be control independent");
    const double smax = p.herd_confined();
    const auto basis = monomials_2d(2 * r);
    const std::size_t nb = basis.size();

    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    for (std::size_t ks = 0; ks < grid.ns; ++ks) {
        const double s = detail::grid_value(smax, ks, grid.ns, grid.spacing);
        for (std::size_t ki = 0; ki < grid.ni; ++ki) {
            const double i = detail::grid_value(p.istar, ki, grid.ni, grid.spacing);
            const double l = c(s, i, 0.0);
            std::vector<double> pos(nb);
            for (std::size_t k = 0; k < nb; ++k)
                pos[k] = -std::pow(s / smax, basis[k].a1) * std::pow(i / p.istar, basis[k].a2);
            rows.push_back(std::move(pos));
            rhs.push_back(0.0);
            // interior control levels are convex combinations of the two extremes
            const std::size_t levels = grid.na >= 2 ? 2 : 1;
            for (std::size_t ka = 0; ka < levels; ++ka) {
                rows.push_back(detail::subsolution_row(p, basis, smax, s, i, ka == 0 ? 0.0 : p.abar));
                rhs.push_back(l);
            }
        }
    }
    std::vector<double> obj(nb, 0.0);
    for (const auto& [x, w] : gamma2.support)
        for (std::size_t k = 0; k < nb; ++k)
            obj[k] += w * p.q * std::pow(x.s / smax, basis[k].a1) * std::pow(x.i / p.istar, basis[k].a2);

    // unit max-norm rows; the feasible set is unchanged
    for (std::size_t j = 0; j < rows.size(); ++j) {
        double mx = 0.0;
        for (double v : rows[j]) mx = std::max(mx, std::fabs(v));
        if (mx == 0.0) continue;
        for (double& v : rows[j]) v /= mx;
        rhs[j] /= mx;
    }

    // dual: min rhs'y s.t. sum_j y_j row_j = obj, y >= 0
    const std::size_t nr = rows.size();
    Matrix A(nb, nr);
    for (std::size_t j = 0; j < nr; ++j)
        for (std::size_t k = 0; k < nb; ++k) A(k, j) = rows[j][k];
    const LpResult lp = solve_standard_form(A, obj, rhs);
    if (lp.status != LpStatus::Optimal)
        throw LpNumericalError(std::string("backward_step: dual LP ") + to_string(lp.status));

    BackwardResult out;
    out.rows = nr;
    out.pivots = lp.pivots;
    const std::vector<double>& coef = lp.duals;  // primal coefficients in scaled monomials
    out.objective = 0.0;
    for (std::size_t k = 0; k < nb; ++k) out.objective += obj[k] * coef[k];
    for (std::size_t j = 0; j < nr; ++j) {
        double v = -rhs[j];
        for (std::size_t k = 0; k < nb; ++k) v += rows[j][k] * coef[k];
        out.grid_margin = std::max(out.grid_margin, v);
    }
    for (std::size_t k = 0; k < nb; ++k)
        out.cut.coeffs[basis[k]] = coef[k] / (std::pow(smax, basis[k].a1) * std::pow(p.istar, basis[k].a2));
    return out;
}

// ---------------------------------------------------------------------------
// Forward stage

struct ScenarioOptions {
    std::size_t budget = 50;
    std::uint64_t seed = 1;
    double step = 5e-3;
    int r = 2;
    unsigned threads = 1;
    std::size_t constant_levels = 5;
};

namespace detail {

inline bool admissible_trajectory(const EpidemicParams& p, const Trajectory& tr) {
    return tr.terminal_event != TerminalEvent::StepFailure && tr.max_i() <= p.istar + 1e-9;
}

}  // namespace detail

/// Occupation-measure scenarios from simulated admissible trajectories on [0, T]:
/// constant controls on an a-grid, the greedy feedback, and random
/// piecewise-constant controls with uniform switch times.
inline std::vector<Scenario> generate_scenarios(const EpidemicParams& p, const CostModel& c, const State& x0, double T,
                                                const ScenarioOptions& opt = {}) {
    if (!(p.q > 0.0)) throw DomainError("generate_scenarios: q must be positive");
    if (!in_yellow(p, x0)) throw ZoneMismatch("generate_scenarios: x0 outside the yellow zone");

    // draw every random policy up front so results do not depend on threading
    struct Job {
        enum Kind { Constant, Greedy, Random } kind;
        double a = 0.0;
        PiecewiseConstant pc;
        std::string name;
    };
    std::vector<Job> jobs;
    const std::size_t nconst = std::min(opt.constant_levels, opt.budget);
    for (std::size_t k = 0; k < nconst; ++k) {
        const double a = nconst == 1 ? 0.0 : p.abar * double(k) / double(nconst - 1);
        jobs.push_back({Job::Constant, a, {}, "constant a=" + std::to_string(a)});
    }
    if (jobs.size() < opt.budget) jobs.push_back({Job::Greedy, 0.0, {}, "greedy"});
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (jobs.size() < opt.budget) {
        const std::size_t nswitch = 1 + std::size_t(unit(rng) * 4.0);
        const bool bang = unit(rng) < 0.5;
        std::vector<double> times(nswitch);
        for (double& t : times) t = unit(rng) * T;
        std::sort(times.begin(), times.end());
        PiecewiseConstant pc;
        double prev = 0.0;
        for (std::size_t k = 0; k <= nswitch; ++k) {
            const double a = bang ? (unit(rng) < 0.5 ? 0.0 : p.abar) : unit(rng) * p.abar;
            pc.breakpoints.push_back({prev, a});
            if (k < nswitch) prev = times[k];
        }
        jobs.push_back({Job::Random, 0.0, pc, std::string(bang ? "bang-bang" : "piecewise") + " #" + std::to_string(jobs.size())});
    }

    std::vector<std::optional<Scenario>> out(jobs.size());
    parallel_for(jobs.size(), opt.threads, [&](std::size_t k) {
        const Job& job = jobs[k];
        Trajectory tr;
        if (job.kind == Job::Greedy) {
            tr = greedy_simulate(p, x0, c, {T, opt.step, false}).trajectory;
            if (tr.back().t < T - 1e-9) return;
        } else {
            const ControlInput u = job.kind == Job::Constant ? ControlInput{ConstantControl{job.a}} : ControlInput{job.pc};
            tr = integrate(p, x0, u, T, opt.step);
        }
        if (!detail::admissible_trajectory(p, tr)) return;
        Scenario sc = Scenario::dirac(tr.back().state(), job.name);
        sc.moments = trajectory_to_moments(tr, p, T, opt.r, p.q);
        sc.stage_cost = discounted_cost(p, tr, c, p.q);
        out[k] = std::move(sc);
    });
    std::vector<Scenario> res;
    for (auto& s : out)
        if (s) res.push_back(std::move(*s));
    if (res.empty()) throw NoFeasibleScenario("generate_scenarios: no admissible trajectory");
    return res;
}

struct ForwardResult {
    std::size_t best = 0;
    double lower = INFINITY;        // min over scenarios of stage + e^{-qT} b(gamma2)
    double stage_best = 0.0;
    std::vector<double> values;
};

inline ForwardResult forward_step(const EpidemicParams& p, const CutSet& cs, const std::vector<Scenario>& scenarios,
                                  double T) {
    if (scenarios.empty()) throw NoFeasibleScenario("forward_step: empty scenario set");
    ForwardResult fr;
    const double decay = std::exp(-p.q * T);
    for (std::size_t k = 0; k < scenarios.size(); ++k) {
        const double v = scenarios[k].stage_cost + decay * lower_bound(cs, scenarios[k]);
        fr.values.push_back(v);
        if (v < fr.lower) {
            fr.lower = v;
            fr.best = k;
        }
    }
    fr.stage_best = scenarios[fr.best].stage_cost;
    return fr;
}

inline ForwardResult forward_step(const EpidemicParams& p, const CostModel& c, const CutSet& cs, const State& x0,
                                  double T, const ScenarioOptions& opt = {}) {
    return forward_step(p, cs, generate_scenarios(p, c, x0, T, opt), T);
}

// ---------------------------------------------------------------------------
// Two-stage loop

struct TwoStageOptions {
    int r = 2;
    double T = 20.0;
    std::size_t max_iters = 10;
    double gap_tol = 1e-6;
    PositivityGrid grid{};
    std::size_t audit_refinement = 4;
    ScenarioOptions scenarios{};
};

struct IterationRecord {
    std::size_t iter = 0;
    double lower = 0.0;
    double upper = 0.0;
    double gap = 0.0;
    Polynomial cut;
    double worst_positivity_margin = 0.0;
    std::string scenario;
};

inline void to_json(nlohmann::json& j, const IterationRecord& rec) {
    j = {{"iter", rec.iter},     {"lower", rec.lower}, {"upper", rec.upper},
         {"gap", rec.gap},       {"cut_coeffs", rec.cut}, {"worst_positivity_margin", rec.worst_positivity_margin},
         {"scenario", rec.scenario}};
}

struct TwoStageResult {
    std::vector<double> lower_trace;
    std::vector<double> upper_trace;
    std::vector<IterationRecord> records;
    CutSet cuts;
    std::vector<Scenario> scenarios;
    bool converged = false;
};

/// Alternates forward and backward stages. The scenario family is drawn once,
/// so growing the cut set can only raise the lower trace.
inline TwoStageResult two_stage_solve(const EpidemicParams& p, const CostModel& c, const State& x0,
                                      const TwoStageOptions& opt = {}) {
    if (!(p.q > 0.0)) throw DomainError("two_stage_solve: q must be positive");
    TwoStageResult res;
    res.cuts.r = opt.r;
    res.cuts.q = p.q;
    res.cuts.cuts.push_back(Polynomial{});  // p = 0 is always a subsolution when l1 >= 0
    ScenarioOptions so = opt.scenarios;
    so.r = opt.r;
    res.scenarios = generate_scenarios(p, c, x0, opt.T, so);
    const double decay = std::exp(-p.q * opt.T);
    const PositivityGrid audit = opt.grid.refined(opt.audit_refinement);

    for (std::size_t n = 1; n <= opt.max_iters; ++n) {
        const ForwardResult fr = forward_step(p, res.cuts, res.scenarios, opt.T);
        const Scenario& best = res.scenarios[fr.best];
        const BackwardResult br = backward_step(opt.r, c, p, best, opt.grid);
        const double upper = fr.stage_best + decay * br.objective;
        IterationRecord rec;
        rec.iter = n;
        rec.lower = fr.lower;
        rec.upper = upper;
        rec.gap = upper - fr.lower;
        rec.cut = br.cut;
        rec.worst_positivity_margin = positivity_violation(br.cut, c, p, audit);
        rec.scenario = best.policy;
        res.cuts.cuts.push_back(br.cut);
        res.cuts.history.push_back(br.objective);
        res.lower_trace.push_back(rec.lower);
        res.upper_trace.push_back(rec.upper);
        res.records.push_back(rec);
        if (rec.gap <= opt.gap_tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace sirctl
