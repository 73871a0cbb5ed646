// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "sirctl/params.hpp"

namespace sirctl {

struct Velocity {
    double ds = 0.0;
    double di = 0.0;
};

/// Right-hand side of the controlled SIR system; r is never integrated.
inline Velocity vector_field(const EpidemicParams& p, const State& x, double a) {
    if (!(a >= 0.0 && a <= p.abar)) throw DomainError("vector_field: control outside [0, abar]");
    const double contact = p.beta * (1.0 - a) * x.s;
    return {-contact * x.i, (contact - p.gamma) * x.i};
}

/// Value of s + i - gamma/(beta(1-a)) log s, conserved along constant-a flows.
inline double constant_control_invariant(const EpidemicParams& p, double a, const State& x) {
    if (!(x.s > 0.0)) throw DomainError("constant_control_invariant: s must be positive");
    if (!(a >= 0.0 && a <= p.abar)) throw DomainError("constant_control_invariant: a outside [0, abar]");
    return x.s + x.i - p.herd_at(a) * std::log(x.s);
}

// ---------------------------------------------------------------------------
// Controls

struct ConstantControl {
    double a = 0.0;
};

/// Control equal to breakpoints[k].second on [breakpoints[k].first, breakpoints[k+1].first).
/// Before the first breakpoint the first value applies.
struct PiecewiseConstant {
    std::vector<std::pair<double, double>> breakpoints;

    [[nodiscard]] double at(double t) const {
        if (breakpoints.empty()) return 0.0;
        auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t,
                                   [](double v, const auto& bp) { return v < bp.first; });
        if (it == breakpoints.begin()) return breakpoints.front().second;
        return std::prev(it)->second;
    }
    /// First breakpoint strictly after t, or +inf.
    [[nodiscard]] double next_switch(double t) const {
        for (const auto& bp : breakpoints)
            if (bp.first > t) return bp.first;
        return INFINITY;
    }
};

/// State feedback, sampled at the start of every integration step.
struct Feedback {
    std::function<double(const State&)> law;
};

using ControlInput = std::variant<ConstantControl, PiecewiseConstant, Feedback>;

// ---------------------------------------------------------------------------
// Trajectories

enum class TerminalEvent { HorizonReached, HitGreen, HitBoundary, StepFailure };

/// How the control behaves on the interval that starts at a sample.
enum class ControlLaw : unsigned char {
    Held,              ///< a is constant until the next sample
    BoundaryFeedback,  ///< a = (1 - gamma/(beta s))^+ ^ abar, evaluated continuously
};

struct Sample {
    double t = 0.0;
    double s = 0.0;
    double i = 0.0;
    double a = 0.0;
    ControlLaw law = ControlLaw::Held;

    [[nodiscard]] State state() const { return {s, i}; }
};

struct Trajectory {
    std::vector<Sample> samples;
    TerminalEvent terminal_event = TerminalEvent::HorizonReached;

    [[nodiscard]] bool empty() const { return samples.empty(); }
    [[nodiscard]] const Sample& back() const { return samples.back(); }
    [[nodiscard]] double duration() const {
        return samples.empty() ? 0.0 : samples.back().t - samples.front().t;
    }
    [[nodiscard]] double max_i() const {
        double m = -INFINITY;
        for (const auto& smp : samples) m = std::max(m, smp.i);
        return m;
    }
};

/// Event fired when `g` becomes non-negative; `kind` becomes the terminal event.
struct EventPredicate {
    std::function<double(const State&)> g;
    TerminalEvent kind = TerminalEvent::HitBoundary;
};

enum class TimeDirection { Forward, Backward };

namespace detail {

inline double boundary_feedback(const EpidemicParams& p, double s) {
    const double a = 1.0 - p.herd() / s;
    return std::clamp(a, 0.0, p.abar);
}

inline Velocity oriented_field(const EpidemicParams& p, const State& x, double a, double sign) {
    const Velocity v = vector_field(p, x, a);
    return {sign * v.ds, sign * v.di};
}

/// One classical RK4 step of length h.
inline State rk4_step(const EpidemicParams& p, const State& x, double a, ControlLaw law, double h,
                      double sign = 1.0) {
    auto control = [&](const State& y) {
        return law == ControlLaw::BoundaryFeedback ? boundary_feedback(p, y.s) : a;
    };
    const Velocity k1 = oriented_field(p, x, control(x), sign);
    const State x2{x.s + 0.5 * h * k1.ds, x.i + 0.5 * h * k1.di};
    const Velocity k2 = oriented_field(p, x2, control(x2), sign);
    const State x3{x.s + 0.5 * h * k2.ds, x.i + 0.5 * h * k2.di};
    const Velocity k3 = oriented_field(p, x3, control(x3), sign);
    const State x4{x.s + h * k3.ds, x.i + h * k3.di};
    const Velocity k4 = oriented_field(p, x4, control(x4), sign);
    return {x.s + h / 6.0 * (k1.ds + 2.0 * k2.ds + 2.0 * k3.ds + k4.ds),
            x.i + h / 6.0 * (k1.di + 2.0 * k2.di + 2.0 * k3.di + k4.di)};
}

inline double control_value(const ControlInput& u, double t, const State& x, double abar) {
    double a = std::visit(
        [&](const auto& c) -> double {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, ConstantControl>) return c.a;
            else if constexpr (std::is_same_v<C, PiecewiseConstant>) return c.at(t);
            else return c.law(x);
        },
        u);
    if (!(a >= 0.0 && a <= abar)) throw DomainError("control input returned a value outside [0, abar]");
    return a;
}

inline double next_switch(const ControlInput& u, double t) {
    if (const auto* pc = std::get_if<PiecewiseConstant>(&u)) return pc->next_switch(t);
    return INFINITY;
}

}  // namespace detail

inline constexpr double kSimplexTolerance = 1e-8;
inline constexpr double kEventTimeTolerance = 1e-10;

/// Fixed-step RK4 with event localization.
///
/// Feedback controls are sample-and-hold; piecewise-constant steps are cut at
/// switch times so the held value is exact. With TimeDirection::Backward the
/// field is negated and sample times measure elapsed backward time.
inline Trajectory integrate(const EpidemicParams& p, const State& x0, const ControlInput& u,
                            double horizon, double step, std::span<const EventPredicate> events = {},
                            TimeDirection dir = TimeDirection::Forward) {
    if (!(step > 0.0)) throw DomainError("integrate: step must be positive");
    if (!(horizon > 0.0)) throw DomainError("integrate: horizon must be positive");
    const double sign = dir == TimeDirection::Forward ? 1.0 : -1.0;

    Trajectory tr;
    State x = x0;
    double t = 0.0;
    double a = detail::control_value(u, t, x, p.abar);
    tr.samples.push_back({t, x.s, x.i, a, ControlLaw::Held});
    for (const auto& ev : events) {
        if (ev.g(x) >= 0.0) {
            tr.terminal_event = ev.kind;
            return tr;
        }
    }

    std::size_t k = 0;
    while (t < horizon) {
        // t is recomputed from the step count to avoid drift in long runs.
        double t_next = std::min(horizon, static_cast<double>(k + 1) * step);
        if (dir == TimeDirection::Forward) t_next = std::min(t_next, detail::next_switch(u, t));
        if (t_next <= t) t_next = std::min(horizon, t + step);
        const double h = t_next - t;
        State y = detail::rk4_step(p, x, a, ControlLaw::Held, h, sign);

        // Earliest triggered event, localized by bisection on the sub-step length.
        double best_tau = INFINITY;
        State best_state{};
        TerminalEvent best_kind{};
        for (const auto& ev : events) {
            if (ev.g(y) < 0.0) continue;
            double lo = 0.0, hi = h;
            State at_hi = y;
            while (hi - lo > kEventTimeTolerance) {
                const double mid = 0.5 * (lo + hi);
                const State ym = detail::rk4_step(p, x, a, ControlLaw::Held, mid, sign);
                if (ev.g(ym) >= 0.0) {
                    hi = mid;
                    at_hi = ym;
                } else {
                    lo = mid;
                }
            }
            if (hi < best_tau) {
                best_tau = hi;
                best_state = at_hi;
                best_kind = ev.kind;
            }
        }
        if (best_tau < INFINITY) {
            tr.samples.push_back({t + best_tau, best_state.s, best_state.i, a, ControlLaw::Held});
            tr.terminal_event = best_kind;
            return tr;
        }
        if (!y.in_simplex(kSimplexTolerance) || !std::isfinite(y.s) || !std::isfinite(y.i)) {
            tr.terminal_event = TerminalEvent::StepFailure;
            return tr;
        }
        x = y;
        t = t_next;
        if (t_next >= static_cast<double>(k + 1) * step) ++k;
        a = detail::control_value(u, t, x, p.abar);
        tr.samples.push_back({t, x.s, x.i, a, ControlLaw::Held});
    }
    tr.terminal_event = TerminalEvent::HorizonReached;
    return tr;
}

/// Reconstructs the state at time t inside the sampled range with a partial RK4 step.
inline State state_at(const EpidemicParams& p, const Trajectory& tr, double t) {
    const auto& sm = tr.samples;
    if (sm.empty()) throw DomainError("state_at: empty trajectory");
    if (t <= sm.front().t) return sm.front().state();
    if (t >= sm.back().t) return sm.back().state();
    auto it = std::upper_bound(sm.begin(), sm.end(), t, [](double v, const Sample& s) { return v < s.t; });
    const Sample& base = *std::prev(it);
    if (t == base.t) return base.state();
    return detail::rk4_step(p, base.state(), base.a, base.law, t - base.t);
}

/// Control value at time t, consistent with state_at.
inline double control_at(const EpidemicParams& p, const Trajectory& tr, double t) {
    const auto& sm = tr.samples;
    auto it = std::upper_bound(sm.begin(), sm.end(), t, [](double v, const Sample& s) { return v < s.t; });
    const Sample& base = it == sm.begin() ? sm.front() : *std::prev(it);
    if (base.law == ControlLaw::BoundaryFeedback) return detail::boundary_feedback(p, state_at(p, tr, t).s);
    return base.a;
}

/// CSV with header t,s,i,a and 12 significant digits.
inline void write_csv(std::ostream& os, const Trajectory& tr) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << "t,s,i,a\n" << std::setprecision(12);
    for (const auto& smp : tr.samples) os << smp.t << ',' << smp.s << ',' << smp.i << ',' << smp.a << '\n';
    os.flags(flags);
    os.precision(prec);
}

inline const char* to_string(TerminalEvent e) {
    switch (e) {
        case TerminalEvent::HorizonReached: return "HorizonReached";
        case TerminalEvent::HitGreen: return "HitGreen";
        case TerminalEvent::HitBoundary: return "HitBoundary";
        case TerminalEvent::StepFailure: return "StepFailure";
    }
    return "?";
}

}  // namespace sirctl
