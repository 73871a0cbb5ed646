// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "sirctl/costs.hpp"
#include "sirctl/dynamics.hpp"
#include "sirctl/params.hpp"
#include "sirctl/quadrature.hpp"
#include "sirctl/zones.hpp"

namespace sirctl {

// The undiscounted greedy problem: q plays no role in this header.

/// theta* = i* + gamma/(beta(1-abar)) (1 - log(gamma/(beta(1-abar)))).
inline double theta_star(const EpidemicParams& p) {
    const double k = p.herd_confined();
    return p.istar + k - k * std::log(k);
}

/// Inverse of psi on [gamma/(beta(1-abar)), psi(0)]: theta* - s + k log s.
inline double psi_inverse(const EpidemicParams& p, double s) {
    return theta_star(p) - s + p.herd_confined() * std::log(s);
}

struct GreedyTransit {
    std::optional<double> s1;  // exit abscissa on i = i* (closure of B \ G)
    std::optional<double> s2;  // hitting abscissa on psi (closure of Y \ B)
    double theta_star = 0.0;
    State entry_point{};  // (gamma/(beta(1-abar)), i*)

    [[nodiscard]] double require_s1() const {
        if (!s1) throw ZoneMismatch("s1 is defined only on the closure of B \\ G");
        return *s1;
    }
    [[nodiscard]] double require_s2() const {
        if (!s2) throw ZoneMismatch("s2 is defined only on the closure of Y \\ B");
        return *s2;
    }
};

inline constexpr double kCurveTolerance = 1e-9;

namespace detail {

/// Root s1 > gamma/beta of s1 - s0 - i0 + i* - (gamma/beta) log(s1/s0) = 0.
inline double exit_abscissa(const EpidemicParams& p, const State& x0) {
    const double k = p.herd();
    const double rhs = (x0.i - p.istar) / k + shifted_log_gap(x0.s / k);
    return solve_curve(k, rhs, Branch::AboveThreshold);
}

inline double psi_hit_abscissa(const EpidemicParams& p, const State& x0) {
    const double expo = p.beta * (1.0 - p.abar) / (p.gamma * p.abar) *
                        (x0.s + x0.i - p.herd() * std::log(x0.s) - theta_star(p));
    return std::exp(expo);
}

}  // namespace detail

inline GreedyTransit transit_quantities(const EpidemicParams& p, const State& x0) {
    if (!(x0.s > 0.0 && x0.i > 0.0)) throw DomainError("transit_quantities: requires s0 > 0 and i0 > 0");
    const ZoneLabel z = classify(p, x0);
    if (z == ZoneLabel::Infeasible || z == ZoneLabel::OutsideSimplex)
        throw ZoneMismatch("transit_quantities: x0 outside the yellow zone");
    GreedyTransit tr;
    tr.theta_star = theta_star(p);
    tr.entry_point = {p.herd_confined(), p.istar};
    const double lvl = std::min(x0.i, p.istar);
    const double green = phi(p, lvl), band = band_curve(p, lvl);
    const bool band_closure = z == ZoneLabel::BandMinusGreen ||
                              (z == ZoneLabel::Green && std::fabs(x0.s - green) <= kCurveTolerance);
    const bool yellow_closure = z == ZoneLabel::YellowMinusBand ||
                                (z != ZoneLabel::YellowMinusBand && std::fabs(x0.s - band) <= kCurveTolerance);
    // s1 - gamma/beta grows like a square root off the green edge, so rounding-level
    // ties are snapped to the limit instead of amplified
    if (band_closure) tr.s1 = std::fabs(x0.s - green) <= kClassifyTie ? p.herd() : detail::exit_abscissa(p, x0);
    if (yellow_closure) tr.s2 = detail::psi_hit_abscissa(p, x0);
    return tr;
}

/// Partial derivatives of s1 (on B \ G) or s2 (on Y \ B).
struct TransitJacobian {
    ZoneLabel zone = ZoneLabel::BandMinusGreen;
    double value = 0.0;  // s1 or s2
    double d_ds = 0.0;
    double d_di = 0.0;
};

inline TransitJacobian transit_jacobians(const EpidemicParams& p, const State& x0) {
    const ZoneLabel z = classify(p, x0);
    const GreedyTransit tr = transit_quantities(p, x0);
    if (z == ZoneLabel::BandMinusGreen) {
        const double s1 = tr.require_s1();
        const double denom = p.beta * s1 - p.gamma;
        return {z, s1, (p.beta * x0.s - p.gamma) * s1 / (denom * x0.s), p.beta * s1 / denom};
    }
    if (z == ZoneLabel::YellowMinusBand) {
        const double s2 = tr.require_s2();
        const double k = p.beta * (1.0 - p.abar) / (p.gamma * p.abar);
        return {z, s2, k * (1.0 - p.gamma / (p.beta * x0.s)) * s2, k * s2};
    }
    throw ZoneMismatch("transit_jacobians: x0 must lie strictly inside B \\ G or Y \\ B");
}

/// Greedy feedback: minimal boundary-preserving control on the active boundary, 0 elsewhere.
inline double greedy_feedback(const EpidemicParams& p, const State& x) {
    if (!active_boundary_contains(p, x)) return 0.0;
    return std::min(std::max(1.0 - p.herd() / x.s, 0.0), p.abar);
}

// ---------------------------------------------------------------------------
// Closed-form greedy cost

namespace detail {

inline double icu_slide_cost(const EpidemicParams& p, const CostModel& c, double s1) {
    const double k = p.herd();
    if (s1 <= k) return 0.0;
    auto f = [&](double r) { return c(r, p.istar, std::clamp((r - k) / r, 0.0, p.abar)); };  // no cancellation near k
    return gauss_kronrod15(f, k, s1) / (p.gamma * p.istar);
}

inline double psi_slide_cost(const EpidemicParams& p, const CostModel& c, double s2) {
    const double k = p.herd_confined();
    if (s2 <= k) return 0.0;
    auto f = [&](double s) {
        const double i = psi_inverse(p, s);
        return c(s, i, p.abar) / (s * i);
    };
    return gauss_kronrod15(f, k, s2) / (p.beta * (1.0 - p.abar));
}

}  // namespace detail

/// Cost of the greedy policy from x0, from the three closed-form cases
/// (no ODE integration). Requires l1(., ., 0) = 0 along the unconfined flights.
inline double value_W(const EpidemicParams& p, const CostModel& c, const State& x0) {
    if (!(x0.s > 0.0 && x0.i > 0.0)) throw DomainError("value_W: requires s0 > 0 and i0 > 0");
    const ZoneLabel z = classify(p, x0);
    switch (z) {
        case ZoneLabel::Green: return 0.0;
        case ZoneLabel::BandMinusGreen:
            return detail::icu_slide_cost(p, c, transit_quantities(p, x0).require_s1());
        case ZoneLabel::YellowMinusBand: {
            const double s2 = transit_quantities(p, x0).require_s2();
            return detail::psi_slide_cost(p, c, s2) + detail::icu_slide_cost(p, c, p.herd_confined());
        }
        default: throw ZoneMismatch("value_W: x0 outside the yellow zone");
    }
}

struct Gradient {
    double ds = 0.0;
    double di = 0.0;
};

/// True off the null curves phi, phi^{gamma/(beta(1-abar))} and the two corners on i = i*.
inline bool is_differentiability_point(const EpidemicParams& p, const State& x) {
    if (!(x.i > 0.0 && x.i <= p.istar)) return false;
    if (std::fabs(x.s - phi(p, x.i)) <= kCurveTolerance) return false;
    if (std::fabs(x.s - band_curve(p, x.i)) <= kCurveTolerance) return false;
    if (std::fabs(x.i - p.istar) <= kCurveTolerance &&
        (std::fabs(x.s - p.herd()) <= kCurveTolerance || std::fabs(x.s - p.herd_confined()) <= kCurveTolerance))
        return false;
    return true;
}

inline Gradient value_gradient(const EpidemicParams& p, const CostModel& c, const State& x0) {
    if (!is_differentiability_point(p, x0)) throw NotDifferentiable("value_gradient: W is not differentiable at x0");
    const ZoneLabel z = classify(p, x0);
    double weight = 0.0;
    switch (z) {
        case ZoneLabel::Green: return {0.0, 0.0};
        case ZoneLabel::BandMinusGreen: {
            const double s1 = transit_quantities(p, x0).require_s1();
            weight = normalized_cost(c, p, s1, p.istar, 1.0 - p.herd() / s1);
            break;
        }
        case ZoneLabel::YellowMinusBand: {
            const double s2 = transit_quantities(p, x0).require_s2();
            weight = normalized_cost(c, p, s2, psi_inverse(p, s2), p.abar);
            break;
        }
        default: throw ZoneMismatch("value_gradient: x0 outside the yellow zone");
    }
    return {weight * (p.beta * x0.s - p.gamma) / (p.beta * x0.s), weight};
}

struct HjResidual {
    double max_residual = 0.0;
    double argmax_a = 0.0;
    std::size_t argmax_index = 0;
};

/// max over a in {0, abar/n, ..., abar} of
///   -l1(x0,a) 1{s0 >= phi(i0)} + dW/ds beta(1-a) s0 i0 - dW/di (beta(1-a) s0 - gamma) i0.
inline HjResidual hj_residual(const EpidemicParams& p, const CostModel& c, const State& x0, std::size_t n = 64) {
    const Gradient g = value_gradient(p, c, x0);
    const bool outside_green = x0.s >= phi(p, std::min(x0.i, p.istar));
    std::vector<double> r(n + 1);
    double scale = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double a = p.abar * double(k) / double(n);
        const double contact = p.beta * (1.0 - a) * x0.s;
        const double run = outside_green ? c(x0.s, x0.i, a) : 0.0;
        const double flow_s = g.ds * contact * x0.i, flow_i = g.di * (contact - p.gamma) * x0.i;
        r[k] = -run + flow_s - flow_i;
        scale = std::max({scale, std::fabs(run), std::fabs(flow_s), std::fabs(flow_i)});
    }
    // ties at rounding level go to the smallest control
    const double best = *std::max_element(r.begin(), r.end());
    const double tie = 64.0 * std::numeric_limits<double>::epsilon() * scale;
    HjResidual out{best, 0.0, 0};
    for (std::size_t k = 0; k <= n; ++k)
        if (r[k] >= best - tie) {
            out.argmax_a = p.abar * double(k) / double(n);
            out.argmax_index = k;
            break;
        }
    return out;
}

// ---------------------------------------------------------------------------
// Greedy trajectory synthesis

struct GreedyOptions {
    double horizon = 5000.0;
    double step = 1e-3;
    bool stop_at_green = true;
};

struct GreedyResult {
    Trajectory trajectory;
    double cost = 0.0;
    std::optional<double> tau_green;
};

namespace detail {

/// Non-negative exactly when s <= phi(i) (for i <= i*), root-free.
inline double green_indicator(const EpidemicParams& p, const State& x) {
    const double k = p.herd();
    if (x.s < k) return (p.istar - x.i) + (k - x.s);
    return (-x.s + k * std::log(x.s)) - (x.i - p.istar + k * std::log(k) - k);
}

/// Non-negative exactly when s >= psi(i) (for i <= i*), root-free.
inline double yellow_exit_indicator(const EpidemicParams& p, const State& x) {
    const double k = p.herd_confined();
    if (x.s < k) return (x.i - p.istar) - (k - x.s);
    return (x.i - p.istar + k * std::log(k) - k) - (-x.s + k * std::log(x.s));
}

inline void append_segment(Trajectory& out, const Trajectory& seg, double t0) {
    for (std::size_t k = 0; k < seg.samples.size(); ++k) {
        Sample smp = seg.samples[k];
        smp.t += t0;
        if (k == 0 && !out.samples.empty()) {
            // the join sample carries the control of the segment it opens
            out.samples.back().a = smp.a;
            out.samples.back().law = smp.law;
            continue;
        }
        out.samples.push_back(smp);
    }
}

/// Closed-form slide s(t) = s1 - gamma i* t along i = i* down to gamma/beta.
inline Trajectory icu_slide(const EpidemicParams& p, double s1, double step, double max_time) {
    Trajectory seg;
    const double rate = p.gamma * p.istar;
    const double duration = std::max(0.0, (s1 - p.herd()) / rate);
    const double end = std::min(duration, max_time);
    const std::size_t n = static_cast<std::size_t>(std::ceil(end / step));
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = k == n ? end : double(k) * step;
        const double s = k == n && end == duration ? p.herd() : s1 - rate * t;
        seg.samples.push_back({t, s, p.istar, boundary_feedback(p, s), ControlLaw::BoundaryFeedback});
        if (k == n) break;
    }
    seg.terminal_event = end == duration ? TerminalEvent::HitGreen : TerminalEvent::HorizonReached;
    return seg;
}

}  // namespace detail

/// Segment-wise greedy trajectory: unconfined flight, slide along psi with
/// a = abar, slide along i = i* with a = 1 - gamma/(beta s). The running cost
/// is accumulated by adaptive Simpson over the dense reconstruction.
inline GreedyResult greedy_simulate(const EpidemicParams& p, const State& x0, const CostModel& c,
                                    const GreedyOptions& opt = {}) {
    if (!in_yellow(p, x0)) throw ZoneMismatch("greedy_simulate: x0 outside the yellow zone");
    GreedyResult res;
    Trajectory& tr = res.trajectory;
    State x = x0;
    double t = 0.0;
    const double k_conf = p.herd_confined();

    auto finish = [&](TerminalEvent e) { tr.terminal_event = e; };
    auto remaining = [&] { return opt.horizon - t; };

    if (classify(p, x0) == ZoneLabel::Green) {
        res.tau_green = 0.0;
        if (opt.stop_at_green) {
            tr.samples.push_back({0.0, x0.s, x0.i, greedy_feedback(p, x0), ControlLaw::Held});
            finish(TerminalEvent::HitGreen);
            return res;
        }
    }

    const EventPredicate green{[&p](const State& y) { return detail::green_indicator(p, y); }, TerminalEvent::HitGreen};
    const EventPredicate icu{[&p](const State& y) { return y.i - p.istar; }, TerminalEvent::HitBoundary};
    const EventPredicate yellow{[&p](const State& y) { return detail::yellow_exit_indicator(p, y); },
                                TerminalEvent::HitBoundary};

    for (int guard = 0; guard < 8 && remaining() > 0.0; ++guard) {
        const bool on_icu = std::fabs(x.i - p.istar) <= kCurveTolerance && x.s > p.herd() &&
                            x.s <= k_conf + kCurveTolerance;
        const bool on_psi = !on_icu && x.s > k_conf && x.i < p.istar &&
                            std::fabs(x.s - psi(p, x.i)) <= kCurveTolerance;
        if (on_icu) {
            Trajectory seg = detail::icu_slide(p, x.s, opt.step, remaining());
            detail::append_segment(tr, seg, t);
            t += seg.duration();
            x = tr.back().state();
            if (seg.terminal_event != TerminalEvent::HitGreen) break;
            if (!res.tau_green) res.tau_green = t;
            if (opt.stop_at_green) {
                finish(TerminalEvent::HitGreen);
                break;
            }
            continue;
        }
        if (on_psi) {
            // psi is tangent to i = i* at its left end, so stop on the abscissa
            const EventPredicate entry{[k_conf](const State& y) { return k_conf - y.s; }, TerminalEvent::HitBoundary};
            const EventPredicate evs[] = {entry};
            Trajectory seg = integrate(p, x, ConstantControl{p.abar}, remaining(), opt.step, evs);
            detail::append_segment(tr, seg, t);
            t += seg.duration();
            if (seg.terminal_event != TerminalEvent::HitBoundary) {
                finish(seg.terminal_event);
                x = tr.back().state();
                break;
            }
            tr.samples.back().s = k_conf;  // snap the event point onto the segment corner
            tr.samples.back().i = p.istar;
            x = tr.back().state();
            continue;
        }
        const bool green_now = classify(p, x) == ZoneLabel::Green;
        std::vector<EventPredicate> evs;
        if (!green_now) evs = {green, icu, yellow};
        Trajectory seg = integrate(p, x, ConstantControl{0.0}, remaining(), opt.step, evs);
        detail::append_segment(tr, seg, t);
        t += seg.duration();
        x = tr.back().state();
        if (seg.terminal_event == TerminalEvent::HitGreen) {
            if (!res.tau_green) res.tau_green = t;
            if (opt.stop_at_green) {
                finish(TerminalEvent::HitGreen);
                break;
            }
            continue;
        }
        if (seg.terminal_event != TerminalEvent::HitBoundary) {
            finish(seg.terminal_event);
            break;
        }
        if (std::fabs(x.i - p.istar) <= 1e-8) {
            tr.samples.back().i = p.istar;
            x.i = p.istar;
        }
    }
    if (tr.samples.empty()) tr.samples.push_back({0.0, x0.s, x0.i, 0.0, ControlLaw::Held});
    if (remaining() <= 0.0 && tr.terminal_event != TerminalEvent::HitGreen) finish(TerminalEvent::HorizonReached);

    // Running cost, interval by interval so the integrand is smooth on each piece.
    const auto& sm = tr.samples;
    for (std::size_t k = 0; k + 1 < sm.size(); ++k) {
        const Sample& base = sm[k];
        const double h = sm[k + 1].t - base.t;
        if (h <= 0.0) continue;
        auto f = [&](double tau) {
            const State y = detail::rk4_step(p, base.state(), base.a, base.law, tau);
            const double a = base.law == ControlLaw::BoundaryFeedback ? detail::boundary_feedback(p, y.s) : base.a;
            return c(y.s, y.i, a);
        };
        res.cost += adaptive_simpson(f, 0.0, h, 1e-10 * h);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Sufficient (and necessary) optimality condition on the normalized cost

struct GenCondReport {
    std::size_t checked = 0;
    std::size_t violations = 0;
    double worst_margin = INFINITY;
    State worst_point{NAN, NAN};
    ZoneLabel worst_zone = ZoneLabel::Green;

    [[nodiscard]] bool holds() const { return violations == 0; }
};

/// Margin min_a l~(x0, a) - l~(transit point) at x0; negative means violated.
inline double gencond_margin(const EpidemicParams& p, const CostModel& c, const State& x0, std::size_t na = 64) {
    const ZoneLabel z = classify(p, x0);
    const GreedyTransit tr = transit_quantities(p, x0);
    double lhs = 0.0;
    if (z == ZoneLabel::BandMinusGreen) {
        const double s1 = tr.require_s1();
        lhs = normalized_cost(c, p, s1, p.istar, 1.0 - p.herd() / s1);
    } else if (z == ZoneLabel::YellowMinusBand) {
        const double s2 = tr.require_s2();
        lhs = normalized_cost(c, p, s2, psi_inverse(p, s2), p.abar);
    } else {
        throw ZoneMismatch("gencond_margin: x0 must lie in B \\ G or Y \\ B");
    }
    double rhs = INFINITY;
    for (std::size_t k = 1; k <= na; ++k) rhs = std::min(rhs, normalized_cost(c, p, x0.s, x0.i, p.abar * double(k) / double(na)));
    return rhs - lhs;
}

inline GenCondReport check_gencond(const CostModel& c, const EpidemicParams& p, const GridSpec& g = {200, 200, 64}) {
    GenCondReport rep;
    const double s_hi = psi_at_zero(p), lo = 1e-6;
    for (std::size_t ks = 0; ks < g.ns; ++ks) {
        const double s = detail::grid_point(lo, s_hi, ks, g.ns);
        for (std::size_t ki = 0; ki < g.ni; ++ki) {
            const double i = detail::grid_point(lo, p.istar, ki, g.ni);
            const State x{s, i};
            const ZoneLabel z = classify(p, x);
            if (z != ZoneLabel::BandMinusGreen && z != ZoneLabel::YellowMinusBand) continue;
            // the exit control 1 - gamma/(beta s1) vanishes on the green edge
            if (z == ZoneLabel::BandMinusGreen && std::fabs(s - phi(p, i)) <= kCurveTolerance) continue;
            const double m = gencond_margin(p, c, x, g.na);
            ++rep.checked;
            if (m < -1e-9) ++rep.violations;
            if (m < rep.worst_margin) {
                rep.worst_margin = m;
                rep.worst_point = x;
                rep.worst_zone = z;
            }
        }
    }
    return rep;
}

}  // namespace sirctl
