// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles/sir_ode.hpp"
#include "sirctl/dynamics.hpp"

namespace sirctl {
namespace {

const EpidemicParams kP = example1_params();

TEST(VectorField, DirectArithmetic) {
    const Velocity v = vector_field(kP, {0.3, 0.05}, 0.0);
    EXPECT_NEAR(v.ds, -0.005, 1e-15);
    EXPECT_NEAR(v.di, 0.005 - 0.05 / 14.0, 1e-15);
}

TEST(VectorField, ZeroInfectionIsEquilibrium) {
    for (double a : {0.0, 0.3, 0.6}) {
        const Velocity v = vector_field(kP, {0.7, 0.0}, a);
        EXPECT_EQ(v.ds, 0.0);
        EXPECT_EQ(v.di, 0.0);
    }
}

TEST(VectorField, PeakAtHerdThreshold) {
    for (double a : {0.0, 0.25, 0.6}) EXPECT_NEAR(vector_field(kP, {kP.herd_at(a), 0.04}, a).di, 0.0, 1e-16);
}

TEST(VectorField, RejectsControlOutsideRange) {
    EXPECT_THROW(vector_field(kP, {0.3, 0.05}, 0.7), DomainError);
    EXPECT_THROW(vector_field(kP, {0.3, 0.05}, -0.1), DomainError);
}

TEST(Invariant, ValueAtUnitSusceptible) { EXPECT_DOUBLE_EQ(constant_control_invariant(kP, 0.0, {1.0, 0.0}), 1.0); }

TEST(Invariant, RejectsNonPositiveS) { EXPECT_THROW(constant_control_invariant(kP, 0.0, {0.0, 0.1}), DomainError); }

TEST(Invariant, ConservedAlongConstantControl) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        const double s = 0.05 + 0.9 * u(rng), i = (1.0 - s) * 0.5 * u(rng) + 1e-4, a = kP.abar * u(rng);
        const Trajectory tr = integrate(kP, {s, i}, ConstantControl{a}, 50.0, 1e-3);
        const double h0 = constant_control_invariant(kP, a, {s, i});
        double drift = 0.0;
        for (const auto& smp : tr.samples)
            drift = std::max(drift, std::fabs(constant_control_invariant(kP, a, smp.state()) - h0));
        EXPECT_LT(drift, 1e-8);
    }
}

TEST(Integrate, ZeroInfectionStaysConstant) {
    const Trajectory tr = integrate(kP, {0.5, 0.0}, ConstantControl{0.3}, 10.0, 1e-2);
    for (const auto& smp : tr.samples) {
        EXPECT_EQ(smp.i, 0.0);
        EXPECT_EQ(smp.s, 0.5);
    }
}

TEST(Integrate, IcuEventMatchesScalarRoot) {
    const State x0{0.3, 0.05};
    const EventPredicate ev{[](const State& x) { return x.i - kP.istar; }, TerminalEvent::HitBoundary};
    const Trajectory tr = integrate(kP, x0, ConstantControl{0.0}, 200.0, 1e-3, std::span(&ev, 1));
    ASSERT_EQ(tr.terminal_event, TerminalEvent::HitBoundary);
    const double c = kP.herd();
    const double s1 = oracle::bisect(
        [&](double s) { return s - x0.s - x0.i + kP.istar - c * std::log(s / x0.s); }, c, x0.s);
    EXPECT_NEAR(tr.back().s, s1, 1e-9);
    EXPECT_NEAR(tr.back().i, kP.istar, 1e-9);
}

TEST(Integrate, SIsNonIncreasingAndStaysInSimplex) {
    PiecewiseConstant pc{{{0.0, 0.0}, {3.0, 0.6}, {7.0, 0.2}}};
    const Trajectory tr = integrate(kP, {0.8, 0.15}, pc, 40.0, 1e-3);
    for (std::size_t k = 1; k < tr.samples.size(); ++k) {
        EXPECT_LE(tr.samples[k].s, tr.samples[k - 1].s + 1e-15);
        EXPECT_GT(tr.samples[k].t, tr.samples[k - 1].t);
        EXPECT_LE(tr.samples[k].s + tr.samples[k].i, 1.0 + 1e-8);
        EXPECT_GE(tr.samples[k].i, -1e-8);
    }
}

TEST(Integrate, InfectionFallsBelowThreshold) {
    const double a = 0.3;
    const Trajectory tr = integrate(kP, {0.9 * kP.herd_at(a), 0.05}, ConstantControl{a}, 20.0, 1e-3);
    for (std::size_t k = 1; k < tr.samples.size(); ++k) EXPECT_LT(tr.samples[k].i, tr.samples[k - 1].i);
}

TEST(Integrate, PiecewiseSwitchesAreExact) {
    PiecewiseConstant pc{{{0.0, 0.1}, {0.55555, 0.5}}};
    const Trajectory tr = integrate(kP, {0.6, 0.02}, pc, 2.0, 0.1);
    bool found = false;
    for (const auto& smp : tr.samples) found = found || std::fabs(smp.t - 0.55555) < 1e-12;
    EXPECT_TRUE(found);
    EXPECT_DOUBLE_EQ(control_at(kP, tr, 0.3), 0.1);
    EXPECT_DOUBLE_EQ(control_at(kP, tr, 1.0), 0.5);
}

TEST(Integrate, BackwardThenForwardReturnsToStart) {
    const State x0{0.4, 0.03};
    const Trajectory back = integrate(kP, x0, ConstantControl{0.6}, 5.0, 1e-3, {}, TimeDirection::Backward);
    const Trajectory fwd = integrate(kP, back.back().state(), ConstantControl{0.6}, 5.0, 1e-3);
    EXPECT_NEAR(fwd.back().s, x0.s, 1e-6);
    EXPECT_NEAR(fwd.back().i, x0.i, 1e-6);
}

TEST(Integrate, FeedbackIsSampledAndClamped) {
    Feedback fb{[](const State& x) { return x.i > 0.04 ? 0.6 : 0.0; }};
    const Trajectory tr = integrate(kP, {0.5, 0.045}, fb, 10.0, 1e-2);
    for (const auto& smp : tr.samples) {
        EXPECT_GE(smp.a, 0.0);
        EXPECT_LE(smp.a, kP.abar);
    }
}

TEST(Integrate, RejectsBadStep) {
    EXPECT_THROW(integrate(kP, {0.5, 0.01}, ConstantControl{0.0}, 1.0, 0.0), DomainError);
    EXPECT_THROW(integrate(kP, {0.5, 0.01}, ConstantControl{0.0}, -1.0, 0.1), DomainError);
}

TEST(Integrate, StateAtInterpolatesSamples) {
    const Trajectory tr = integrate(kP, {0.5, 0.02}, ConstantControl{0.0}, 1.0, 0.25);
    const State mid = state_at(kP, tr, 0.5);
    EXPECT_DOUBLE_EQ(mid.s, tr.samples[2].s);
}

TEST(Csv, HeaderAndPrecision) {
    const Trajectory tr = integrate(kP, {0.5, 0.02}, ConstantControl{0.0}, 0.2, 0.1);
    std::ostringstream os;
    write_csv(os, tr);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,s,i,a");
    std::getline(in, line);
    EXPECT_EQ(line, "0,0.5,0.02,0");
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 4), "0.1,");
    EXPECT_LE(line.size(), 4 + 2 * 15 + 2);
}

}  // namespace
}  // namespace sirctl
