// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "oracles/sir_ode.hpp"
#include "sirctl/zones.hpp"

namespace sirctl {
namespace {

const EpidemicParams kP = example1_params();
const oracle::Sir kSir{kP.beta, kP.gamma};

double grid_i(int k, int n) { return kP.istar * (double(k + 1) / double(n)); }

TEST(Phi, ValueAtIcuLevelIsHerdThreshold) {
    EXPECT_NEAR(phi(kP, kP.istar), kP.herd(), 1e-12);
    EXPECT_NEAR(phi(kP, kP.istar), 3.0 / 14.0, 1e-12);
}

TEST(Phi, LimitAtZeroInfection) { EXPECT_NEAR(phi_at_zero(kP), 0.4085819, 1e-5); }

TEST(Psi, ValueAtIcuLevel) { EXPECT_NEAR(psi(kP, kP.istar), 15.0 / 28.0, 1e-12); }

TEST(Psi, LimitAtZeroInfection) { EXPECT_NEAR(psi_at_zero(kP), 0.8193351, 1e-5); }

TEST(Curves, RejectLevelsOutsideRange) {
    EXPECT_THROW(phi(kP, 0.0), DomainError);
    EXPECT_THROW(psi(kP, kP.istar * 1.01), DomainError);
    EXPECT_THROW(psi_tilde(kP, -0.01), DomainError);
    EXPECT_THROW(phi_sbar(kP, 0.1, 0.01), DomainError);
}

TEST(Curves, DefiningEquationsHoldToRoundoff) {
    const ZoneCurve curves[] = {{CurveKind::Green, kP},
                                {CurveKind::Yellow, kP},
                                {CurveKind::BGeneral, kP, 0.35},
                                {CurveKind::BGeneral, kP, kP.herd_confined()},
                                {CurveKind::PsiTilde, kP}};
    for (const auto& c : curves)
        for (int k = 0; k < 50; ++k) {
            const double i = grid_i(k, 50);
            EXPECT_LT(std::fabs(c.residual(i, c(i))), 1e-12) << "kind " << int(c.kind) << " i " << i;
        }
}

TEST(Curves, BranchesAndNesting) {
    for (int k = 0; k < 100; ++k) {
        const double i = grid_i(k, 100);
        const double g = phi(kP, i), b = band_curve(kP, i), y = psi(kP, i), t = psi_tilde(kP, i);
        EXPECT_GE(g, kP.herd());
        EXPECT_GE(y, kP.herd_confined());
        EXPECT_LE(g, b + 1e-15);
        EXPECT_LE(b, y + 1e-15);
        EXPECT_LE(t, kP.herd() + 1e-15);
        EXPECT_LT(y, 1.0 + kP.herd_confined());
    }
}

TEST(PhiSbar, HerdThresholdReproducesGreenEdge) {
    for (int k = 0; k < 30; ++k) {
        const double i = grid_i(k, 30);
        EXPECT_NEAR(phi_sbar(kP, kP.herd(), i), phi(kP, i), 1e-12);
    }
}

TEST(PhiSbar, PassesThroughAnchor) {
    EXPECT_NEAR(phi_sbar(kP, kP.herd_confined(), kP.istar), kP.herd_confined(), 1e-15);
}

TEST(PhiSbar, MatchesBackwardUnconfinedFlow) {
    const double s = oracle::s_at_level(kSir, kP.herd_confined(), kP.istar, 0.0, -1.0, 0.02);
    EXPECT_NEAR(band_curve(kP, 0.02), s, 1e-9);
}

TEST(PhiSbar, BackwardFlowTracesCurve) {
    double s = kP.herd_confined(), i = kP.istar;
    double worst = 0.0;
    for (int k = 0; k < 20000 && i > 1e-3; ++k) {
        oracle::rk4(kSir, s, i, 0.0, 1e-3, -1.0);
        worst = std::max(worst, std::fabs(s - band_curve(kP, i)));
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(PsiTilde, AnchorAndOrbit) {
    EXPECT_NEAR(psi_tilde(kP, kP.istar), kP.herd(), 1e-15);
    // same orbit of the fully confined flow, run forward from the anchor
    const double s = oracle::s_at_level(kSir, kP.herd(), kP.istar, kP.abar, 1.0, 0.02);
    EXPECT_NEAR(psi_tilde(kP, 0.02), s, 1e-9);
}

TEST(PsiTilde, DerivativeIsPositiveAndMatchesDifferences) {
    for (int k = 0; k < 50; ++k) {
        const double i = 0.001 + (kP.istar - 0.002) * k / 49.0;
        const double d = psi_tilde_derivative(kP, i);
        EXPECT_GT(d, 0.0);
        const double fd = oracle::central([](double x) { return psi_tilde(kP, x); }, i, 1e-6);
        EXPECT_NEAR(d, fd, 1e-5 * (1.0 + std::fabs(d)));
    }
}

TEST(Classify, ReferencePoints) {
    EXPECT_LT(0.2, phi(kP, 0.03));
    EXPECT_EQ(classify(kP, {0.2, 0.03}), ZoneLabel::Green);
    EXPECT_EQ(classify(kP, {0.9, 0.01}), ZoneLabel::Infeasible);
    EXPECT_EQ(classify(kP, {0.5, 0.6}), ZoneLabel::OutsideSimplex);
    EXPECT_EQ(classify(kP, {0.4, 0.03}), ZoneLabel::BandMinusGreen);
    EXPECT_EQ(classify(kP, {0.7, 0.01}), ZoneLabel::YellowMinusBand);
    EXPECT_EQ(classify(kP, {0.3, 0.06}), ZoneLabel::Infeasible);
}

TEST(Classify, TiesGoInward) {
    const double i = 0.03;
    EXPECT_EQ(classify(kP, {phi(kP, i), i}), ZoneLabel::Green);
    EXPECT_EQ(classify(kP, {band_curve(kP, i), i}), ZoneLabel::BandMinusGreen);
    EXPECT_EQ(classify(kP, {psi(kP, i), i}), ZoneLabel::YellowMinusBand);
    EXPECT_EQ(classify(kP, {psi(kP, i) + 1e-9, i}), ZoneLabel::Infeasible);
}

TEST(Classify, ZeroInfectionUsesLimit) {
    EXPECT_EQ(classify(kP, {0.40, 0.0}), ZoneLabel::Green);
    EXPECT_EQ(classify(kP, {0.81, 0.0}), ZoneLabel::YellowMinusBand);
    EXPECT_EQ(classify(kP, {0.83, 0.0}), ZoneLabel::Infeasible);
}

TEST(Classify, NestingOfSets) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> us(0.0, 1.0), ui(0.0, 0.07);
    for (int k = 0; k < 2000; ++k) {
        const State x{us(rng), ui(rng)};
        const ZoneLabel z = classify(kP, x);
        if (z == ZoneLabel::Green) {
            EXPECT_TRUE(in_band(kP, x));
        }
        if (in_band(kP, x)) {
            EXPECT_TRUE(in_yellow(kP, x));
        }
    }
}

TEST(ActiveBoundary, ReferencePoints) {
    EXPECT_TRUE(active_boundary_contains(kP, {kP.herd(), kP.istar}));
    EXPECT_TRUE(active_boundary_contains(kP, {psi(kP, 0.03), 0.03}));
    EXPECT_FALSE(active_boundary_contains(kP, {0.1, kP.istar}));
    EXPECT_FALSE(active_boundary_contains(kP, {0.4, 0.03}));
}

TEST(BackwardInvariantSet, ExcludesIcuSegment) {
    EXPECT_FALSE(in_backward_invariant_set(kP, {0.3, kP.istar}));
    EXPECT_TRUE(in_backward_invariant_set(kP, {0.1, kP.istar}));
    EXPECT_TRUE(in_backward_invariant_set(kP, {0.3, 0.02}));
}

TEST(NormalProduct, SegmentCase) {
    const double sbar = 0.4, s = 0.3;
    EXPECT_NEAR(boundary_normal_product(kP, sbar, {s, kP.istar}),
                (kP.beta * (1 - kP.abar) * s - kP.gamma) * kP.istar, 1e-15);
}

TEST(NormalProduct, CurveCaseMatchesDifferenceNormal) {
    const double sbar = kP.herd_confined(), i = 0.03;
    const double x = phi_sbar(kP, sbar, i);
    const double slope = oracle::central([&](double y) { return phi_sbar(kP, sbar, y); }, i, 1e-6);
    const double n = std::hypot(1.0, slope);
    const double b = kP.beta * (1 - kP.abar);
    const double expect = (-b * x * i) / n + (-slope / n) * (b * x - kP.gamma) * i;
    EXPECT_NEAR(boundary_normal_product(kP, sbar, {x, i}), expect, 1e-8);
}

TEST(NormalProduct, SingularCornerThrows) {
    EXPECT_THROW(boundary_normal_product(kP, 0.4, {0.4, kP.istar}), SingularCorner);
}

TEST(NormalProduct, NeverPositive) {
    for (double sbar : {kP.herd() + 1e-3, 0.3, 0.4, kP.herd_confined()}) {
        for (int k = 0; k < 25; ++k) {
            const double i = grid_i(k, 26);
            EXPECT_LE(boundary_normal_product(kP, sbar, {phi_sbar(kP, sbar, i), i}), 0.0);
            const double s = sbar * (k + 0.5) / 26.0;
            EXPECT_LE(boundary_normal_product(kP, sbar, {s, kP.istar}), 0.0);
        }
    }
}

TEST(CurveTable, InterpolatesWithinPlotAccuracy) {
    const CurveTable t(ZoneCurve{CurveKind::Yellow, kP});
    for (int k = 0; k < 40; ++k) {
        const double i = 1e-4 + (kP.istar - 1e-4) * k / 39.0;
        EXPECT_NEAR(t(i), psi(kP, i), 1e-4);  // sqrt-type edge at i*
    }
}

TEST(Zones, FasterContactShrinksZones) {
    EpidemicParams q = kP;
    q.beta = 1.01;
    EXPECT_LT(phi(q, q.istar), phi(kP, kP.istar));
    EXPECT_LT(phi_at_zero(q), phi_at_zero(kP));
    EXPECT_LT(psi(q, q.istar), psi(kP, kP.istar));
    EXPECT_LT(psi_at_zero(q), psi_at_zero(kP));
}

}  // namespace
}  // namespace sirctl
