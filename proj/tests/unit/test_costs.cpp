// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "sirctl/costs.hpp"
#include "sirctl/policy.hpp"

namespace sirctl {
namespace {

const EpidemicParams kP = example1_params();
const GridSpec kGrid{60, 60, 11};

CostModel si_cost() {
    return multiplicative_cost([](double s, double i) { return s * i; }, "s*i");
}

TEST(Builtins, Evaluate) {
    EXPECT_DOUBLE_EQ(affine_cost(2.0)(0.3, 0.02, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(power_cost(3.0, 0.5)(0.3, 0.04, 0.5), 3.0 * 0.2 * 0.5);
    EXPECT_DOUBLE_EQ(si_cost()(0.5, 0.02, 0.4), 0.5 * 0.02 * 0.4);
    EXPECT_DOUBLE_EQ(zero_cost()(0.5, 0.02, 0.4), 0.0);
    EXPECT_THROW(power_cost(1.0, 1.5), DomainError);
}

TEST(Builtins, StateCostIgnoresControl) {
    const CostModel c = state_cost([](double s, double i) { return s + i; }, "sum");
    EXPECT_TRUE(c.meta.control_independent);
    EXPECT_EQ(c(0.2, 0.1, 0.0), c(0.2, 0.1, 0.6));
}

TEST(NormalizedCost, MultiplicativeIsControlFree) {
    const CostModel c = si_cost();
    for (double a : {0.05, 0.3, 0.6}) EXPECT_NEAR(normalized_cost(c, kP, 0.4, 0.03, a), 0.4 * 0.03 / (kP.gamma * 0.03), 1e-14);
    EXPECT_THROW(normalized_cost(c, kP, 0.4, 0.0, 0.3), DomainError);
    EXPECT_THROW(normalized_cost(c, kP, 0.4, 0.03, 0.0), DomainError);
}

TEST(Assumptions, AffinePassesWeakFormOnly) {
    const AssumptionReport r = check_assumptions(affine_cost(1.0), kP, kGrid);
    EXPECT_TRUE(r.standing_assumptions());
    EXPECT_TRUE(r.monotone_in_a.passed());
    EXPECT_TRUE(r.zero_control_zero_on_green.passed());
    EXPECT_FALSE(r.zero_on_green.passed());
}

TEST(Assumptions, ProductCostPassesShapeConditions) {
    const AssumptionReport r = check_assumptions(si_cost(), kP, kGrid);
    EXPECT_TRUE(r.standing_assumptions());
    EXPECT_TRUE(r.lambda_nondecreasing_in_s.passed());
    EXPECT_TRUE(r.lambda_over_i_nonincreasing.passed());
    EXPECT_TRUE(r.convex_in_a.passed());
}

TEST(Assumptions, QuadraticInfectionWeightIsFlagged) {
    const CostModel c = multiplicative_cost([](double s, double i) { return s * i * i; }, "s*i^2");
    const AssumptionReport r = check_assumptions(c, kP, kGrid);
    EXPECT_FALSE(r.lambda_over_i_nonincreasing.passed());
    EXPECT_GT(r.lambda_over_i_nonincreasing.violations, 0u);
    EXPECT_TRUE(r.lambda_nondecreasing_in_s.passed());
}

TEST(Assumptions, NegativeCostAndDecreasingInControl) {
    const CostModel c{[](double, double, double a) { return -a; }, {"neg", 0.0, true, false, false}};
    const AssumptionReport r = check_assumptions(c, kP, kGrid);
    EXPECT_FALSE(r.nonnegative.passed());
    EXPECT_FALSE(r.monotone_in_a.passed());
}

TEST(Assumptions, JumpInControlIsFlagged) {
    const CostModel c{[](double, double, double a) { return a > 0.3 ? 1.0 : 0.0; }, {"step", 0.0, false, false, false}};
    const AssumptionReport r = check_assumptions(c, kP, kGrid);
    EXPECT_FALSE(r.continuous_in_a.passed());
}

TEST(Assumptions, PositiveOffGreenAtZeroInfection) {
    const CostModel c = state_cost([](double s, double) { return s; }, "s");
    EXPECT_TRUE(check_assumptions(c, kP, kGrid).positive_at_zero_infection_off_green.passed());
    EXPECT_FALSE(check_assumptions(si_cost(), kP, kGrid).positive_at_zero_infection_off_green.passed());
}

TEST(GenCond, HoldsForAdmissibleMultiplicative) {
    const GridSpec g{80, 80, 32};
    EXPECT_TRUE(check_gencond(si_cost(), kP, g).holds());
    EXPECT_TRUE(check_gencond(affine_cost(1.0), kP, g).holds());
    EXPECT_TRUE(check_gencond(power_cost(1.0, 0.5), kP, g).holds());
    EXPECT_GE(check_gencond(si_cost(), kP, g).worst_margin, -1e-9);
}

TEST(GenCond, ConstructedViolationIsDetected) {
    const CostModel c = multiplicative_cost([](double s, double i) { return std::exp(s) * i * i; }, "exp(s) i^2");
    const GenCondReport r = check_gencond(c, kP, {80, 80, 32});
    ASSERT_FALSE(r.holds());
    // both sides evaluated directly at the reported point
    const State x = r.worst_point;
    const GreedyTransit t = transit_quantities(kP, x);
    double lhs = 0.0;
    if (r.worst_zone == ZoneLabel::BandMinusGreen)
        lhs = std::exp(*t.s1) * kP.istar / kP.gamma;
    else
        lhs = std::exp(*t.s2) * psi_inverse(kP, *t.s2) / kP.gamma;
    const double rhs = std::exp(x.s) * x.i / kP.gamma;
    EXPECT_LT(rhs, lhs);
    EXPECT_NEAR(rhs - lhs, r.worst_margin, 1e-12);
}

TEST(SubHomogeneity, ConcavePowerWeights) {
    for (double eta : {0.0, 0.3, 0.7, 1.0})
        for (double alpha : {1.0, 1.5, 3.0})
            for (double i : {0.005, 0.02}) {
                const double lam = std::pow(i, eta), lam_scaled = std::pow(alpha * i, eta);
                EXPECT_LE(lam_scaled, alpha * lam + 1e-15);
            }
}

TEST(TableCost, MultilinearInterpolationAndClamping) {
    std::stringstream csv;
    csv << "s,i,a,l1\n";
    for (double s : {0.0, 1.0})
        for (double i : {0.0, 0.1})
            for (double a : {0.0, 0.6}) csv << s << ',' << i << ',' << a << ',' << (s + 10 * i + a) << '\n';
    const CostModel c = table_cost(TableCost::from_csv(csv));
    EXPECT_NEAR(c(0.5, 0.05, 0.3), 0.5 + 0.5 + 0.3, 1e-14);
    EXPECT_NEAR(c(2.0, 0.05, 0.3), 1.0 + 0.5 + 0.3, 1e-14);
    EXPECT_FALSE(c.meta.control_independent);
}

TEST(TableCost, RejectsIncompleteGrid) {
    std::stringstream csv("s,i,a,l1\n0,0,0,1\n1,0,0,2\n0,1,0,3\n");
    EXPECT_THROW(TableCost::from_csv(csv), DomainError);
}

TEST(TableCost, SingleControlLevelIsControlIndependent) {
    std::stringstream csv("s,i,a,l1\n0,0,0,0\n1,0,0,1\n0,1,0,2\n1,1,0,3\n");
    const CostModel c = table_cost(TableCost::from_csv(csv));
    EXPECT_TRUE(c.meta.control_independent);
    EXPECT_NEAR(c(0.5, 0.5, 0.4), 1.5, 1e-14);
}

}  // namespace
}  // namespace sirctl
