// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace sirctl {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class NoRootError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ZoneMismatch : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NotDifferentiable : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Rates of the controlled SIR model plus the ICU cap and the discount.
///
/// beta, gamma and q are in 1/time; abar and istar are proportions.
struct EpidemicParams {
    double beta = 1.0 / 3.0;
    double gamma = 1.0 / 14.0;
    double abar = 0.6;
    double istar = 0.056;
    double q = 0.0;

    /// gamma/beta: the peak abscissa with no confinement.
    [[nodiscard]] double herd() const { return gamma / beta; }
    /// gamma/(beta(1-abar)): the peak abscissa under full confinement.
    [[nodiscard]] double herd_confined() const { return gamma / (beta * (1.0 - abar)); }
    /// gamma/(beta(1-a)) for a constant control a.
    [[nodiscard]] double herd_at(double a) const { return gamma / (beta * (1.0 - a)); }

    /// Throws DomainError naming the first violated field.
    void validate() const {
        if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta: must be positive");
        if (!(abar > 0.0 && abar < 1.0)) throw DomainError("abar: must lie in (0,1)");
        if (!(gamma > 0.0)) throw DomainError("gamma: must be positive");
        if (!(gamma < beta * (1.0 - abar)))
            throw DomainError("gamma: consistency 0 < gamma < beta(1-abar) violated");
        if (!(istar > 0.0 && istar < 1.0)) throw DomainError("istar: must lie in (0,1)");
        if (!(q >= 0.0) || !std::isfinite(q)) throw DomainError("q: must be non-negative");
    }
};

/// The parameter set of the French lockdown illustration (N = 67M).
inline EpidemicParams example1_params() { return EpidemicParams{}; }

/// Point (s, i) of the unit triangle. The removed share is 1 - s - i.
struct State {
    double s = 0.0;
    double i = 0.0;

    [[nodiscard]] double removed() const { return 1.0 - s - i; }
    [[nodiscard]] bool in_simplex(double tol = 0.0) const {
        return s >= -tol && i >= -tol && s + i <= 1.0 + tol;
    }
    friend bool operator==(const State&, const State&) = default;
};

}  // namespace sirctl
