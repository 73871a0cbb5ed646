// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace sirctl {

namespace detail {

template <class F>
double simpson_recurse(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                       int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson with Richardson correction; tol is absolute.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-10, int max_depth = 48) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_recurse(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Adaptive 15-point Gauss-Kronrod to a relative tolerance. The depth cap
/// bounds the work when rounding keeps the error estimate above tolerance.
template <class F>
double gauss_kronrod15(F&& f, double a, double b, double rel_tol = 1e-10, unsigned max_depth = 15) {
    if (a == b) return 0.0;
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, rel_tol, &err);
}

}  // namespace sirctl
