// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "sirctl/params.hpp"

namespace sirctl {

struct RootOptions {
    double residual_target = 1e-12;
    int max_iterations = 200;
};

/// Newton iteration safeguarded by a sign-change bracket.
///
/// Newton steps that leave the current bracket, or fail to halve |f|, are
/// replaced by bisection. Throws NoRootError when f(lo) and f(hi) share a sign
/// or when the final residual misses the target.
template <class F, class DF>
double find_root(F&& f, DF&& df, double lo, double hi, const RootOptions& opt = {}) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw NoRootError("find_root: no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    // orient so that f(neg) < 0 < f(pos)
    double neg = flo < 0.0 ? lo : hi;
    double pos = flo < 0.0 ? hi : lo;

    double x = 0.5 * (lo + hi);
    double fx = f(x);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (int it = 0; it < opt.max_iterations && fx != 0.0; ++it) {
        if (fx < 0.0) neg = x;
        else pos = x;
        const double width = std::fabs(pos - neg);
        if (width <= 2.0 * eps * std::fabs(x)) break;

        const double d = df(x);
        double cand = (d != 0.0 && std::isfinite(d)) ? x - fx / d : NAN;
        const double a = std::fmin(neg, pos), b = std::fmax(neg, pos);
        bool newton_ok = std::isfinite(cand) && cand > a && cand < b;
        double fc = 0.0;
        if (newton_ok) {
            fc = f(cand);
            newton_ok = std::fabs(fc) <= 0.5 * std::fabs(fx);
        }
        if (!newton_ok) {
            cand = 0.5 * (neg + pos);
            fc = f(cand);
        }
        if (cand == x) break;
        x = cand;
        fx = fc;
    }
    if (!(std::fabs(fx) <= opt.residual_target))
        throw NoRootError("find_root: residual " + std::to_string(fx) + " above target");
    return x;
}

/// Plain bisection; used where derivatives are unavailable.
template <class F>
double bisect(F&& f, double lo, double hi, double xtol = 1e-14, int max_iterations = 400) {
    double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw NoRootError("bisect: no sign change");
    for (int it = 0; it < max_iterations && hi - lo > xtol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace sirctl
