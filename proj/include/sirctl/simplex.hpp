// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sirctl/linalg.hpp"

namespace sirctl {

class IterationLimit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LpNumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RowSense { LessEqual, Equal, GreaterEqual };
enum class ObjectiveSense { Minimize, Maximize };
enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
    }
    return "?";
}

struct LpRow {
    std::vector<double> coeffs;
    RowSense sense = RowSense::LessEqual;
    double rhs = 0.0;
};

/// Dense LP. Variable bounds default to [0, +inf); use -inf for free variables.
struct LinearProgramSpec {
    ObjectiveSense sense = ObjectiveSense::Minimize;
    std::vector<double> objective;
    std::vector<LpRow> rows;
    std::vector<double> lower;
    std::vector<double> upper;

    [[nodiscard]] std::size_t num_vars() const { return objective.size(); }
    void add_row(std::vector<double> coeffs, RowSense s, double rhs) { rows.push_back({std::move(coeffs), s, rhs}); }
};

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    double objective = NAN;
    std::vector<double> x;
    /// Row multipliers y with objective = sum_i y_i rhs_i (+ bound terms).
    std::vector<double> duals;
    std::size_t pivots = 0;
    double min_reduced_cost = 0.0;
};

struct SimplexOptions {
    std::size_t max_pivots = 1'000'000;
    double pivot_tol = 1e-10;
    double cost_tol = 1e-10;
    double certificate_tol = 1e-9;
    double feasibility_tol = 1e-9;
};

namespace detail {

/// Two-phase tableau simplex for min c'x, Ax = b, x >= 0.
/// Columns n..n+m-1 hold the artificials, so B^{-1} is always at hand.
class Tableau {
public:
    Tableau(const Matrix& A, const std::vector<double>& b, const SimplexOptions& opt)
        : m_(A.rows()), n_(A.cols()), opt_(opt), T_(A.rows(), A.cols() + A.rows() + 1), orig_(A.rows(), A.cols() + A.rows() + 1),
          basis_(A.rows()), flip_(A.rows(), 1.0), in_basis_(A.cols() + A.rows(), 0), colmax_(A.cols() + A.rows(), 1.0) {
        for (std::size_t r = 0; r < m_; ++r) {
            flip_[r] = b[r] < 0.0 ? -1.0 : 1.0;
            for (std::size_t j = 0; j < n_; ++j) orig_(r, j) = flip_[r] * A(r, j);
            orig_(r, n_ + r) = 1.0;
            orig_(r, n_ + m_) = flip_[r] * b[r];
            basis_[r] = n_ + r;
            in_basis_[n_ + r] = 1;
        }
        for (std::size_t j = 0; j < n_; ++j) {
            double mx = 0.0;
            for (std::size_t r = 0; r < m_; ++r) mx = std::max(mx, std::fabs(A(r, j)));
            colmax_[j] = std::max(mx, 1e-300);
        }
        T_ = orig_;
    }

    /// Rebuilds the tableau as B^{-1} [A | I | b] from the original data.
    void reinvert() {
        Matrix B(m_, 2 * m_);
        for (std::size_t r = 0; r < m_; ++r) {
            for (std::size_t k = 0; k < m_; ++k) B(r, k) = orig_(r, basis_[k]);
            B(r, m_ + r) = 1.0;
        }
        for (std::size_t c = 0; c < m_; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c + 1; r < m_; ++r)
                if (std::fabs(B(r, c)) > std::fabs(B(piv, c))) piv = r;
            if (std::fabs(B(piv, c)) < 1e-14) throw LpNumericalError("simplex: singular basis");
            if (piv != c)
                for (std::size_t k = 0; k < 2 * m_; ++k) std::swap(B(piv, k), B(c, k));
            const double inv = 1.0 / B(c, c);
            for (std::size_t k = 0; k < 2 * m_; ++k) B(c, k) *= inv;
            for (std::size_t r = 0; r < m_; ++r) {
                if (r == c || B(r, c) == 0.0) continue;
                const double f = B(r, c);
                for (std::size_t k = 0; k < 2 * m_; ++k) B(r, k) -= f * B(c, k);
            }
        }
        // row k of B^{-1} belongs to basis position k
        const std::size_t w = n_ + m_ + 1;
        for (std::size_t k = 0; k < m_; ++k) {
            double* out = T_.row(k);
            std::fill(out, out + w, 0.0);
            for (std::size_t r = 0; r < m_; ++r) {
                const double f = B(k, m_ + r);
                if (f == 0.0) continue;
                const double* src = orig_.row(r);
                for (std::size_t j = 0; j < w; ++j) out[j] += f * src[j];
            }
        }
        // clean up exact unit columns of the basis
        for (std::size_t k = 0; k < m_; ++k)
            for (std::size_t r = 0; r < m_; ++r) T_(r, basis_[k]) = r == k ? 1.0 : 0.0;
        for (std::size_t r = 0; r < m_; ++r)
            if (T_(r, n_ + m_) < 0.0 && T_(r, n_ + m_) > -1e-12) T_(r, n_ + m_) = 0.0;
    }

    /// Max |A x - b| of the current basic solution against the original data.
    [[nodiscard]] double primal_residual() const {
        double worst = 0.0;
        for (std::size_t r = 0; r < m_; ++r) {
            double v = -orig_(r, n_ + m_);
            for (std::size_t k = 0; k < m_; ++k) v += orig_(r, basis_[k]) * T_(k, n_ + m_);
            worst = std::max(worst, std::fabs(v));
        }
        return worst;
    }

    /// Runs one phase on the given column costs; returns false when unbounded.
    /// Dantzig pricing on scaled reduced costs, switching to Bland's rule after
    /// a run of degenerate pivots so the method cannot cycle.
    bool optimize(const std::vector<double>& cost, bool allow_artificial, std::size_t& pivots) {
        std::vector<double> d(n_ + m_);
        std::size_t degenerate_run = 0;
        for (;;) {
            reduced_costs(cost, d);
            const std::size_t cols = allow_artificial ? n_ + m_ : n_;
            const bool bland = degenerate_run >= kBlandAfter;
            std::size_t enter = npos, leave = npos;
            double enter_score = 0.0;
            bool unbounded_ray = false;
            for (std::size_t j = 0; j < cols; ++j) {
                if (!(d[j] < -opt_.cost_tol) || is_basic(j)) continue;
                const double score = d[j] / colmax_[j];
                if (!bland && enter != npos && score >= enter_score) continue;
                const std::size_t row = ratio_test(j);
                if (row == npos) {
                    bool any_positive = false;
                    for (std::size_t r = 0; r < m_ && !any_positive; ++r) any_positive = T_(r, j) > 0.0;
                    if (!any_positive) {
                        unbounded_ray = true;
                        break;
                    }
                    continue;  // only rounding-level pivots available
                }
                enter = j;
                leave = row;
                enter_score = score;
                if (bland) break;
            }
            if (unbounded_ray) return false;
            if (enter == npos) return true;
            const double step = std::max(T_(leave, n_ + m_), 0.0);
            degenerate_run = step <= 1e-14 ? degenerate_run + 1 : 0;
            pivot(leave, enter);
            if (++pivots >= opt_.max_pivots) throw IterationLimit("simplex: pivot limit reached");
            if (pivots % kReinvertEvery == 0) reinvert();
        }
    }

    /// Harris two-pass ratio test: the largest pivot among near-minimal ratios,
    /// ties broken by the lowest basic index.
    [[nodiscard]] std::size_t ratio_test(std::size_t j) const {
        const double tol = opt_.pivot_tol * colmax_[j];
        double bound = INFINITY;
        for (std::size_t r = 0; r < m_; ++r) {
            const double a = T_(r, j);
            if (a > tol) bound = std::min(bound, (std::max(T_(r, n_ + m_), 0.0) + 1e-12) / a);
        }
        if (!std::isfinite(bound)) return npos;
        std::size_t row = npos;
        double best = 0.0;
        for (std::size_t r = 0; r < m_; ++r) {
            const double a = T_(r, j);
            if (a <= tol || std::max(T_(r, n_ + m_), 0.0) / a > bound) continue;
            if (row == npos || a > best * (1.0 + 1e-12) || (a >= best * (1.0 - 1e-12) && basis_[r] < basis_[row])) {
                best = std::max(best, a);
                row = r;
            }
        }
        return row;
    }

    /// Pivots zero-level artificials out of the basis where possible.
    void drive_out_artificials(std::size_t& pivots) {
        for (std::size_t r = 0; r < m_; ++r) {
            if (basis_[r] < n_) continue;
            std::size_t best = npos;
            double mag = 0.0;
            for (std::size_t j = 0; j < n_; ++j) {
                const double rel = std::fabs(T_(r, j)) / colmax_[j];
                if (!is_basic(j) && rel > 1e-7 && rel > mag) {
                    mag = rel;
                    best = j;
                }
            }
            if (best != npos) {
                pivot(r, best);
                ++pivots;
            }
        }
    }

    [[nodiscard]] double objective(const std::vector<double>& cost) const {
        double v = 0.0;
        for (std::size_t r = 0; r < m_; ++r) v += cost[basis_[r]] * T_(r, n_ + m_);
        return v;
    }

    [[nodiscard]] std::vector<double> primal() const {
        std::vector<double> x(n_, 0.0);
        for (std::size_t r = 0; r < m_; ++r)
            if (basis_[r] < n_) x[basis_[r]] = T_(r, n_ + m_);
        return x;
    }

    /// y = c_B' B^{-1}, expressed for the unflipped rows.
    [[nodiscard]] std::vector<double> duals(const std::vector<double>& cost) const {
        std::vector<double> y(m_, 0.0);
        for (std::size_t k = 0; k < m_; ++k) {
            double v = 0.0;
            for (std::size_t r = 0; r < m_; ++r) v += cost[basis_[r]] * T_(r, n_ + k);
            y[k] = v * flip_[k];
        }
        return y;
    }

private:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    static constexpr std::size_t kReinvertEvery = 50;
    static constexpr std::size_t kBlandAfter = 50;

    [[nodiscard]] bool is_basic(std::size_t j) const { return in_basis_[j] != 0; }

    void reduced_costs(const std::vector<double>& cost, std::vector<double>& d) const {
        for (std::size_t j = 0; j < n_ + m_; ++j) d[j] = cost[j];
        for (std::size_t r = 0; r < m_; ++r) {
            const double cb = cost[basis_[r]];
            if (cb == 0.0) continue;
            const double* row = T_.row(r);
            for (std::size_t j = 0; j < n_ + m_; ++j) d[j] -= cb * row[j];
        }
    }

    void pivot(std::size_t r, std::size_t c) {
        const std::size_t w = n_ + m_ + 1;
        double* pr = T_.row(r);
        const double inv = 1.0 / pr[c];
        for (std::size_t j = 0; j < w; ++j) pr[j] *= inv;
        pr[c] = 1.0;
        for (std::size_t k = 0; k < m_; ++k) {
            if (k == r) continue;
            double* rk = T_.row(k);
            const double f = rk[c];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < w; ++j) rk[j] -= f * pr[j];
            rk[c] = 0.0;
        }
        in_basis_[basis_[r]] = 0;
        in_basis_[c] = 1;
        basis_[r] = c;
    }

    std::size_t m_, n_;
    SimplexOptions opt_;
    Matrix T_;
    Matrix orig_;
    std::vector<std::size_t> basis_;
    std::vector<double> flip_;
    std::vector<char> in_basis_;
    std::vector<double> colmax_;
};

}  // namespace detail

/// Standard-form core: min c'x s.t. Ax = b, x >= 0.
inline LpResult solve_standard_form(const Matrix& A, const std::vector<double>& b, const std::vector<double>& c,
                                    const SimplexOptions& opt = {}) {
    const std::size_t m = A.rows(), n = A.cols();
    if (b.size() != m || c.size() != n) throw std::invalid_argument("solve_standard_form: dimension mismatch");
    LpResult res;
    detail::Tableau tab(A, b, opt);

    std::vector<double> phase1(n + m, 0.0);
    for (std::size_t k = 0; k < m; ++k) phase1[n + k] = 1.0;
    tab.optimize(phase1, true, res.pivots);
    tab.reinvert();
    double bnorm = 0.0;
    for (double v : b) bnorm = std::max(bnorm, std::fabs(v));
    if (tab.objective(phase1) > opt.feasibility_tol * (1.0 + bnorm)) {
        res.status = LpStatus::Infeasible;
        return res;
    }
    tab.drive_out_artificials(res.pivots);
    tab.reinvert();

    std::vector<double> phase2(n + m, 0.0);
    for (std::size_t j = 0; j < n; ++j) phase2[j] = c[j];
    if (!tab.optimize(phase2, false, res.pivots)) {
        res.status = LpStatus::Unbounded;
        return res;
    }
    tab.reinvert();
    if (tab.primal_residual() > opt.feasibility_tol * (1.0 + bnorm))
        throw LpNumericalError("simplex: primal residual " + std::to_string(tab.primal_residual()));
    res.status = LpStatus::Optimal;
    res.x = tab.primal();
    res.duals = tab.duals(phase2);
    res.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) res.objective += c[j] * res.x[j];

    // certificate from the original data
    double cscale = 1.0;
    for (double v : c) cscale = std::max(cscale, std::fabs(v));
    res.min_reduced_cost = INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
        double d = c[j];
        for (std::size_t r = 0; r < m; ++r) d -= res.duals[r] * A(r, j);
        res.min_reduced_cost = std::min(res.min_reduced_cost, d);
    }
    if (n == 0) res.min_reduced_cost = 0.0;
    if (res.min_reduced_cost < -opt.certificate_tol * cscale)
        throw LpNumericalError("simplex: dual certificate failed, min reduced cost " + std::to_string(res.min_reduced_cost));
    return res;
}

/// General dense LP via bound shifting, variable splitting and slacks.
inline LpResult solve_lp(const LinearProgramSpec& spec, const SimplexOptions& opt = {}) {
    const std::size_t nv = spec.num_vars();
    std::vector<double> lo = spec.lower, hi = spec.upper;
    if (lo.empty()) lo.assign(nv, 0.0);
    if (hi.empty()) hi.assign(nv, INFINITY);
    if (lo.size() != nv || hi.size() != nv) throw std::invalid_argument("solve_lp: bound vector size mismatch");
    for (const auto& r : spec.rows) {
        if (r.coeffs.size() != nv) throw std::invalid_argument("solve_lp: row width mismatch");
        for (double v : r.coeffs)
            if (!std::isfinite(v)) throw std::invalid_argument("solve_lp: non-finite coefficient");
        if (!std::isfinite(r.rhs)) throw std::invalid_argument("solve_lp: non-finite right-hand side");
    }

    // x_j = offset_j + sum over its columns of sign * column value
    struct Column {
        std::size_t var;
        double sign;
    };
    std::vector<Column> cols;
    std::vector<double> offset(nv, 0.0);
    std::vector<std::pair<std::size_t, double>> upper_rows;  // (column, width)
    for (std::size_t j = 0; j < nv; ++j) {
        if (lo[j] > hi[j]) {
            LpResult r;
            r.status = LpStatus::Infeasible;
            return r;
        }
        if (std::isfinite(lo[j])) {
            offset[j] = lo[j];
            cols.push_back({j, 1.0});
            if (std::isfinite(hi[j])) upper_rows.push_back({cols.size() - 1, hi[j] - lo[j]});
        } else if (std::isfinite(hi[j])) {
            offset[j] = hi[j];
            cols.push_back({j, -1.0});
        } else {
            cols.push_back({j, 1.0});
            cols.push_back({j, -1.0});
        }
    }
    const std::size_t nstruct = cols.size();
    std::size_t nslack = upper_rows.size();
    for (const auto& r : spec.rows)
        if (r.sense != RowSense::Equal) ++nslack;
    const std::size_t m = spec.rows.size() + upper_rows.size(), n = nstruct + nslack;

    Matrix A(m, n);
    std::vector<double> b(m), c(n, 0.0);
    const double osign = spec.sense == ObjectiveSense::Maximize ? -1.0 : 1.0;
    double const_term = 0.0;
    for (std::size_t j = 0; j < nv; ++j) const_term += spec.objective[j] * offset[j];
    for (std::size_t k = 0; k < nstruct; ++k) c[k] = osign * spec.objective[cols[k].var] * cols[k].sign;
    std::size_t slack = nstruct;
    for (std::size_t r = 0; r < spec.rows.size(); ++r) {
        const auto& row = spec.rows[r];
        double shift = 0.0;
        for (std::size_t j = 0; j < nv; ++j) shift += row.coeffs[j] * offset[j];
        for (std::size_t k = 0; k < nstruct; ++k) A(r, k) = row.coeffs[cols[k].var] * cols[k].sign;
        if (row.sense == RowSense::LessEqual) A(r, slack++) = 1.0;
        if (row.sense == RowSense::GreaterEqual) A(r, slack++) = -1.0;
        b[r] = row.rhs - shift;
    }
    for (std::size_t u = 0; u < upper_rows.size(); ++u) {
        const std::size_t r = spec.rows.size() + u;
        A(r, upper_rows[u].first) = 1.0;
        A(r, slack++) = 1.0;
        b[r] = upper_rows[u].second;
    }

    LpResult core = solve_standard_form(A, b, c, opt);
    LpResult res;
    res.status = core.status;
    res.pivots = core.pivots;
    res.min_reduced_cost = core.min_reduced_cost;
    if (core.status != LpStatus::Optimal) return res;
    res.x = offset;
    for (std::size_t k = 0; k < nstruct; ++k) res.x[cols[k].var] += cols[k].sign * core.x[k];
    res.objective = const_term;
    for (std::size_t j = 0; j < nv; ++j) res.objective += spec.objective[j] * (res.x[j] - offset[j]);
    res.duals.assign(spec.rows.size(), 0.0);
    for (std::size_t r = 0; r < spec.rows.size(); ++r) res.duals[r] = osign * core.duals[r];
    return res;
}

}  // namespace sirctl
