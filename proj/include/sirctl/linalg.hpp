// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sirctl {

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    [[nodiscard]] const double* row(std::size_t r) const { return data_.data() + r * cols_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

struct EigenResult {
    std::vector<double> values;
    std::size_t sweeps = 0;
    double off_norm = 0.0;
};

/// Cyclic Jacobi eigenvalues of a symmetric matrix.
inline EigenResult jacobi_eigenvalues(Matrix A, std::size_t max_sweeps = 100, double off_target = 1e-12) {
    const std::size_t n = A.rows();
    if (A.cols() != n) throw std::invalid_argument("jacobi_eigenvalues: matrix must be square");
    EigenResult res;
    auto off = [&] {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * A(p, q) * A(p, q);
        return std::sqrt(s);
    };
    double scale = 0.0;
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q) scale = std::max(scale, std::fabs(A(p, q)));
    const double target = off_target * std::max(scale, 1e-300);
    for (res.sweeps = 0; res.sweeps < max_sweeps && off() > target; ++res.sweeps) {
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = A(p, q);
                if (apq == 0.0) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
            }
    }
    res.off_norm = off();
    res.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) res.values[k] = A(k, k);
    return res;
}

}  // namespace sirctl
