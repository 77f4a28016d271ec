#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "varcap/errors.hpp"

namespace varcap {

/// Dense row-major matrix of doubles. Sized for feeder-scale systems
/// (a few hundred rows); no sparse machinery.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const double* row_data(std::size_t i) const { return data_.data() + i * cols_; }
    double* row_data(std::size_t i) { return data_.data() + i * cols_; }

    std::vector<double> apply(const std::vector<double>& v) const {
        if (v.size() != cols_) throw dimension_error("matrix-vector size mismatch");
        std::vector<double> out(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            const double* r = row_data(i);
            double acc = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) acc += r[j] * v[j];
            out[i] = acc;
        }
        return out;
    }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// LU factorization with partial pivoting. Throws singular_error when a pivot
/// collapses; the message carries a cheap condition estimate (pivot ratio).
class LuFactor {
  public:
    explicit LuFactor(Matrix a) : lu_(std::move(a)), perm_(lu_.rows()) {
        const std::size_t n = lu_.rows();
        if (n != lu_.cols()) throw dimension_error("LU requires a square matrix");
        for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
        double max_pivot = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t p = k;
            double best = std::fabs(lu_(k, k));
            for (std::size_t i = k + 1; i < n; ++i) {
                const double v = std::fabs(lu_(i, k));
                if (v > best) {
                    best = v;
                    p = i;
                }
            }
            if (p != k) {
                std::swap(perm_[p], perm_[k]);
                for (std::size_t j = 0; j < n; ++j) std::swap(lu_(p, j), lu_(k, j));
            }
            const double pivot = lu_(k, k);
            max_pivot = std::max(max_pivot, std::fabs(pivot));
            if (std::fabs(pivot) <= 1e-13 * std::max(1.0, max_pivot)) {
                throw singular_error("singular matrix in LU: pivot ratio ~" +
                                     std::to_string(std::fabs(pivot) / std::max(1e-300, max_pivot)));
            }
            min_pivot_ = std::min(min_pivot_, std::fabs(pivot));
            const double inv = 1.0 / pivot;
            for (std::size_t i = k + 1; i < n; ++i) {
                const double f = lu_(i, k) * inv;
                lu_(i, k) = f;
                if (f == 0.0) continue;
                for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
            }
        }
        max_pivot_ = max_pivot;
    }

    std::size_t size() const { return lu_.rows(); }

    /// Rough reciprocal condition estimate from the pivot spread.
    double rcond_estimate() const { return max_pivot_ > 0 ? min_pivot_ / max_pivot_ : 0.0; }

    std::vector<double> solve(const std::vector<double>& rhs) const {
        const std::size_t n = size();
        if (rhs.size() != n) throw dimension_error("LU solve size mismatch");
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = rhs[perm_[i]];
        for (std::size_t i = 1; i < n; ++i) {
            double acc = x[i];
            for (std::size_t j = 0; j < i; ++j) acc -= lu_(i, j) * x[j];
            x[i] = acc;
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double acc = x[ii];
            for (std::size_t j = ii + 1; j < n; ++j) acc -= lu_(ii, j) * x[j];
            x[ii] = acc / lu_(ii, ii);
        }
        return x;
    }

    /// Solves A^T y = rhs using the same factorization.
    std::vector<double> solve_transposed(const std::vector<double>& rhs) const {
        const std::size_t n = size();
        if (rhs.size() != n) throw dimension_error("LU solve size mismatch");
        std::vector<double> y(rhs);
        // U^T w = rhs (forward), then L^T z = w (backward), then undo row permutation.
        for (std::size_t i = 0; i < n; ++i) {
            double acc = y[i];
            for (std::size_t j = 0; j < i; ++j) acc -= lu_(j, i) * y[j];
            y[i] = acc / lu_(i, i);
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double acc = y[ii];
            for (std::size_t j = ii + 1; j < n; ++j) acc -= lu_(j, ii) * y[j];
            y[ii] = acc;
        }
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[perm_[i]] = y[i];
        return out;
    }

  private:
    Matrix lu_;
    std::vector<std::size_t> perm_;
    double min_pivot_ = 1e300;
    double max_pivot_ = 0.0;
};

}  // namespace varcap
