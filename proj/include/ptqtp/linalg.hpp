// SPDX-License-Identifier: Apache-2.0
//
// Dense linear algebra used by the decomposer: a row-major real matrix, the
// two-column trit basis of one grouped row, and the 2x2 ridge system solved
// through its adjugate.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ptqtp/errors.hpp"

namespace ptqtp {

using Trit = std::int8_t;

/// Row-major dense matrix of doubles. Every element must be finite.
class WeightMatrix {
public:
    WeightMatrix() = default;
    /// Zero-filled rows x cols matrix. Throws ArgumentError on a zero extent.
    WeightMatrix(std::size_t rows, std::size_t cols);
    /// Takes ownership of `data`; throws on size mismatch or non-finite values.
    WeightMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    bool operator==(const WeightMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Throws DataError if any value is NaN or infinite.
void require_finite(std::span<const double> values, const char* what);

/// ||W - W_hat||_F^2, accumulated sequentially in double.
double frobenius_error_squared(const WeightMatrix& w, const WeightMatrix& w_hat);
/// ||W - W_hat||_F.
double frobenius_error(const WeightMatrix& w, const WeightMatrix& w_hat);
double frobenius_norm(const WeightMatrix& w);

using Vec2 = std::array<double, 2>;

/// 2x2 matrix, row-major.
struct Mat2 {
    double a11 = 0.0;
    double a12 = 0.0;
    double a21 = 0.0;
    double a22 = 0.0;

    double det() const noexcept { return a11 * a22 - a12 * a21; }
    double frobenius() const noexcept;
    /// adj(A) / det(A). Throws SingularSystemError when det == 0 exactly.
    Mat2 inverse() const;
    Vec2 operator*(const Vec2& v) const noexcept {
        return {a11 * v[0] + a12 * v[1], a21 * v[0] + a22 * v[1]};
    }
};

/// The d x 2 basis S = [t1 t2] of one grouped row. Non-owning view.
struct TritBasis {
    std::span<const Trit> col1;
    std::span<const Trit> col2;

    std::size_t rows() const noexcept { return col1.size(); }
    Trit operator()(std::size_t r, std::size_t c) const { return c == 0 ? col1[r] : col2[r]; }
};

/// Validates both columns (equal length, values in {-1,0,1}) and pairs them.
TritBasis build_basis(std::span<const Trit> t1, std::span<const Trit> t2);

/// Normal equations of min ||w - S theta||^2 + lambda ||theta||^2.
/// The Gram matrix S^T S is kept separately so lambda can be changed without
/// touching the basis again.
class RidgeSystem {
public:
    RidgeSystem(const TritBasis& basis, std::span<const double> w, double lambda);

    Mat2 matrix() const noexcept;  // S^T S + lambda I
    const Mat2& gram() const noexcept { return gram_; }
    const Vec2& rhs() const noexcept { return rhs_; }
    double lambda() const noexcept { return lambda_; }
    void set_lambda(double lambda);

    /// theta = A^{-1} b via the adjugate.
    Vec2 solve() const;

private:
    Mat2 gram_;
    Vec2 rhs_{};
    double lambda_;
};

/// alpha = (S^T S + lambda I)^{-1} S^T w.
Vec2 solve_ridge(const TritBasis& basis, std::span<const double> w, double lambda);

/// kappa = ||A||_F * ||A^{-1}||_F. Throws SingularSystemError on det == 0.
double condition_estimate(const Mat2& a);

/// Value of ||w - S theta||^2 + lambda ||theta||^2.
double ridge_objective(const TritBasis& basis, std::span<const double> w, const Vec2& theta,
                       double lambda);

}  // namespace ptqtp
