// SPDX-License-Identifier: Apache-2.0
#include "ptqtp/linalg.hpp"

#include <cmath>
#include <string>

namespace ptqtp {

WeightMatrix::WeightMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0) {
        throw ArgumentError("WeightMatrix: rows and cols must be >= 1");
    }
}

WeightMatrix::WeightMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0) {
        throw ArgumentError("WeightMatrix: rows and cols must be >= 1");
    }
    if (data_.size() != rows * cols) {
        throw DimensionError("WeightMatrix: data length " + std::to_string(data_.size()) +
                             " != " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    require_finite(data_, "WeightMatrix");
}

void require_finite(std::span<const double> values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw DataError(std::string(what) + ": non-finite value at index " + std::to_string(i));
        }
    }
}

double frobenius_error_squared(const WeightMatrix& w, const WeightMatrix& w_hat) {
    if (w.rows() != w_hat.rows() || w.cols() != w_hat.cols()) {
        throw DimensionError("frobenius_error: shape mismatch");
    }
    const auto a = w.data();
    const auto b = w_hat.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return sum;
}

double frobenius_error(const WeightMatrix& w, const WeightMatrix& w_hat) {
    return std::sqrt(frobenius_error_squared(w, w_hat));
}

double frobenius_norm(const WeightMatrix& w) {
    double sum = 0.0;
    for (double v : w.data()) sum += v * v;
    return std::sqrt(sum);
}

double Mat2::frobenius() const noexcept {
    return std::sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22);
}

Mat2 Mat2::inverse() const {
    const double d = det();
    if (d == 0.0) {
        throw SingularSystemError("2x2 system is singular (det == 0); increase lambda");
    }
    return {a22 / d, -a12 / d, -a21 / d, a11 / d};
}

TritBasis build_basis(std::span<const Trit> t1, std::span<const Trit> t2) {
    if (t1.size() != t2.size()) {
        throw DimensionError("build_basis: column lengths differ (" + std::to_string(t1.size()) +
                             " vs " + std::to_string(t2.size()) + ")");
    }
    for (std::size_t i = 0; i < t1.size(); ++i) {
        if (t1[i] < -1 || t1[i] > 1 || t2[i] < -1 || t2[i] > 1) {
            throw ArgumentError("build_basis: value outside {-1,0,1} at row " + std::to_string(i));
        }
    }
    return {t1, t2};
}

RidgeSystem::RidgeSystem(const TritBasis& basis, std::span<const double> w, double lambda)
    : lambda_(lambda) {
    if (w.size() != basis.rows()) {
        throw DimensionError("RidgeSystem: target length does not match basis rows");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ArgumentError("RidgeSystem: lambda must be finite and >= 0");
    }
    // Trit products are exact small integers; count them as such.
    std::int64_t s11 = 0;
    std::int64_t s12 = 0;
    std::int64_t s22 = 0;
    double b1 = 0.0;
    double b2 = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const int c1 = basis.col1[j];
        const int c2 = basis.col2[j];
        s11 += c1 * c1;
        s12 += c1 * c2;
        s22 += c2 * c2;
        if (c1 > 0) b1 += w[j];
        else if (c1 < 0) b1 -= w[j];
        if (c2 > 0) b2 += w[j];
        else if (c2 < 0) b2 -= w[j];
    }
    gram_ = {static_cast<double>(s11), static_cast<double>(s12), static_cast<double>(s12),
             static_cast<double>(s22)};
    rhs_ = {b1, b2};
}

Mat2 RidgeSystem::matrix() const noexcept {
    return {gram_.a11 + lambda_, gram_.a12, gram_.a21, gram_.a22 + lambda_};
}

void RidgeSystem::set_lambda(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ArgumentError("RidgeSystem: lambda must be finite and >= 0");
    }
    lambda_ = lambda;
}

namespace {

// a*b - c*d to within about one ulp (Kahan's fma trick).
double diff_of_products(double a, double b, double c, double d) {
    const double cd = c * d;
    const double err = std::fma(-c, d, cd);
    return std::fma(a, b, -cd) + err;
}

}  // namespace

// adj(A) b / det(A) with A = G + lambda I expanded around the integer Gram
// matrix G. g11*g22 - g12^2 is exact, so nearly parallel columns with a tiny
// lambda do not lose the determinant to cancellation.
Vec2 RidgeSystem::solve() const {
    const double g11 = gram_.a11, g12 = gram_.a12, g22 = gram_.a22;
    const double l = lambda_;
    const double det = (g11 * g22 - g12 * g12) + l * (g11 + g22) + l * l;
    if (det == 0.0) {
        throw SingularSystemError("2x2 system is singular (det == 0); increase lambda");
    }
    const double n1 = diff_of_products(g22, rhs_[0], g12, rhs_[1]) + l * rhs_[0];
    const double n2 = diff_of_products(g11, rhs_[1], g12, rhs_[0]) + l * rhs_[1];
    return {n1 / det, n2 / det};
}

Vec2 solve_ridge(const TritBasis& basis, std::span<const double> w, double lambda) {
    return RidgeSystem(basis, w, lambda).solve();
}

double condition_estimate(const Mat2& a) { return a.frobenius() * a.inverse().frobenius(); }

double ridge_objective(const TritBasis& basis, std::span<const double> w, const Vec2& theta,
                       double lambda) {
    double sum = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double r = w[j] - theta[0] * basis.col1[j] - theta[1] * basis.col2[j];
        sum += r * r;
    }
    return sum + lambda * (theta[0] * theta[0] + theta[1] * theta[1]);
}

}  // namespace ptqtp
