// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ptqtp/linalg.hpp"
#include "test_util.hpp"

namespace ptqtp {
namespace {

using testing::relative_diff;
using testing::stacked_qr_solve;

// Singular values of a 2x2 matrix from the eigenvalues of A^T A.
std::pair<double, double> singular_values(const Mat2& a) {
    const double p = a.a11 * a.a11 + a.a21 * a.a21;
    const double q = a.a11 * a.a12 + a.a21 * a.a22;
    const double r = a.a12 * a.a12 + a.a22 * a.a22;
    const double mean = 0.5 * (p + r);
    const double disc = std::sqrt(0.25 * (p - r) * (p - r) + q * q);
    return {std::sqrt(mean + disc), std::sqrt(std::max(0.0, mean - disc))};
}

TEST(FrobeniusError, IdenticalMatricesGiveZero) {
    WeightMatrix w(2, 3, {1.0, -2.0, 3.5, 0.0, 4.0, -1.0});
    EXPECT_EQ(frobenius_error(w, w), 0.0);
}

TEST(FrobeniusError, ThreeFourFive) {
    WeightMatrix w(1, 2, {3.0, 4.0});
    WeightMatrix zero(1, 2);
    EXPECT_EQ(frobenius_error(w, zero), 5.0);
    EXPECT_EQ(frobenius_error_squared(w, zero), 25.0);
}

TEST(FrobeniusError, MatchesElementwiseRecomputation) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = testing::gaussian_matrix(8, 8, rng);
        const auto b = testing::gaussian_matrix(8, 8, rng);
        long double sum = 0.0L;
        for (std::size_t i = 0; i < 8; ++i) {
            for (std::size_t j = 0; j < 8; ++j) {
                const long double diff = static_cast<long double>(a(i, j)) - b(i, j);
                sum += diff * diff;
            }
        }
        EXPECT_LT(relative_diff(frobenius_error(a, b), static_cast<double>(std::sqrt(sum))), 1e-12);
    }
}

TEST(FrobeniusError, ShapeMismatchThrows) {
    EXPECT_THROW(frobenius_error(WeightMatrix(2, 2), WeightMatrix(2, 3)), DimensionError);
}

TEST(WeightMatrix, RejectsNonFiniteAndBadShape) {
    EXPECT_THROW(WeightMatrix(1, 2, {1.0, std::nan("")}), DataError);
    EXPECT_THROW(WeightMatrix(1, 2, {1.0, INFINITY}), DataError);
    EXPECT_THROW(WeightMatrix(2, 2, {1.0}), DimensionError);
    EXPECT_THROW(WeightMatrix(0, 2), ArgumentError);
}

TEST(BuildBasis, ColumnsAreTheTritRows) {
    const std::vector<Trit> t1{1, 1};
    const std::vector<Trit> t2{-1, 1};
    const auto s = build_basis(t1, t2);
    EXPECT_EQ(s(0, 0), 1);
    EXPECT_EQ(s(0, 1), -1);
    EXPECT_EQ(s(1, 0), 1);
    EXPECT_EQ(s(1, 1), 1);

    const std::vector<Trit> z{0, 0};
    const auto zs = build_basis(z, z);
    for (std::size_t r = 0; r < 2; ++r) {
        EXPECT_EQ(zs(r, 0), 0);
        EXPECT_EQ(zs(r, 1), 0);
    }

    const std::vector<Trit> a{1, 0, -1};
    const std::vector<Trit> b{0, 1, 1};
    const auto s3 = build_basis(a, b);
    ASSERT_EQ(s3.rows(), 3u);
    for (std::size_t r = 0; r < 3; ++r) {
        EXPECT_EQ(s3(r, 0), a[r]);
        EXPECT_EQ(s3(r, 1), b[r]);
    }
}

TEST(BuildBasis, RejectsLengthMismatchAndNonTrits) {
    const std::vector<Trit> a{1, 0};
    const std::vector<Trit> b{1};
    const std::vector<Trit> bad{1, 2};
    EXPECT_THROW(build_basis(a, b), DimensionError);
    EXPECT_THROW(build_basis(a, bad), ArgumentError);
}

TEST(SolveRidge, ZeroTargetGivesZeroScales) {
    const std::vector<Trit> t1{1, -1, 0, 1};
    const std::vector<Trit> t2{0, 1, 1, 1};
    const std::vector<double> w(4, 0.0);
    const Vec2 a = solve_ridge(build_basis(t1, t2), w, 1e-8);
    EXPECT_EQ(a[0], 0.0);
    EXPECT_EQ(a[1], 0.0);
}

TEST(SolveRidge, ExactOrthogonalFit) {
    const std::vector<Trit> t1{1, 1, 1, 1};
    const std::vector<Trit> t2{1, -1, 1, -1};
    const std::vector<double> w{3, 1, 3, 1};
    const auto s = build_basis(t1, t2);
    const RidgeSystem sys(s, w, 0.0);
    const Mat2 a = sys.matrix();
    EXPECT_EQ(a.a11, 4.0);
    EXPECT_EQ(a.a12, 0.0);
    EXPECT_EQ(a.a21, 0.0);
    EXPECT_EQ(a.a22, 4.0);
    EXPECT_EQ(sys.rhs()[0], 8.0);
    EXPECT_EQ(sys.rhs()[1], 4.0);
    const Vec2 alpha = solve_ridge(s, w, 0.0);
    EXPECT_EQ(alpha[0], 2.0);
    EXPECT_EQ(alpha[1], 1.0);
    EXPECT_EQ(ridge_objective(s, w, alpha, 0.0), 0.0);
}

TEST(SolveRidge, IdenticalColumnsSplitEvenly) {
    const std::vector<Trit> t{1, 1};
    const std::vector<double> w{2, 2};
    const Vec2 a = solve_ridge(build_basis(t, t), w, 1e-8);
    EXPECT_NEAR(a[0], 1.0, 1e-6);
    EXPECT_NEAR(a[1], 1.0, 1e-6);
    EXPECT_LT(std::abs(a[0] - a[1]), 1e-6);
}

TEST(SolveRidge, SingularAtZeroLambda) {
    const std::vector<Trit> t{1, -1, 1};
    const std::vector<double> w{1, 2, 3};
    EXPECT_THROW(solve_ridge(build_basis(t, t), w, 0.0), SingularSystemError);
    const std::vector<Trit> z{0, 0, 0};
    EXPECT_THROW(solve_ridge(build_basis(z, z), w, 0.0), SingularSystemError);
}

TEST(SolveRidge, RejectsNegativeLambda) {
    const std::vector<Trit> t{1};
    const std::vector<double> w{1};
    EXPECT_THROW(solve_ridge(build_basis(t, t), w, -1.0), ArgumentError);
}

TEST(SolveRidge, MatchesStackedQrOnRandomSystems) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> len(1, 64);
    std::uniform_real_distribution<double> loglam(-8.0, 0.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t d = len(rng);
        const auto t1 = testing::random_trits(d, rng);
        const auto t2 = testing::random_trits(d, rng);
        std::vector<double> w(d);
        for (auto& v : w) v = normal(rng);
        const double lambda = std::pow(10.0, loglam(rng));
        const Vec2 got = solve_ridge(build_basis(t1, t2), w, lambda);
        const Vec2 want = stacked_qr_solve(t1, t2, w, lambda);
        const double err = std::hypot(got[0] - want[0], got[1] - want[1]);
        double wnorm = 0.0;
        for (double v : w) wnorm += v * v;
        // An all-zero basis has exact answer 0; measure against the data scale.
        const double scale = std::max(std::hypot(want[0], want[1]), std::sqrt(wnorm));
        EXPECT_LE(err / scale, 1e-12) << "trial " << trial;
    }
}

TEST(SolveRidge, NearlyParallelColumnsStayAccurate) {
    // Columns differing in one position with lambda = 1e-8 give kappa ~ 1e10;
    // the expansion around the exact Gram determinant keeps full accuracy.
    std::mt19937_64 rng(55);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Trit> t1(128, 1);
        for (std::size_t j = 0; j < 128; ++j) t1[j] = normal(rng) < 0 ? -1 : 1;
        auto t2 = t1;
        t2[trial % 128] = 0;
        std::vector<double> w(128);
        for (auto& v : w) v = normal(rng);
        const Vec2 got = solve_ridge(build_basis(t1, t2), w, 1e-8);
        const Vec2 want = stacked_qr_solve(t1, t2, w, 1e-8);
        EXPECT_LE(std::hypot(got[0] - want[0], got[1] - want[1]) / std::hypot(want[0], want[1]),
                  1e-12);
    }
}

TEST(SolveRidge, InitializationCoefficientBound) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> len(1, 128);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t d = len(rng);
        const auto t1 = testing::random_trits(d, rng);
        const auto t2 = testing::random_trits(d, rng);
        std::vector<double> w(d);
        for (auto& v : w) v = normal(rng);
        const double lambda = 1e-8;
        const auto s = build_basis(t1, t2);
        const Vec2 a = solve_ridge(s, w, lambda);
        const auto [smax, smin] = singular_values(RidgeSystem(s, w, 0.0).gram());
        // gram = S^T S, so its singular values are sigma(S)^2.
        const double sigma_max = std::sqrt(smax);
        const double sigma_min_sq = smin;
        double wnorm = 0.0;
        for (double v : w) wnorm += v * v;
        wnorm = std::sqrt(wnorm);
        const double bound = sigma_max / (sigma_min_sq + lambda) * wnorm;
        EXPECT_LE(std::hypot(a[0], a[1]), bound * (1 + 1e-9)) << "trial " << trial;
    }
}

TEST(ConditionEstimate, HandValues) {
    EXPECT_DOUBLE_EQ(condition_estimate({1, 0, 0, 1}), 2.0);
    EXPECT_DOUBLE_EQ(condition_estimate({4, 0, 0, 4}), 2.0);
    EXPECT_DOUBLE_EQ(condition_estimate({2, 0, 0, 1}), 2.5);
}

TEST(ConditionEstimate, SingularThrows) {
    EXPECT_THROW(condition_estimate({1, 1, 1, 1}), SingularSystemError);
    EXPECT_THROW(condition_estimate({0, 0, 0, 0}), SingularSystemError);
}

TEST(ConditionEstimate, ScaleInvariantAndBoundsSpectral) {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> logc(-6.0, 6.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const Mat2 a{normal(rng), normal(rng), normal(rng), normal(rng)};
        if (a.det() == 0.0) continue;
        const double k = condition_estimate(a);
        const double c = (trial % 2 ? -1.0 : 1.0) * std::pow(10.0, logc(rng));
        const Mat2 ca{c * a.a11, c * a.a12, c * a.a21, c * a.a22};
        EXPECT_LT(relative_diff(condition_estimate(ca), k), 1e-12);
        const auto [smax, smin] = singular_values(a);
        EXPECT_GE(k * (1 + 1e-12), smax / smin);
        EXPECT_GE(k, 2.0 * (1 - 1e-12));
    }
}

}  // namespace
}  // namespace ptqtp
