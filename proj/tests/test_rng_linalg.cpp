#include <gtest/gtest.h>

#include <cmath>

#include "ellab/linalg.hpp"
#include "ellab/rng.hpp"

using namespace ellab;

TEST(Rng, SameSeedSameSequence) {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DerivedStreamsIndependentOfConsumption) {
    Rng a(7);
    Rng b(7);
    for (int i = 0; i < 10; ++i) a.next_u64();  // consume only from a
    Rng da = a.derive(3);
    Rng db = b.derive(3);
    for (int i = 0; i < 20; ++i) EXPECT_EQ(da.next_u64(), db.next_u64());
}

TEST(Rng, Uniform01Range) {
    Rng r(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform01();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(Rng, BelowStaysInRange) {
    Rng r(5);
    for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(17), 17u);
}

TEST(Rng, NormalMomentsRoughlyStandard) {
    Rng r(11);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        sum += x;
        sq += x * x;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.05);
    EXPECT_NEAR(sq / n, 1.0, 0.05);
}

TEST(Linalg, InvertKnown2x2) {
    Mat m(2, 2);
    m(0, 0) = 2.0; m(0, 1) = 1.0;
    m(1, 0) = 1.0; m(1, 1) = 2.0;
    const Mat inv = invert_gauss(m);
    EXPECT_NEAR(inv(0, 0), 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(inv(0, 1), -1.0 / 3.0, 1e-12);
    EXPECT_NEAR(inv(1, 0), -1.0 / 3.0, 1e-12);
    EXPECT_NEAR(inv(1, 1), 2.0 / 3.0, 1e-12);
}

TEST(Linalg, InverseTimesMatrixIsIdentity) {
    Rng rng(3);
    const int n = 20;
    // SPD by construction: A = B B^T + I
    Mat b(n, n);
    for (double& v : b.a) v = rng.normal();
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = i == j ? 1.0 : 0.0;
            for (int k = 0; k < n; ++k) s += b(i, k) * b(j, k);
            a(i, j) = s;
        }
    const Mat inv = invert_gauss(a);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += a(i, k) * inv(k, j);
            EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-9);
        }
    }
}

TEST(Linalg, SingularMatrixThrows) {
    Mat m(2, 2, 0.0);
    EXPECT_THROW(invert_gauss(m), std::runtime_error);
}

TEST(Linalg, JacobiKnown2x2) {
    Mat m(2, 2);
    m(0, 0) = 2.0; m(0, 1) = 1.0;
    m(1, 0) = 1.0; m(1, 1) = 2.0;
    const SymEigen eig = jacobi_eigen(m);
    Vec vals = eig.values;
    std::sort(vals.begin(), vals.end());
    EXPECT_NEAR(vals[0], 1.0, 1e-12);
    EXPECT_NEAR(vals[1], 3.0, 1e-12);
}

TEST(Linalg, JacobiReconstructsMatrix) {
    Rng rng(9);
    const int n = 12;
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double v = rng.normal();
            a(i, j) = v;
            a(j, i) = v;
        }
    const SymEigen eig = jacobi_eigen(a);
    // A = V diag(vals) V^T
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += eig.vectors(i, k) * eig.values[k] * eig.vectors(j, k);
            EXPECT_NEAR(s, a(i, j), 1e-10);
        }
    }
}
