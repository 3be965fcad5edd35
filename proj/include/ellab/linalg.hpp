#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ellab {

using Vec = std::vector<double>;

// Dense row-major matrix. Small and unclever on purpose: every numeric path
// in this project (tracker updates, oracle inversion, backprop) runs through
// plain loops so the benchmark compares like with like.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0)
        : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

    static Mat identity(int n, double scale = 1.0);

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

    const double* row(int r) const { return a.data() + static_cast<std::size_t>(r) * cols; }
    double* row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }

    bool operator==(const Mat&) const = default;
};

bool all_finite(std::span<const double> x);

double dot(std::span<const double> x, std::span<const double> y);

// y = M x
void matvec(const Mat& m, std::span<const double> x, std::span<double> y);
Vec matvec(const Mat& m, std::span<const double> x);

// x^T M x for square M, no temporaries
double quadratic_form(const Mat& m, std::span<const double> x);

// largest |entry|
double max_abs(const Mat& m);

// max_ij |a_ij - b_ij|
double max_abs_diff(const Mat& a, const Mat& b);

// Inverse by Gauss-Jordan elimination with partial pivoting.
// Throws std::runtime_error on a singular matrix.
Mat invert_gauss(const Mat& m);

struct SymEigen {
    Vec values;   // unordered
    Mat vectors;  // column j is the eigenvector for values[j]
};

// Cyclic Jacobi rotations for a symmetric matrix. Throws std::runtime_error
// if the off-diagonal mass has not vanished within max_sweeps.
SymEigen jacobi_eigen(Mat a, int max_sweeps = 64);

}  // namespace ellab
