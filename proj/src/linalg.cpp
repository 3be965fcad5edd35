#include "ellab/linalg.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace ellab {

Mat Mat::identity(int n, double scale) {
    Mat m(n, n, 0.0);
    for (int i = 0; i < n; ++i) m(i, i) = scale;
    return m;
}

bool all_finite(std::span<const double> x) {
    for (double v : x) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

void matvec(const Mat& m, std::span<const double> x, std::span<double> y) {
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        double s = 0.0;
        for (int c = 0; c < m.cols; ++c) s += row[c] * x[c];
        y[r] = s;
    }
}

Vec matvec(const Mat& m, std::span<const double> x) {
    Vec y(m.rows);
    matvec(m, x, y);
    return y;
}

double quadratic_form(const Mat& m, std::span<const double> x) {
    double total = 0.0;
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        double s = 0.0;
        for (int c = 0; c < m.cols; ++c) s += row[c] * x[c];
        total += x[r] * s;
    }
    return total;
}

double max_abs(const Mat& m) {
    double best = 0.0;
    for (double v : m.a) best = std::max(best, std::abs(v));
    return best;
}

double max_abs_diff(const Mat& a, const Mat& b) {
    double best = 0.0;
    for (std::size_t i = 0; i < a.a.size(); ++i) best = std::max(best, std::abs(a.a[i] - b.a[i]));
    return best;
}

Mat invert_gauss(const Mat& m) {
    if (m.rows != m.cols) throw std::invalid_argument("invert_gauss: matrix not square");
    const int n = m.rows;
    Mat a = m;
    Mat inv = Mat::identity(n);

    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::abs(a(col, col));
        for (int r = col + 1; r < n; ++r) {
            const double v = std::abs(a(r, col));
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0 || !std::isfinite(best)) {
            throw std::runtime_error("invert_gauss: singular matrix at column " + std::to_string(col));
        }
        if (pivot != col) {
            for (int c = 0; c < n; ++c) {
                std::swap(a(pivot, c), a(col, c));
                std::swap(inv(pivot, c), inv(col, c));
            }
        }
        const double d = 1.0 / a(col, col);
        for (int c = 0; c < n; ++c) {
            a(col, c) *= d;
            inv(col, c) *= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            const double* arow = a.row(col);
            const double* irow = inv.row(col);
            double* ar = a.row(r);
            double* ir = inv.row(r);
            for (int c = 0; c < n; ++c) {
                ar[c] -= f * arow[c];
                ir[c] -= f * irow[c];
            }
        }
    }
    return inv;
}

SymEigen jacobi_eigen(Mat a, int max_sweeps) {
    if (a.rows != a.cols) throw std::invalid_argument("jacobi_eigen: matrix not square");
    const int n = a.rows;
    Mat v = Mat::identity(n);

    double norm = 0.0;
    for (double x : a.a) norm += x * x;
    norm = std::sqrt(norm);
    const double tol = 1e-14 * std::max(norm, 1.0);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(2.0 * off) <= tol) {
            SymEigen out;
            out.values.resize(n);
            for (int i = 0; i < n; ++i) out.values[i] = a(i, i);
            out.vectors = std::move(v);
            return out;
        }
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                // stable tan of the rotation angle
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    throw std::runtime_error("jacobi_eigen: no convergence within sweep cap");
}

}  // namespace ellab
