#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "ellab/linalg.hpp"

namespace ellab {

// Per-episode memory of visited feature vectors, held as the regularized
// inverse Gram matrix (sum_i phi_i phi_i^T + ridge I)^{-1} and maintained
// with rank-1 Sherman-Morrison downdates in O(dim^2) per step.
//
// The matrix is kept in float64 and re-symmetrized after every update;
// the denominator term is clamped at zero if round-off ever drives the
// quadratic form negative, which keeps the matrix positive definite.
class EllipticalTracker {
public:
    EllipticalTracker(int dim, double ridge);

    int dim() const { return dim_; }
    double ridge() const { return ridge_; }
    long count() const { return count_; }
    const Mat& inv_cov() const { return inv_; }

    // phi^T C^{-1} phi; read-only.
    double bonus(std::span<const double> phi) const;

    // Absorb phi into the Gram matrix.
    void update(std::span<const double> phi);

    // Bonus against the pre-update matrix, then absorb phi; the per-step
    // order the training loop relies on.
    double observe(std::span<const double> phi);

    // Back to (1/ridge) I with count 0.
    void reset();

    // Flat little-endian float64 block with a small binary header.
    void serialize(std::ostream& out) const;
    static EllipticalTracker deserialize(std::istream& in);

private:
    void check_phi(std::span<const double> phi) const;

    int dim_;
    double ridge_;
    long count_ = 0;
    Mat inv_;
    Vec scratch_;
};

// Exact inverse of (sum_i phi_i phi_i^T + ridge I) by dense Gauss-Jordan
// elimination; the testing/benchmark oracle for the tracker.
Mat oracle_inverse(const std::vector<Vec>& history, double ridge, int dim);

// Bonus through an explicit eigendecomposition of the Gram matrix:
// z = U^T phi, result = sum_i z_i^2 / lambda_i. Diagnostic path only.
double eigen_bonus(const std::vector<Vec>& history, double ridge, std::span<const double> phi);

}  // namespace ellab
