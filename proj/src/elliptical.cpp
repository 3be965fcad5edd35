#include "ellab/elliptical.hpp"

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ellab {

EllipticalTracker::EllipticalTracker(int dim, double ridge) : dim_(dim), ridge_(ridge) {
    if (dim < 1) throw std::invalid_argument("EllipticalTracker: dim must be >= 1");
    if (!(ridge > 0.0) || !std::isfinite(ridge))
        throw std::invalid_argument("EllipticalTracker: ridge must be > 0");
    inv_ = Mat::identity(dim, 1.0 / ridge);
    scratch_.resize(dim);
}

void EllipticalTracker::check_phi(std::span<const double> phi) const {
    if (static_cast<int>(phi.size()) != dim_)
        throw std::invalid_argument("EllipticalTracker: feature dim " + std::to_string(phi.size()) +
                                    " does not match tracker dim " + std::to_string(dim_));
    if (!all_finite(phi)) throw std::invalid_argument("EllipticalTracker: non-finite feature vector");
}

double EllipticalTracker::bonus(std::span<const double> phi) const {
    check_phi(phi);
    return quadratic_form(inv_, phi);
}

void EllipticalTracker::update(std::span<const double> phi) {
    check_phi(phi);
    // u = C^{-1} phi and b = phi^T u, computed once and reused
    matvec(inv_, phi, scratch_);
    double b = dot(scratch_, phi);
    if (b < 0.0) b = 0.0;  // round-off guard; exact arithmetic gives b >= 0
    const double denom = 1.0 + b;

    for (int r = 0; r < dim_; ++r) {
        const double ur = scratch_[r] / denom;
        double* row = inv_.row(r);
        for (int c = 0; c < dim_; ++c) row[c] -= ur * scratch_[c];
    }
    // re-symmetrize to keep float drift out of long update chains
    for (int r = 0; r < dim_; ++r) {
        for (int c = r + 1; c < dim_; ++c) {
            const double m = 0.5 * (inv_(r, c) + inv_(c, r));
            inv_(r, c) = m;
            inv_(c, r) = m;
        }
    }
    ++count_;
}

double EllipticalTracker::observe(std::span<const double> phi) {
    const double b = bonus(phi);
    update(phi);
    return b;
}

void EllipticalTracker::reset() {
    inv_ = Mat::identity(dim_, 1.0 / ridge_);
    count_ = 0;
}

void EllipticalTracker::serialize(std::ostream& out) const {
    const std::int64_t dim = dim_;
    const std::int64_t count = count_;
    out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
    out.write(reinterpret_cast<const char*>(&ridge_), sizeof ridge_);
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    out.write(reinterpret_cast<const char*>(inv_.a.data()),
              static_cast<std::streamsize>(inv_.a.size() * sizeof(double)));
}

EllipticalTracker EllipticalTracker::deserialize(std::istream& in) {
    std::int64_t dim = 0;
    std::int64_t count = 0;
    double ridge = 0.0;
    in.read(reinterpret_cast<char*>(&dim), sizeof dim);
    in.read(reinterpret_cast<char*>(&ridge), sizeof ridge);
    in.read(reinterpret_cast<char*>(&count), sizeof count);
    if (!in || dim < 1) throw std::runtime_error("EllipticalTracker: corrupt checkpoint header");
    EllipticalTracker t(static_cast<int>(dim), ridge);
    in.read(reinterpret_cast<char*>(t.inv_.a.data()),
            static_cast<std::streamsize>(t.inv_.a.size() * sizeof(double)));
    if (!in) throw std::runtime_error("EllipticalTracker: truncated checkpoint block");
    t.count_ = count;
    return t;
}

Mat oracle_inverse(const std::vector<Vec>& history, double ridge, int dim) {
    if (dim < 1) throw std::invalid_argument("oracle_inverse: dim must be >= 1");
    if (!(ridge > 0.0)) throw std::invalid_argument("oracle_inverse: ridge must be > 0");
    Mat gram = Mat::identity(dim, ridge);
    for (const Vec& phi : history) {
        if (static_cast<int>(phi.size()) != dim)
            throw std::invalid_argument("oracle_inverse: inconsistent feature dimension");
        for (int r = 0; r < dim; ++r) {
            double* row = gram.row(r);
            const double pr = phi[r];
            for (int c = 0; c < dim; ++c) row[c] += pr * phi[c];
        }
    }
    return invert_gauss(gram);
}

double eigen_bonus(const std::vector<Vec>& history, double ridge, std::span<const double> phi) {
    const int dim = static_cast<int>(phi.size());
    if (dim < 1) throw std::invalid_argument("eigen_bonus: empty query vector");
    if (!(ridge > 0.0)) throw std::invalid_argument("eigen_bonus: ridge must be > 0");
    Mat gram = Mat::identity(dim, ridge);
    for (const Vec& h : history) {
        if (static_cast<int>(h.size()) != dim)
            throw std::invalid_argument("eigen_bonus: inconsistent feature dimension");
        for (int r = 0; r < dim; ++r) {
            double* row = gram.row(r);
            const double hr = h[r];
            for (int c = 0; c < dim; ++c) row[c] += hr * h[c];
        }
    }
    const SymEigen eig = jacobi_eigen(std::move(gram));
    double total = 0.0;
    for (int j = 0; j < dim; ++j) {
        double z = 0.0;
        for (int i = 0; i < dim; ++i) z += eig.vectors(i, j) * phi[i];
        total += z * z / eig.values[j];
    }
    return total;
}

}  // namespace ellab
