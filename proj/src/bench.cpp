#include "ellab/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "ellab/elliptical.hpp"
#include "ellab/rng.hpp"

namespace ellab {

namespace {
double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}
}  // namespace

EllipseBenchReport bench_ellipse(int dim, int steps, int repeats, std::uint64_t seed) {
    if (dim < 2) throw std::invalid_argument("bench_ellipse: dim must be >= 2");
    if (steps < 10) throw std::invalid_argument("bench_ellipse: steps must be >= 10");
    if (repeats < 1) throw std::invalid_argument("bench_ellipse: repeats must be >= 1");
    constexpr double kRidge = 0.1;

    using clock = std::chrono::steady_clock;
    EllipseBenchReport report;
    report.dim = dim;
    report.steps = steps;
    report.repeats = repeats;

    std::vector<double> rank1_secs, naive_secs;
    for (int rep = 0; rep < repeats; ++rep) {
        Rng rng = Rng(seed).derive(static_cast<std::uint64_t>(rep));
        std::vector<Vec> stream(steps, Vec(dim));
        for (Vec& phi : stream)
            for (double& v : phi) v = rng.normal();

        std::vector<double> rank1_bonus(steps), naive_bonus(steps);

        EllipticalTracker tracker(dim, kRidge);
        const auto t0 = clock::now();
        for (int t = 0; t < steps; ++t) rank1_bonus[t] = tracker.observe(stream[t]);
        rank1_secs.push_back(std::chrono::duration<double>(clock::now() - t0).count());

        // naive path: accumulate the Gram matrix, reinvert with the oracle's
        // elimination every step, read the quadratic form off the inverse
        Mat gram = Mat::identity(dim, kRidge);
        const auto t1 = clock::now();
        for (int t = 0; t < steps; ++t) {
            const Mat inv = invert_gauss(gram);
            naive_bonus[t] = quadratic_form(inv, stream[t]);
            const Vec& phi = stream[t];
            for (int r = 0; r < dim; ++r) {
                double* row = gram.row(r);
                const double pr = phi[r];
                for (int c = 0; c < dim; ++c) row[c] += pr * phi[c];
            }
        }
        naive_secs.push_back(std::chrono::duration<double>(clock::now() - t1).count());

        for (int t = 0; t < steps; ++t)
            report.max_bonus_diff =
                std::max(report.max_bonus_diff, std::abs(rank1_bonus[t] - naive_bonus[t]));
    }

    const double rank1 = median(rank1_secs);
    const double naive = median(naive_secs);
    report.rank1_updates_per_sec = steps / rank1;
    report.naive_updates_per_sec = steps / naive;
    report.speedup = naive / rank1;
    return report;
}

void print_bench(std::ostream& out, const EllipseBenchReport& r) {
    out << "ellipse bench dim=" << r.dim << " steps=" << r.steps << " repeats=" << r.repeats
        << "\n";
    out << "  rank-1 updates/sec : " << r.rank1_updates_per_sec << "\n";
    out << "  naive  updates/sec : " << r.naive_updates_per_sec << "\n";
    out << "  speedup            : " << r.speedup << "\n";
    out << "  max bonus diff     : " << r.max_bonus_diff << "\n";
}

}  // namespace ellab
