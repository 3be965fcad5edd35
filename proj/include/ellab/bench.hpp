#pragma once

#include <cstdint>
#include <iosfwd>

namespace ellab {

struct EllipseBenchReport {
    int dim = 0;
    int steps = 0;
    int repeats = 0;
    double rank1_updates_per_sec = 0.0;
    double naive_updates_per_sec = 0.0;
    double speedup = 0.0;
    double max_bonus_diff = 0.0;  // worst disagreement between the two paths
};

// Times bonus+update per step through the Sherman-Morrison tracker against
// recomputing the dense inverse with the elimination oracle every step, on
// identical random feature streams. Reports the median over repeats.
EllipseBenchReport bench_ellipse(int dim, int steps, int repeats, std::uint64_t seed = 99);

void print_bench(std::ostream& out, const EllipseBenchReport& report);

}  // namespace ellab
