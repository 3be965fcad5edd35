#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ellab/records.hpp"

namespace ellab {

double mean_of(const std::vector<double>& xs);
double median_of(std::vector<double> xs);

// Mean of the middle 50%: trims floor(n/4) samples from each end of the
// sorted sample.
double interquartile_mean(std::vector<double> xs);

// Mean shortfall from the optimal score 1.0.
double optimality_gap(const std::vector<double>& xs);

struct IntervalStat {
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct StratumReport {
    std::string algo;
    std::string env;
    std::vector<double> scores;  // final score per seed, sorted by seed
    IntervalStat mean, median, iqm, gap;
};

struct AggregateReport {
    std::vector<StratumReport> strata;  // sorted by (algo, env)
    int resamples = 2000;
    double confidence = 0.95;
    std::uint64_t resample_seed = 0;
    std::string score_window = "mean extrinsic return over the last 10% of logged intervals";
};

// Groups records by (algo, env), scores each run, and attaches percentile
// bootstrap confidence intervals from `resamples` within-stratum resamples.
// Deterministic in resample_seed and invariant to record order. Throws
// std::invalid_argument if any stratum has fewer than two records.
AggregateReport aggregate(const std::vector<RunRecord>& records, int resamples = 2000,
                          double confidence = 0.95, std::uint64_t resample_seed = 17);

void write_report(std::ostream& out, const AggregateReport& report);
void print_report(std::ostream& out, const AggregateReport& report);

}  // namespace ellab
