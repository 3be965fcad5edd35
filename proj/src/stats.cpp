#include "ellab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#include "ellab/rng.hpp"

namespace ellab {

using nlohmann::json;

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double median_of(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double interquartile_mean(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t trim = xs.size() / 4;
    double s = 0.0;
    for (std::size_t i = trim; i < xs.size() - trim; ++i) s += xs[i];
    return s / static_cast<double>(xs.size() - 2 * trim);
}

double optimality_gap(const std::vector<double>& xs) { return 1.0 - mean_of(xs); }

namespace {

IntervalStat bootstrap_stat(const std::vector<double>& scores, double (*stat)(std::vector<double>),
                            int resamples, double confidence, Rng rng) {
    IntervalStat out;
    out.point = stat(std::vector<double>(scores));
    std::vector<double> stats(resamples);
    std::vector<double> sample(scores.size());
    for (int r = 0; r < resamples; ++r) {
        for (std::size_t i = 0; i < scores.size(); ++i)
            sample[i] = scores[rng.below(scores.size())];
        stats[r] = stat(std::vector<double>(sample));
    }
    std::sort(stats.begin(), stats.end());
    const double tail = (1.0 - confidence) / 2.0;
    const auto pick = [&](double q) {
        const double pos = q * (resamples - 1);
        const std::size_t idx = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(idx);
        if (idx + 1 >= stats.size()) return stats.back();
        return stats[idx] * (1.0 - frac) + stats[idx + 1] * frac;
    };
    out.lo = std::min(pick(tail), out.point);
    out.hi = std::max(pick(1.0 - tail), out.point);
    return out;
}

double stat_mean(std::vector<double> xs) { return mean_of(xs); }
double stat_median(std::vector<double> xs) { return median_of(std::move(xs)); }
double stat_iqm(std::vector<double> xs) { return interquartile_mean(std::move(xs)); }
double stat_gap(std::vector<double> xs) { return optimality_gap(xs); }

std::uint64_t stratum_hash(const std::string& algo, const std::string& env) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const std::string* s : {&algo, &env}) {
        for (const char c : *s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001B3ull;
        }
        h ^= 0xFF;
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace

AggregateReport aggregate(const std::vector<RunRecord>& records, int resamples, double confidence,
                          std::uint64_t resample_seed) {
    if (resamples < 1) throw std::invalid_argument("aggregate: resamples must be >= 1");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw std::invalid_argument("aggregate: confidence must be in (0, 1)");

    // stratify by (algo, env); sort runs by seed so record order is irrelevant
    std::map<std::pair<std::string, std::string>, std::vector<const RunRecord*>> strata;
    for (const RunRecord& rec : records) {
        const auto algo_it = rec.config.find("algo");
        const auto env_it = rec.config.find("env");
        if (algo_it == rec.config.end() || env_it == rec.config.end())
            throw std::invalid_argument("aggregate: record config lacks algo/env keys");
        strata[{algo_it->second, env_it->second}].push_back(&rec);
    }

    AggregateReport report;
    report.resamples = resamples;
    report.confidence = confidence;
    report.resample_seed = resample_seed;
    for (auto& [key, runs] : strata) {
        if (runs.size() < 2)
            throw std::invalid_argument("aggregate: stratum (" + key.first + ", " + key.second +
                                        ") needs at least 2 records");
        std::sort(runs.begin(), runs.end(),
                  [](const RunRecord* a, const RunRecord* b) { return a->seed < b->seed; });
        StratumReport s;
        s.algo = key.first;
        s.env = key.second;
        for (const RunRecord* r : runs) s.scores.push_back(final_score(*r));
        const Rng rng = Rng(resample_seed).derive(stratum_hash(s.algo, s.env));
        s.mean = bootstrap_stat(s.scores, stat_mean, resamples, confidence, rng.derive(1));
        s.median = bootstrap_stat(s.scores, stat_median, resamples, confidence, rng.derive(2));
        s.iqm = bootstrap_stat(s.scores, stat_iqm, resamples, confidence, rng.derive(3));
        s.gap = bootstrap_stat(s.scores, stat_gap, resamples, confidence, rng.derive(4));
        report.strata.push_back(std::move(s));
    }
    return report;
}

void write_report(std::ostream& out, const AggregateReport& report) {
    json strata = json::array();
    auto interval = [](const IntervalStat& s) {
        return json{{"point", s.point}, {"lo", s.lo}, {"hi", s.hi}};
    };
    for (const StratumReport& s : report.strata) {
        strata.push_back(json{{"algo", s.algo},
                              {"env", s.env},
                              {"scores", s.scores},
                              {"mean", interval(s.mean)},
                              {"median", interval(s.median)},
                              {"iqm", interval(s.iqm)},
                              {"optimality_gap", interval(s.gap)}});
    }
    const json j{{"strata", strata},
                 {"resamples", report.resamples},
                 {"confidence", report.confidence},
                 {"resample_seed", report.resample_seed},
                 {"score_window", report.score_window}};
    out << j.dump(2) << "\n";
}

void print_report(std::ostream& out, const AggregateReport& report) {
    out << std::fixed << std::setprecision(3);
    for (const StratumReport& s : report.strata) {
        out << s.algo << " @ " << s.env << " (n=" << s.scores.size() << ")\n";
        auto line = [&](const char* name, const IntervalStat& st) {
            out << "  " << std::left << std::setw(15) << name << st.point << "  [" << st.lo
                << ", " << st.hi << "]\n";
        };
        line("mean", s.mean);
        line("median", s.median);
        line("iqm", s.iqm);
        line("optimality_gap", s.gap);
    }
}

}  // namespace ellab
