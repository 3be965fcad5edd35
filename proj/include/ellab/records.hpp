#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ellab/bonus.hpp"

namespace ellab {

struct MetricRow {
    long step = 0;
    double episode_return_mean = 0.0;
    double intrinsic_mean = 0.0;
    double intrinsic_std = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double idm_loss = 0.0;
    double steps_per_second = 0.0;

    bool operator==(const MetricRow&) const = default;
};

// One training run: config fingerprint, seed, completion status and the
// logged metric series. Serialized as JSON lines (header, metric rows,
// status footer).
struct RunRecord {
    std::string fingerprint;
    std::uint64_t seed = 0;
    std::string status = "completed";
    std::string error;
    std::map<std::string, std::string> config;  // canonical echo, sorted keys
    std::vector<MetricRow> metrics;

    bool operator==(const RunRecord&) const = default;
};

void write_run_record(std::ostream& out, const RunRecord& rec);
RunRecord read_run_record(std::istream& in);

// Mean extrinsic return over the last 10% of logged intervals (at least one
// row); 0 for an empty series.
double final_score(const RunRecord& rec);

// Flat `key = value` config files with '#' comments. Parse errors carry the
// line number and offending text.
using ConfigMap = std::map<std::string, std::string>;
ConfigMap parse_config_file(std::istream& in);

// FNV-1a over the sorted key=value pairs, skipping keys that do not affect
// run semantics (seed, seeds, timing, trace, out).
std::string config_fingerprint(const ConfigMap& cfg);

// --- bonus replay traces ---------------------------------------------------

struct TraceHeader {
    BonusAlgo algo = BonusAlgo::None;
    KeyExtractor extractor = KeyExtractor::Identity;
    CountForm count_form = CountForm::InverseSqrt;
    double alpha = 0.1;
    double ridge = 0.1;
    int feature_dim = 0;
    int num_envs = 1;
    bool episodic = true;
};

void write_bonus_trace(std::ostream& out, const TraceHeader& header,
                       const std::vector<BonusTrace>& steps);

struct ReplayResult {
    long steps = 0;
    double max_abs_diff = 0.0;
};

// Re-derives every logged bonus from the logged state (feature vectors, count
// keys, network outputs) and reports the worst absolute deviation.
ReplayResult replay_bonus_trace(std::istream& in);

}  // namespace ellab
