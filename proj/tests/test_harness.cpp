#include <gtest/gtest.h>

#include <sstream>

#include "ellab/bench.hpp"
#include "ellab/records.hpp"
#include "ellab/stats.hpp"
#include "ellab/trainer.hpp"

using namespace ellab;

TEST(ConfigFile, ParsesKeysAndComments) {
    std::stringstream in(
        "# experiment\n"
        "env = multiroom-r3-s13-timer\n"
        "algo = e3b   # elliptical\n"
        "\n"
        "beta = 1.0\n");
    const ConfigMap m = parse_config_file(in);
    EXPECT_EQ(m.at("env"), "multiroom-r3-s13-timer");
    EXPECT_EQ(m.at("algo"), "e3b");
    EXPECT_EQ(m.at("beta"), "1.0");
}

TEST(ConfigFile, ErrorsNameTheLine) {
    std::stringstream in("algo = e3b\nnot a pair\n");
    try {
        parse_config_file(in);
        FAIL() << "expected invalid_argument";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Fingerprint, StableAcrossSeedsAndSensitiveToSemantics) {
    ConfigMap a{{"algo", "e3b"}, {"env", "keyuse-s9"}, {"seed", "1"}};
    ConfigMap b{{"algo", "e3b"}, {"env", "keyuse-s9"}, {"seed", "99"}};
    EXPECT_EQ(config_fingerprint(a), config_fingerprint(b));
    ConfigMap c{{"algo", "noveld"}, {"env", "keyuse-s9"}, {"seed", "1"}};
    EXPECT_NE(config_fingerprint(a), config_fingerprint(c));
}

namespace {

RunRecord record_with_scores(const std::string& algo, const std::string& env, std::uint64_t seed,
                             const std::vector<double>& window_returns) {
    RunRecord rec;
    rec.seed = seed;
    rec.config = ConfigMap{{"algo", algo}, {"env", env}};
    rec.fingerprint = config_fingerprint(rec.config);
    long step = 0;
    for (double r : window_returns) {
        MetricRow row;
        row.step = step += 100;
        row.episode_return_mean = r;
        rec.metrics.push_back(row);
    }
    return rec;
}

}  // namespace

TEST(RunRecord, RoundTripEquality) {
    RunRecord rec = record_with_scores("e3b", "keyuse-s9", 4, {0.1, 0.4, 0.9});
    rec.metrics[1].intrinsic_mean = 0.123456789123;
    rec.metrics[1].steps_per_second = 812.5;
    rec.status = "completed";
    std::stringstream buf;
    write_run_record(buf, rec);
    const RunRecord back = read_run_record(buf);
    EXPECT_EQ(rec, back);
}

TEST(RunRecord, NonMonotoneStepsRejected) {
    std::stringstream buf;
    buf << R"({"type":"header","fingerprint":"x","seed":1,"config":{}})" << "\n";
    buf << R"({"type":"metric","step":10,"episode_return_mean":0,"intrinsic_mean":0,)"
        << R"("intrinsic_std":0,"policy_loss":0,"value_loss":0,"entropy":0,"idm_loss":0,)"
        << R"("steps_per_second":0})" << "\n";
    buf << R"({"type":"metric","step":10,"episode_return_mean":0,"intrinsic_mean":0,)"
        << R"("intrinsic_std":0,"policy_loss":0,"value_loss":0,"entropy":0,"idm_loss":0,)"
        << R"("steps_per_second":0})" << "\n";
    EXPECT_THROW(read_run_record(buf), std::runtime_error);
}

TEST(FinalScore, UsesLastTenPercentOfRows) {
    // 20 rows: the window is the last 2
    std::vector<double> returns(20, 0.0);
    returns[18] = 0.6;
    returns[19] = 1.0;
    const RunRecord rec = record_with_scores("a", "e", 1, returns);
    EXPECT_DOUBLE_EQ(final_score(rec), 0.8);

    const RunRecord empty = record_with_scores("a", "e", 1, {});
    EXPECT_DOUBLE_EQ(final_score(empty), 0.0);
}

TEST(Stats, IqmOfFourPoints) {
    EXPECT_DOUBLE_EQ(interquartile_mean({0.0, 1.0, 2.0, 3.0}), 1.5);
    EXPECT_DOUBLE_EQ(mean_of({0.0, 1.0, 2.0, 3.0}), 1.5);
    EXPECT_DOUBLE_EQ(median_of({0.0, 1.0, 2.0, 3.0}), 1.5);
}

TEST(Stats, OptimalityGapIsOneMinusMean) {
    EXPECT_DOUBLE_EQ(optimality_gap({0.25, 0.75}), 0.5);
    EXPECT_DOUBLE_EQ(optimality_gap({1.0, 1.0}), 0.0);
}

TEST(Aggregate, ConstantSamplesGiveZeroWidthIntervals) {
    std::vector<RunRecord> records;
    for (std::uint64_t s = 0; s < 4; ++s)
        records.push_back(record_with_scores("e3b", "keyuse-s9", s, {0.7, 0.7, 0.7}));
    const AggregateReport rep = aggregate(records, 500, 0.95, 7);
    ASSERT_EQ(rep.strata.size(), 1u);
    const StratumReport& s = rep.strata[0];
    for (const IntervalStat* st : {&s.mean, &s.median, &s.iqm}) {
        EXPECT_DOUBLE_EQ(st->point, 0.7);
        EXPECT_DOUBLE_EQ(st->lo, 0.7);
        EXPECT_DOUBLE_EQ(st->hi, 0.7);
    }
    EXPECT_DOUBLE_EQ(s.gap.point, 0.3);
}

TEST(Aggregate, IntervalsContainPointAndOrderIrrelevant) {
    std::vector<RunRecord> records;
    const std::vector<double> finals{0.1, 0.9, 0.4, 0.6, 0.2};
    for (std::uint64_t s = 0; s < finals.size(); ++s)
        records.push_back(record_with_scores("e3b", "multiroom-r3-s13", s, {finals[s]}));
    const AggregateReport a = aggregate(records, 1000, 0.95, 3);

    std::reverse(records.begin(), records.end());
    const AggregateReport b = aggregate(records, 1000, 0.95, 3);

    ASSERT_EQ(a.strata.size(), 1u);
    for (const auto* rep : {&a, &b}) {
        const StratumReport& s = rep->strata[0];
        for (const IntervalStat* st : {&s.mean, &s.median, &s.iqm, &s.gap}) {
            EXPECT_LE(st->lo, st->point);
            EXPECT_GE(st->hi, st->point);
        }
    }
    EXPECT_EQ(a.strata[0].scores, b.strata[0].scores);
    EXPECT_DOUBLE_EQ(a.strata[0].iqm.lo, b.strata[0].iqm.lo);
    EXPECT_DOUBLE_EQ(a.strata[0].iqm.hi, b.strata[0].iqm.hi);
}

TEST(Aggregate, WiderConfidenceNeverShrinksIntervals) {
    std::vector<RunRecord> records;
    const std::vector<double> finals{0.1, 0.9, 0.4, 0.6, 0.2};
    for (std::uint64_t s = 0; s < finals.size(); ++s)
        records.push_back(record_with_scores("e3b", "multiroom-r3-s13", s, {finals[s]}));
    const AggregateReport lo = aggregate(records, 1000, 0.80, 5);
    const AggregateReport hi = aggregate(records, 1000, 0.99, 5);
    EXPECT_LE(hi.strata[0].mean.lo, lo.strata[0].mean.lo);
    EXPECT_GE(hi.strata[0].mean.hi, lo.strata[0].mean.hi);
}

TEST(Aggregate, SingleRecordStratumRejected) {
    std::vector<RunRecord> records{record_with_scores("e3b", "keyuse-s9", 1, {0.5})};
    EXPECT_THROW(aggregate(records), std::invalid_argument);
}

TEST(Bench, PathsAgreeAtSmallDim) {
    const EllipseBenchReport rep = bench_ellipse(2, 50, 1);
    EXPECT_LE(rep.max_bonus_diff, 1e-9);
    EXPECT_GT(rep.rank1_updates_per_sec, 0.0);
    EXPECT_GT(rep.naive_updates_per_sec, 0.0);
}

TEST(Bench, RejectsBadArguments) {
    EXPECT_THROW(bench_ellipse(1, 50, 1), std::invalid_argument);
    EXPECT_THROW(bench_ellipse(8, 5, 1), std::invalid_argument);
}

TEST(TrackerCheckpoint, FeedsHarnessSerializationContract) {
    // flat row-major float64 block behind a fixed header
    EllipticalTracker t(3, 0.5);
    t.update(Vec{1.0, 2.0, 3.0});
    std::stringstream buf;
    t.serialize(buf);
    const std::string raw = buf.str();
    EXPECT_EQ(raw.size(), sizeof(std::int64_t) * 2 + sizeof(double) + 9 * sizeof(double));
}
