#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "drivesafe/error.hpp"
#include "drivesafe/inference.hpp"
#include "test_support.hpp"

using namespace drivesafe;
using namespace drivesafe::inference;
using domain::ActivityMeta;
using domain::kActivityCount;

namespace {

double round2(double x) { return std::round(x * 100.0) / 100.0; }

ClassifierProfile uniform_profile(std::uint64_t seed) {
    std::array<std::array<double, kActivityCount>, kActivityCount> counts{};
    for (auto &row : counts) row.fill(1.0);
    return ClassifierProfile::from_counts(counts, seed);
}

// Independent recomputation from the pair list, written without the
// confusion-matrix shortcut.
ClassMetrics naive_metrics(std::span<const std::pair<ActivityMeta, ActivityMeta>> pairs, ActivityMeta cls) {
    double tp = 0, fp = 0, fn = 0;
    std::int64_t support = 0;
    for (const auto &[t, p] : pairs) {
        if (t == cls) ++support;
        if (t == cls && p == cls) ++tp;
        if (t != cls && p == cls) ++fp;
        if (t == cls && p != cls) ++fn;
    }
    ClassMetrics m;
    m.support = support;
    m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

std::vector<std::pair<ActivityMeta, ActivityMeta>> expand(const BinaryConfusion &m) {
    std::vector<std::pair<ActivityMeta, ActivityMeta>> out;
    const ActivityMeta meta[2] = {ActivityMeta::SafeDriving, ActivityMeta::DistractedDriving};
    for (int t = 0; t < 2; ++t)
        for (int p = 0; p < 2; ++p)
            for (std::int64_t k = 0; k < m[t][p]; ++k) out.emplace_back(meta[t], meta[p]);
    return out;
}

const BinaryConfusion kTestSet{{{88, 0}, {6, 906}}};

}  // namespace

TEST(Classifier, IdentityProfileNeverErrs) {
    ActivityClassifier clf(ClassifierProfile::identity(42));
    for (int i = 0; i < 500; ++i) {
        EXPECT_EQ(clf.classify(3, i).activity, 3);
    }
}

TEST(Classifier, UniformRowMatchesMonteCarlo) {
    const auto profile = uniform_profile(2024);
    Rng rng(profile.seed);
    std::array<int, kActivityCount> hits{};
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        ++hits[static_cast<std::size_t>(classify_activity(profile, 5, rng).activity)];
    }
    for (int h : hits) {
        EXPECT_NEAR(static_cast<double>(h) / n, 0.1, 0.02);
    }
    EXPECT_EQ(rng.draws(), static_cast<std::uint64_t>(n));
}

TEST(Classifier, RealtimeProfileRowsMatchMonteCarlo) {
    const auto profile = ClassifierProfile::load(dstest::data_path("profile_realtime.tsv"), 7);
    Rng rng(profile.seed);
    const int n = 100000;
    for (int cls : {0, 4}) {
        std::array<int, kActivityCount> hits{};
        for (int i = 0; i < n; ++i) {
            ++hits[static_cast<std::size_t>(classify_activity(profile, cls, rng).activity)];
        }
        for (std::size_t j = 0; j < hits.size(); ++j) {
            EXPECT_NEAR(static_cast<double>(hits[j]) / n, profile.confusion[static_cast<std::size_t>(cls)][j], 0.02);
        }
    }
}

TEST(Classifier, SeededStreamIsReproducible) {
    ActivityClassifier a(uniform_profile(99)), b(uniform_profile(99)), c(uniform_profile(100));
    int differ = 0;
    for (int i = 0; i < 200; ++i) {
        const auto x = a.classify(i % 10, i);
        EXPECT_EQ(x, b.classify(i % 10, i));
        differ += x.activity != c.classify(i % 10, i).activity;
    }
    EXPECT_GT(differ, 0);
}

TEST(Classifier, TestSetProfileRecallsEverySafeFrame) {
    auto profile = ClassifierProfile::load(dstest::data_path("profile_testset.tsv"), 1);
    ActivityClassifier clf(profile);
    std::vector<std::pair<int, int>> pairs;
    // 88 safe frames, 912 distracted spread evenly over classes 1..9 (912 = 9 * 101 + 3).
    for (int i = 0; i < 88; ++i) pairs.emplace_back(0, clf.classify(0, i).activity);
    for (int i = 0; i < 912; ++i) {
        const int cls = 1 + i % 9;
        pairs.emplace_back(cls, clf.classify(cls, i).activity);
    }
    const auto report = classification_report_from_ids(pairs);
    EXPECT_EQ(report.safe.recall, 1.0);
    EXPECT_EQ(report.safe.support, 88);
    EXPECT_EQ(report.distracted.support, 912);
}

TEST(Profile, RowsMustBeStochastic) {
    auto p = ClassifierProfile::identity();
    p.confusion[2][3] = 0.5;
    EXPECT_THROW(p.validate(), DomainError);
    p = ClassifierProfile::identity();
    p.confusion[0][0] = 1.5;
    p.confusion[0][1] = -0.5;
    EXPECT_THROW(p.validate(), DomainError);
    EXPECT_NO_THROW(ClassifierProfile::load(dstest::data_path("profile_realtime.tsv")).validate());
}

TEST(Profile, ZeroCountRowBecomesIdentity) {
    std::array<std::array<double, kActivityCount>, kActivityCount> counts{};
    counts[1][0] = 3;
    counts[1][1] = 1;
    const auto p = ClassifierProfile::from_counts(counts);
    EXPECT_DOUBLE_EQ(p.confusion[1][0], 0.75);
    EXPECT_DOUBLE_EQ(p.confusion[5][5], 1.0);
}

TEST(Profile, WriteParseRoundTrip) {
    const auto p = ClassifierProfile::load(dstest::data_path("profile_testset.tsv"));
    std::stringstream ss;
    p.write(ss);
    const auto back = ClassifierProfile::parse(ss);
    for (std::size_t i = 0; i < kActivityCount; ++i)
        for (std::size_t j = 0; j < kActivityCount; ++j) EXPECT_NEAR(back.confusion[i][j], p.confusion[i][j], 1e-15);
}

TEST(Report, TestSetMatrixMatchesPublishedRows) {
    const auto r = classification_report(kTestSet);
    EXPECT_EQ(round2(r.safe.precision), 0.94);
    EXPECT_EQ(round2(r.safe.recall), 1.00);
    EXPECT_EQ(round2(r.safe.f1), 0.97);
    EXPECT_EQ(round2(r.distracted.precision), 1.00);
    EXPECT_EQ(round2(r.distracted.recall), 0.99);
    EXPECT_EQ(round2(r.distracted.f1), 1.00);
    EXPECT_EQ(round2(r.weighted_avg.precision), 0.99);
    EXPECT_EQ(r.safe.support, 88);
    EXPECT_EQ(r.distracted.support, 912);
}

TEST(Report, MicroAverageIsAccuracy) {
    const auto r = classification_report(kTestSet);
    EXPECT_DOUBLE_EQ(r.accuracy, 994.0 / 1000.0);
    EXPECT_DOUBLE_EQ(r.micro_avg.precision, r.accuracy);
    EXPECT_DOUBLE_EQ(r.micro_avg.recall, r.accuracy);
    EXPECT_DOUBLE_EQ(r.micro_avg.f1, r.accuracy);
    // The published "micro" figures 0.97 / 1.00 / 0.98 are the unweighted class means.
    EXPECT_EQ(round2(r.macro_avg.precision), 0.97);
    EXPECT_EQ(round2(r.macro_avg.recall), 1.00);
    EXPECT_EQ(round2(r.macro_avg.f1), 0.98);
}

TEST(Report, AgreesWithExpandedPairsOnAllSmallMatrices) {
    for (int a = 0; a <= 4; ++a)
        for (int b = 0; b <= 4; ++b)
            for (int c = 0; c <= 4; ++c)
                for (int d = 0; d <= 4; ++d) {
                    const BinaryConfusion m{{{a, b}, {c, d}}};
                    const auto pairs = expand(m);
                    if (pairs.empty()) continue;
                    const auto r = classification_report(pairs);
                    EXPECT_EQ(confusion_of(pairs), m);
                    for (auto cls : {ActivityMeta::SafeDriving, ActivityMeta::DistractedDriving}) {
                        const auto want = naive_metrics(pairs, cls);
                        const auto &got = r.of(cls);
                        EXPECT_NEAR(got.precision, want.precision, 1e-12);
                        EXPECT_NEAR(got.recall, want.recall, 1e-12);
                        EXPECT_NEAR(got.f1, want.f1, 1e-12);
                        EXPECT_EQ(got.support, want.support);
                        EXPECT_GE(got.precision, 0.0);
                        EXPECT_LE(got.f1, 1.0);
                    }
                    const double n = static_cast<double>(pairs.size());
                    const double weighted = (r.safe.precision * static_cast<double>(r.safe.support) +
                                             r.distracted.precision * static_cast<double>(r.distracted.support)) /
                                            n;
                    EXPECT_NEAR(r.weighted_avg.precision, weighted, 1e-12);
                    EXPECT_NEAR(r.micro_avg.precision, static_cast<double>(a + d) / n, 1e-12);
                    EXPECT_EQ(r.safe.support + r.distracted.support, static_cast<std::int64_t>(pairs.size()));
                }
}

TEST(Report, AllCorrectAndAllWrong) {
    const auto good = classification_report(BinaryConfusion{{{5, 0}, {0, 7}}});
    for (const auto *m : {&good.safe, &good.distracted, &good.micro_avg, &good.macro_avg, &good.weighted_avg}) {
        EXPECT_EQ(m->precision, 1.0);
        EXPECT_EQ(m->recall, 1.0);
        EXPECT_EQ(m->f1, 1.0);
    }
    const auto bad = classification_report(BinaryConfusion{{{0, 5}, {7, 0}}});
    EXPECT_EQ(bad.safe.precision, 0.0);
    EXPECT_EQ(bad.safe.recall, 0.0);
    EXPECT_EQ(bad.distracted.precision, 0.0);
    EXPECT_EQ(bad.distracted.recall, 0.0);
}

TEST(Report, ZeroPredictedPositivesIsFlagged) {
    const auto r = classification_report(BinaryConfusion{{{0, 3}, {0, 9}}});
    EXPECT_TRUE(r.safe.zero_division);
    EXPECT_EQ(r.safe.precision, 0.0);
    EXPECT_FALSE(r.distracted.zero_division);
}

TEST(Report, TenClassIdsCollapseToMetaClasses) {
    const std::vector<std::pair<int, int>> ids{{0, 0}, {3, 7}, {5, 0}, {9, 9}};
    const auto r = classification_report_from_ids(ids);
    EXPECT_EQ(r.safe.support, 1);
    EXPECT_EQ(r.distracted.support, 3);
    EXPECT_DOUBLE_EQ(r.distracted.recall, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.safe.precision, 0.5);
}

TEST(Report, FormatsRowsAtTwoDecimals) {
    const auto text = format_report(classification_report(kTestSet));
    EXPECT_NE(text.find("0.94"), std::string::npos);
    EXPECT_NE(text.find("912"), std::string::npos);
}

TEST(Mood, ReplayReturnsTraceVerbatim) {
    const MoodTrace single({{0, AffectiveState::make(5, 5)}});
    EXPECT_EQ(estimate_mood_replay(single, 0).state, AffectiveState::make(5, 5));
    EXPECT_EQ(estimate_mood_replay(single, 0).source, MoodSource::Replay);

    const MoodTrace path({{0, AffectiveState::make(2, 7)}, {1, AffectiveState::make(4, 5)}, {2, AffectiveState::make(7, 4)}});
    EXPECT_EQ(estimate_mood_replay(path, 0).state, AffectiveState::make(2, 7));
    EXPECT_EQ(estimate_mood_replay(path, 1).state, AffectiveState::make(4, 5));
    EXPECT_EQ(estimate_mood_replay(path, 2).state, AffectiveState::make(7, 4));
}

TEST(Mood, ReplayHoldsAndThenEnds) {
    const MoodTrace trace({{0, AffectiveState::make(3, 8)}, {3, AffectiveState::make(6, 4)}});
    EXPECT_EQ(trace.at(2).state, AffectiveState::make(3, 8));
    EXPECT_EQ(trace.at(3).state, AffectiveState::make(6, 4));
    EXPECT_THROW((void)trace.at(4), EndOfReplay);
    EXPECT_THROW((void)trace.at(-1), EndOfReplay);
    EXPECT_THROW((void)MoodTrace({{2, AffectiveState::make(1, 1)}, {2, AffectiveState::make(1, 2)}}), DomainError);
}

TEST(Mood, TraceFileRoundTrip) {
    const MoodTrace trace({{0, AffectiveState::make(3, 8)}, {1, AffectiveState::make(2, 7)}});
    std::stringstream ss;
    trace.write(ss);
    EXPECT_EQ(MoodTrace::parse(ss).entries(), trace.entries());
}

TEST(Mood, StubOnConstantSignalsGivesLowestArousalBand) {
    sigproc::PhysioFeatures f;
    f.eda = sigproc::ChannelFeatures{};
    f.emg = sigproc::ChannelFeatures{};
    f.eda->window.mean = 2.0;
    f.emg->window.mean = 0.3;
    const StubMoodRule rule;
    const auto m = estimate_mood_stub(f, rule, 4);
    EXPECT_EQ(m.state.arousal, 1);
    EXPECT_EQ(m.state.valence, 7);
    EXPECT_EQ(m.period_index, 4);
    EXPECT_EQ(m.source, MoodSource::Stub);
}

TEST(Mood, BandRuleIsMonotoneStepFunction) {
    const BandRule rule{{0.05, 0.1, 0.2}, {1, 3, 6, 8}};
    EXPECT_EQ(rule.apply(0.0), 1);
    EXPECT_EQ(rule.apply(0.05), 3);
    EXPECT_EQ(rule.apply(0.15), 6);
    EXPECT_EQ(rule.apply(5.0), 8);
    int prev = 0;
    for (double x = 0.0; x < 0.5; x += 0.001) {
        EXPECT_GE(rule.apply(x), prev);
        prev = rule.apply(x);
    }
    EXPECT_THROW((BandRule{{0.2, 0.1}, {1, 2, 3}}.validate()), DomainError);
    EXPECT_THROW((BandRule{{0.1}, {1, 2, 3}}.validate()), DomainError);
    EXPECT_THROW((BandRule{{0.1}, {1, 10}}.validate()), DomainError);
}

TEST(Mood, EstimatorDispatchesOnMode) {
    const auto replay = MoodEstimator::replay(MoodTrace({{0, AffectiveState::make(5, 5)}}));
    EXPECT_EQ(replay.mode(), MoodSource::Replay);
    EXPECT_EQ(replay.estimate({}, 0).state, AffectiveState::make(5, 5));
    const auto stub = MoodEstimator::stub(StubMoodRule{});
    EXPECT_EQ(stub.mode(), MoodSource::Stub);
    EXPECT_THROW((void)stub.estimate({}, 0), DomainError);
}

TEST(Rng, UniformStaysInUnitInterval) {
    Rng rng(1);
    double sum = 0;
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 10000, 0.5, 0.01);
}
