#include "drivesafe/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

#include <fmt/core.h>

#include "drivesafe/error.hpp"
#include "tsv.hpp"

namespace drivesafe::inference {

namespace {

constexpr double kRowTolerance = 1e-9;

double harmonic(double p, double r) {
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Profiles

void ClassifierProfile::validate() const {
    for (std::size_t r = 0; r < confusion.size(); ++r) {
        double sum = 0.0;
        for (double p : confusion[r]) {
            if (!(p >= 0.0) || !std::isfinite(p)) {
                throw DomainError(fmt::format("profile row {} has a negative or non-finite entry", r));
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowTolerance) {
            throw DomainError(fmt::format("profile row {} sums to {:.12f}, expected 1", r, sum));
        }
    }
}

ClassifierProfile ClassifierProfile::identity(std::uint64_t seed) {
    ClassifierProfile p;
    p.seed = seed;
    for (std::size_t i = 0; i < p.confusion.size(); ++i) {
        p.confusion[i][i] = 1.0;
    }
    return p;
}

ClassifierProfile ClassifierProfile::from_counts(
    const std::array<std::array<double, domain::kActivityCount>, domain::kActivityCount> &counts,
    std::uint64_t seed) {
    ClassifierProfile p;
    p.seed = seed;
    for (std::size_t r = 0; r < counts.size(); ++r) {
        double total = 0.0;
        for (double c : counts[r]) {
            if (c < 0.0) {
                throw DomainError("confusion counts must be non-negative");
            }
            total += c;
        }
        for (std::size_t c = 0; c < counts[r].size(); ++c) {
            p.confusion[r][c] = total > 0.0 ? counts[r][c] / total : (r == c ? 1.0 : 0.0);
        }
    }
    p.validate();
    return p;
}

ClassifierProfile ClassifierProfile::parse(std::istream &in, std::uint64_t seed) {
    const auto rows = detail::read_rows(in, '\t', {}, "profile.tsv");
    if (rows.size() != domain::kActivityCount) {
        throw ParseError(fmt::format("profile.tsv: expected 10 rows, found {}", rows.size()));
    }
    ClassifierProfile p;
    p.seed = seed;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].fields.size() != domain::kActivityCount) {
            throw ParseError(fmt::format("profile.tsv:{}: expected 10 columns", rows[r].line));
        }
        for (std::size_t c = 0; c < rows[r].fields.size(); ++c) {
            p.confusion[r][c] = detail::to_double(rows[r].fields[c], "profile.tsv", rows[r].line);
        }
    }
    try {
        p.validate();
    } catch (const DomainError &e) {
        throw ParseError(std::string("profile.tsv: ") + e.what());
    }
    return p;
}

ClassifierProfile ClassifierProfile::load(const std::string &path, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(fmt::format("cannot open '{}'", path));
    }
    return parse(in, seed);
}

void ClassifierProfile::write(std::ostream &out) const {
    out << "# rows: true activity 0..9, columns: predicted activity 0..9\n";
    for (const auto &row : confusion) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << (c ? "\t" : "") << fmt::format("{:.17g}", row[c]);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// RNG

namespace {

std::uint64_t splitmix64(std::uint64_t &x) noexcept {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto &word : s_) {
        word = splitmix64(x);
    }
}

std::uint64_t Rng::next() noexcept {
    ++draws_;
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// ---------------------------------------------------------------------------
// Activity classification

ActivityObservation classify_activity(const ClassifierProfile &profile, int true_class, Rng &rng, std::int64_t t_ms) {
    static_cast<void>(domain::activity_meta(true_class));
    const auto &row = profile.confusion[static_cast<std::size_t>(true_class)];
    const double u = rng.uniform();
    double cumulative = 0.0;
    int predicted = -1;
    for (std::size_t c = 0; c < row.size(); ++c) {
        cumulative += row[c];
        if (u < cumulative) {
            predicted = static_cast<int>(c);
            break;
        }
    }
    if (predicted < 0) {
        // u landed in the rounding slack above the row sum: last non-zero column.
        for (std::size_t c = row.size(); c-- > 0;) {
            if (row[c] > 0.0) {
                predicted = static_cast<int>(c);
                break;
            }
        }
    }
    return ActivityObservation{t_ms, predicted, row[static_cast<std::size_t>(predicted)]};
}

ActivityClassifier::ActivityClassifier(ClassifierProfile profile) : profile_(profile), rng_(profile.seed) {
    profile_.validate();
}

ActivityObservation ActivityClassifier::classify(int true_class, std::int64_t t_ms) {
    return classify_activity(profile_, true_class, rng_, t_ms);
}

// ---------------------------------------------------------------------------
// Report

BinaryConfusion confusion_of(std::span<const std::pair<ActivityMeta, ActivityMeta>> pairs) {
    BinaryConfusion m{};
    for (const auto &[truth, predicted] : pairs) {
        ++m[truth == ActivityMeta::SafeDriving ? 0 : 1][predicted == ActivityMeta::SafeDriving ? 0 : 1];
    }
    return m;
}

ClassificationReport classification_report(const BinaryConfusion &m) {
    const std::int64_t total = m[0][0] + m[0][1] + m[1][0] + m[1][1];
    if (total <= 0) {
        throw DegenerateInputError("classification report needs at least one (true, predicted) pair");
    }
    auto class_row = [&](int k) {
        const std::int64_t tp = m[k][k];
        const std::int64_t fn = m[k][1 - k];
        const std::int64_t fp = m[1 - k][k];
        ClassMetrics c;
        c.support = tp + fn;
        if (tp + fp == 0) {
            c.zero_division = true;
            c.precision = 0.0;
        } else {
            c.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        }
        c.recall = c.support > 0 ? static_cast<double>(tp) / static_cast<double>(c.support) : 0.0;
        c.f1 = harmonic(c.precision, c.recall);
        return c;
    };

    ClassificationReport r;
    r.safe = class_row(0);
    r.distracted = class_row(1);

    const std::int64_t correct = m[0][0] + m[1][1];
    r.accuracy = static_cast<double>(correct) / static_cast<double>(total);

    // Pooled over both classes every error is one FP and one FN.
    const std::int64_t tp = correct;
    const std::int64_t fp = m[0][1] + m[1][0];
    const std::int64_t fn = fp;
    r.micro_avg.support = total;
    r.micro_avg.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    r.micro_avg.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    r.micro_avg.f1 = harmonic(r.micro_avg.precision, r.micro_avg.recall);

    r.macro_avg.support = total;
    r.macro_avg.precision = (r.safe.precision + r.distracted.precision) / 2.0;
    r.macro_avg.recall = (r.safe.recall + r.distracted.recall) / 2.0;
    r.macro_avg.f1 = (r.safe.f1 + r.distracted.f1) / 2.0;
    r.macro_avg.zero_division = r.safe.zero_division || r.distracted.zero_division;

    const auto ws = static_cast<double>(r.safe.support) / static_cast<double>(total);
    const auto wd = static_cast<double>(r.distracted.support) / static_cast<double>(total);
    r.weighted_avg.support = total;
    r.weighted_avg.precision = ws * r.safe.precision + wd * r.distracted.precision;
    r.weighted_avg.recall = ws * r.safe.recall + wd * r.distracted.recall;
    r.weighted_avg.f1 = ws * r.safe.f1 + wd * r.distracted.f1;
    r.weighted_avg.zero_division = r.macro_avg.zero_division;
    return r;
}

ClassificationReport classification_report(std::span<const std::pair<ActivityMeta, ActivityMeta>> pairs) {
    if (pairs.empty()) {
        throw DegenerateInputError("classification report needs at least one (true, predicted) pair");
    }
    return classification_report(confusion_of(pairs));
}

ClassificationReport classification_report_from_ids(std::span<const std::pair<int, int>> pairs) {
    std::vector<std::pair<ActivityMeta, ActivityMeta>> meta;
    meta.reserve(pairs.size());
    for (const auto &[t, p] : pairs) {
        meta.emplace_back(domain::activity_meta(t), domain::activity_meta(p));
    }
    return classification_report(meta);
}

std::string format_report(const ClassificationReport &r) {
    std::string out = fmt::format("{:<20}{:>10}{:>10}{:>10}{:>10}\n", "", "precision", "recall", "f1-score", "support");
    auto line = [&out](std::string_view name, const ClassMetrics &m) {
        out += fmt::format("{:<20}{:>10.2f}{:>10.2f}{:>10.2f}{:>10}\n", name, m.precision, m.recall, m.f1, m.support);
    };
    line("Safe driving", r.safe);
    line("Distracted driving", r.distracted);
    out += '\n';
    line("Micro avg", r.micro_avg);
    line("Macro avg", r.macro_avg);
    line("Weighted avg", r.weighted_avg);
    return out;
}

// ---------------------------------------------------------------------------
// Mood

std::string_view to_string(MoodSource source) noexcept {
    return source == MoodSource::Stub ? "stub" : "replay";
}

void BandRule::validate() const {
    if (levels.size() != cuts.size() + 1) {
        throw DomainError("band rule needs exactly one more level than cut points");
    }
    if (!std::is_sorted(cuts.begin(), cuts.end()) ||
        std::adjacent_find(cuts.begin(), cuts.end()) != cuts.end()) {
        throw DomainError("band rule cut points must be strictly increasing");
    }
    for (int level : levels) {
        if (level < domain::kAffectMin || level > domain::kAffectMax) {
            throw DomainError(fmt::format("band rule level {} outside [1, 9]", level));
        }
    }
}

int BandRule::apply(double value) const {
    const auto it = std::upper_bound(cuts.begin(), cuts.end(), value);
    return levels[static_cast<std::size_t>(it - cuts.begin())];
}

void StubMoodRule::validate() const {
    arousal_from_eda_std.validate();
    valence_from_emg_std.validate();
}

MoodTrace::MoodTrace(std::vector<MoodTraceEntry> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!entries_[i].state.valid()) {
            throw DomainError(fmt::format("mood trace period {} has invalid state", entries_[i].period));
        }
        if (i > 0 && entries_[i].period <= entries_[i - 1].period) {
            throw DomainError("mood trace periods must be strictly increasing");
        }
    }
}

MoodTrace MoodTrace::parse(std::istream &in) {
    const auto rows = detail::read_rows(in, '\t', {"period", "valence", "arousal"}, "mood_trace.tsv");
    std::vector<MoodTraceEntry> entries;
    entries.reserve(rows.size());
    for (const auto &row : rows) {
        if (row.fields.size() != 3) {
            throw ParseError(fmt::format("mood_trace.tsv:{}: expected 3 fields", row.line));
        }
        entries.push_back(MoodTraceEntry{detail::to_int(row.fields[0], "mood_trace.tsv", row.line),
                                         {detail::to_int(row.fields[1], "mood_trace.tsv", row.line),
                                          detail::to_int(row.fields[2], "mood_trace.tsv", row.line)}});
    }
    try {
        return MoodTrace(std::move(entries));
    } catch (const DomainError &e) {
        throw ParseError(std::string("mood_trace.tsv: ") + e.what());
    }
}

MoodTrace MoodTrace::load(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(fmt::format("cannot open '{}'", path));
    }
    return parse(in);
}

void MoodTrace::write(std::ostream &out) const {
    out << "period\tvalence\tarousal\n";
    for (const auto &e : entries_) {
        out << e.period << '\t' << e.state.valence << '\t' << e.state.arousal << '\n';
    }
}

const MoodTraceEntry &MoodTrace::at(int period) const {
    const auto it = std::upper_bound(entries_.begin(), entries_.end(), period,
                                     [](int p, const MoodTraceEntry &e) { return p < e.period; });
    if (it == entries_.begin()) {
        throw EndOfReplay(fmt::format("mood trace has no entry at or before period {}", period));
    }
    if (period > entries_.back().period) {
        throw EndOfReplay(fmt::format("mood trace exhausted at period {}", period));
    }
    return *std::prev(it);
}

MoodEstimate estimate_mood_stub(const sigproc::PhysioFeatures &features, const StubMoodRule &rule, int period) {
    rule.validate();
    if (!features.eda || !features.emg) {
        throw DomainError("stub mood rule needs EDA and EMG features");
    }
    const int arousal = rule.arousal_from_eda_std.apply(features.eda->window.std);
    const int valence = rule.valence_from_emg_std.apply(features.emg->window.std);
    return MoodEstimate{AffectiveState::make(valence, arousal), period, MoodSource::Stub};
}

MoodEstimate estimate_mood_replay(const MoodTrace &trace, int period) {
    return MoodEstimate{trace.at(period).state, period, MoodSource::Replay};
}

MoodEstimator MoodEstimator::stub(StubMoodRule rule) {
    rule.validate();
    MoodEstimator e;
    e.mode_ = MoodSource::Stub;
    e.rule_ = std::move(rule);
    return e;
}

MoodEstimator MoodEstimator::replay(MoodTrace trace) {
    MoodEstimator e;
    e.mode_ = MoodSource::Replay;
    e.trace_ = std::move(trace);
    return e;
}

MoodEstimate MoodEstimator::estimate(const sigproc::PhysioFeatures &features, int period) const {
    return mode_ == MoodSource::Stub ? estimate_mood_stub(features, rule_, period)
                                     : estimate_mood_replay(trace_, period);
}

}  // namespace drivesafe::inference
