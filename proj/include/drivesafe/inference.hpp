#pragma once

// Stand-ins for the activity and mood models, and the binary
// classification report used to score them.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drivesafe/domain.hpp"
#include "drivesafe/sigproc.hpp"

namespace drivesafe::inference {

using domain::ActivityMeta;
using domain::AffectiveState;

struct ActivityObservation {
    std::int64_t t_ms = 0;
    int activity = 0;
    double confidence = 1.0;

    [[nodiscard]] ActivityMeta meta() const { return domain::activity_meta(activity); }
    friend bool operator==(const ActivityObservation &, const ActivityObservation &) = default;
};

using ConfusionRows = std::array<std::array<double, domain::kActivityCount>, domain::kActivityCount>;

/// Row-stochastic 10x10 matrix: row = true class, column = predicted class.
struct ClassifierProfile {
    ConfusionRows confusion{};
    std::uint64_t seed = 0;

    /// Throws DomainError unless entries are >= 0 and every row sums to 1 +- 1e-9.
    void validate() const;

    [[nodiscard]] static ClassifierProfile identity(std::uint64_t seed = 0);
    /// Rows normalized from raw counts; an all-zero row becomes the identity row.
    [[nodiscard]] static ClassifierProfile from_counts(
        const std::array<std::array<double, domain::kActivityCount>, domain::kActivityCount> &counts,
        std::uint64_t seed = 0);

    [[nodiscard]] static ClassifierProfile parse(std::istream &in, std::uint64_t seed = 0);
    [[nodiscard]] static ClassifierProfile load(const std::string &path, std::uint64_t seed = 0);
    void write(std::ostream &out) const;
};

/// SplitMix64-seeded xoshiro256** generator. Chosen over std engines +
/// distributions because its output is specified bit-for-bit.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) noexcept;

    std::uint64_t next() noexcept;
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Standard normal via Box-Muller (no cached second value).
    double normal() noexcept;
    [[nodiscard]] std::uint64_t draws() const noexcept { return draws_; }

  private:
    std::array<std::uint64_t, 4> s_{};
    std::uint64_t draws_ = 0;
};

/// Draws a predicted class from the profile row of `true_class`. Consumes
/// exactly one uniform draw from `rng`.
[[nodiscard]] ActivityObservation classify_activity(const ClassifierProfile &profile, int true_class, Rng &rng,
                                                    std::int64_t t_ms = 0);

/// Profile plus the RNG stream it draws from; one instance per camera stream.
class ActivityClassifier {
  public:
    explicit ActivityClassifier(ClassifierProfile profile);
    [[nodiscard]] ActivityObservation classify(int true_class, std::int64_t t_ms);
    [[nodiscard]] const ClassifierProfile &profile() const noexcept { return profile_; }

  private:
    ClassifierProfile profile_;
    Rng rng_;
};

// ---------------------------------------------------------------------------
// Classification report

struct ClassMetrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    std::int64_t support = 0;
    /// True when precision was set to 0 because nothing was predicted positive.
    bool zero_division = false;
};

struct ClassificationReport {
    ClassMetrics safe;
    ClassMetrics distracted;
    ClassMetrics micro_avg;  ///< pooled TP/FP/FN; equals accuracy for single-label data
    ClassMetrics macro_avg;  ///< unweighted mean of the class rows
    ClassMetrics weighted_avg;
    double accuracy = 0;

    [[nodiscard]] const ClassMetrics &of(ActivityMeta meta) const noexcept {
        return meta == ActivityMeta::SafeDriving ? safe : distracted;
    }
};

/// Confusion counts keyed [true][predicted], index 0 = SafeDriving.
using BinaryConfusion = std::array<std::array<std::int64_t, 2>, 2>;

[[nodiscard]] ClassificationReport classification_report(std::span<const std::pair<ActivityMeta, ActivityMeta>> pairs);
[[nodiscard]] ClassificationReport classification_report(const BinaryConfusion &confusion);
/// Collapses ten-class (true, predicted) ids to meta-classes first.
[[nodiscard]] ClassificationReport classification_report_from_ids(std::span<const std::pair<int, int>> pairs);
[[nodiscard]] BinaryConfusion confusion_of(std::span<const std::pair<ActivityMeta, ActivityMeta>> pairs);

/// Plain-text table in the layout of a scikit-learn report.
[[nodiscard]] std::string format_report(const ClassificationReport &report);

// ---------------------------------------------------------------------------
// Mood estimation

enum class MoodSource { Stub, Replay };

struct MoodEstimate {
    AffectiveState state;
    int period_index = 0;
    MoodSource source = MoodSource::Stub;

    friend bool operator==(const MoodEstimate &, const MoodEstimate &) = default;
};

[[nodiscard]] std::string_view to_string(MoodSource source) noexcept;

/// Maps a feature value to a level through ascending cut points:
/// value < cuts[0] -> levels[0], ..., value >= cuts.back() -> levels.back().
struct BandRule {
    std::vector<double> cuts;
    std::vector<int> levels;

    void validate() const;
    [[nodiscard]] int apply(double value) const;
};

/// Arousal from the EDA window std (quartile bands), valence from the EMG
/// window std (more muscle tone, lower valence).
struct StubMoodRule {
    BandRule arousal_from_eda_std{{0.05, 0.1, 0.2}, {1, 3, 6, 8}};
    BandRule valence_from_emg_std{{0.05, 0.1, 0.2}, {7, 5, 4, 2}};

    void validate() const;
};

struct MoodTraceEntry {
    int period = 0;
    AffectiveState state;

    friend bool operator==(const MoodTraceEntry &, const MoodTraceEntry &) = default;
};

class MoodTrace {
  public:
    MoodTrace() = default;
    /// Periods must be strictly increasing; states valid.
    explicit MoodTrace(std::vector<MoodTraceEntry> entries);

    [[nodiscard]] static MoodTrace parse(std::istream &in);
    [[nodiscard]] static MoodTrace load(const std::string &path);
    void write(std::ostream &out) const;

    /// Entry with the greatest period <= `period`. Throws EndOfReplay past
    /// the last entry or before the first.
    [[nodiscard]] const MoodTraceEntry &at(int period) const;
    [[nodiscard]] const std::vector<MoodTraceEntry> &entries() const noexcept { return entries_; }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

  private:
    std::vector<MoodTraceEntry> entries_;
};

[[nodiscard]] MoodEstimate estimate_mood_stub(const sigproc::PhysioFeatures &features, const StubMoodRule &rule,
                                              int period);
[[nodiscard]] MoodEstimate estimate_mood_replay(const MoodTrace &trace, int period);

/// Mode-dispatching front end used by the edge node.
class MoodEstimator {
  public:
    static MoodEstimator stub(StubMoodRule rule);
    static MoodEstimator replay(MoodTrace trace);

    [[nodiscard]] MoodEstimate estimate(const sigproc::PhysioFeatures &features, int period) const;
    [[nodiscard]] MoodSource mode() const noexcept { return mode_; }

  private:
    MoodSource mode_ = MoodSource::Stub;
    StubMoodRule rule_;
    MoodTrace trace_;
};

}  // namespace drivesafe::inference
