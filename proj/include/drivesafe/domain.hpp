#pragma once

// Shared vocabulary: activity classes, affective states, the valence/arousal
// mood table, the content catalog and environment discretization.

#include <array>
#include <compare>
#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace drivesafe::domain {

inline constexpr int kActivityCount = 10;
inline constexpr int kAffectMin = 1;
inline constexpr int kAffectMax = 9;
inline constexpr int kAffectLevels = kAffectMax - kAffectMin + 1;
inline constexpr int kMoodCells = kAffectLevels * kAffectLevels;

enum class ActivityMeta { SafeDriving, DistractedDriving };

struct ActivityClass {
    int id = 0;
    std::string description;
    ActivityMeta meta = ActivityMeta::SafeDriving;
};

/// Integer valence/arousal coordinates, both in [1, 9].
struct AffectiveState {
    int valence = 5;
    int arousal = 5;

    friend auto operator<=>(const AffectiveState &, const AffectiveState &) = default;

    /// Throws DomainError when either component is out of range.
    [[nodiscard]] static AffectiveState make(int valence, int arousal);
    [[nodiscard]] bool valid() const noexcept;
    /// Row-major cell index in [0, 81): (valence - 1) * 9 + (arousal - 1).
    [[nodiscard]] int cell() const;
    [[nodiscard]] static AffectiveState from_cell(int cell);
};

enum class Polarity { Negative, Neutral, Positive };

struct MoodLabel {
    std::string name;
    AffectiveState cell;
    Polarity polarity = Polarity::Neutral;

    friend bool operator==(const MoodLabel &, const MoodLabel &) = default;
};

/// Polarity by valence coordinate: < 5 negative, 5 neutral, > 5 positive.
[[nodiscard]] Polarity polarity_of(AffectiveState state) noexcept;

/// The 81-cell valence/arousal -> mood label map. Coordinates identify a
/// cell; label text repeats across cells.
class MoodTable {
  public:
    [[nodiscard]] static MoodTable parse(std::istream &in);
    [[nodiscard]] static MoodTable load(const std::string &path);
    /// Table compiled in from data/moods.tsv.
    [[nodiscard]] static const MoodTable &builtin();

    [[nodiscard]] const MoodLabel &lookup(AffectiveState state) const;
    /// Validates that `label.name` is the table's label at `label.cell`.
    [[nodiscard]] Polarity polarity(const MoodLabel &label) const;
    /// Polarity for a bare label name; the name must exist and all of its
    /// cells must agree on polarity.
    [[nodiscard]] Polarity polarity(std::string_view name) const;
    [[nodiscard]] std::vector<AffectiveState> cells_named(std::string_view name) const;
    [[nodiscard]] const std::array<MoodLabel, kMoodCells> &cells() const noexcept { return cells_; }

  private:
    std::array<MoodLabel, kMoodCells> cells_{};
};

[[nodiscard]] const MoodLabel &mood_lookup(AffectiveState state);
[[nodiscard]] Polarity mood_polarity(const MoodLabel &label);

class ActivityTable {
  public:
    [[nodiscard]] static ActivityTable parse(std::istream &in);
    [[nodiscard]] static ActivityTable load(const std::string &path);
    [[nodiscard]] static const ActivityTable &builtin();

    [[nodiscard]] const ActivityClass &at(int id) const;
    [[nodiscard]] const std::array<ActivityClass, kActivityCount> &all() const noexcept { return classes_; }

  private:
    std::array<ActivityClass, kActivityCount> classes_{};
};

/// SafeDriving iff id == 0. Throws DomainError for ids outside [0, 9].
[[nodiscard]] ActivityMeta activity_meta(int id);

struct ContentId {
    int id = 0;
    std::string title;
    int valence_tendency = 0;

    friend bool operator==(const ContentId &, const ContentId &) = default;
};

class Catalog {
  public:
    Catalog() = default;
    /// Throws DomainError on duplicate or non-positive ids.
    explicit Catalog(std::vector<ContentId> items);

    [[nodiscard]] static Catalog parse(std::istream &in);
    [[nodiscard]] static Catalog load(const std::string &path);
    [[nodiscard]] static const Catalog &builtin();

    [[nodiscard]] const ContentId *find(int id) const noexcept;
    /// Sorted ascending.
    [[nodiscard]] std::vector<int> ids() const;
    [[nodiscard]] const std::vector<ContentId> &items() const noexcept { return items_; }
    [[nodiscard]] bool empty() const noexcept { return items_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }

    void write(std::ostream &out) const;

  private:
    std::vector<ContentId> items_;
};

enum class LightLevel { Low, Medium, High };
enum class TemperatureLevel { Cold, Comfort, Hot };
enum class HumidityLevel { Dry, Comfort, Humid };

struct EnvironmentBucket {
    LightLevel light = LightLevel::Medium;
    TemperatureLevel temperature = TemperatureLevel::Comfort;
    HumidityLevel humidity = HumidityLevel::Comfort;

    friend bool operator==(const EnvironmentBucket &, const EnvironmentBucket &) = default;
};

/// Cut points between the three levels of each axis. A value equal to a
/// lower cut point belongs to the middle bucket; equal to the upper cut
/// point also belongs to the middle bucket.
struct EnvThresholds {
    double light_low_lux = 500.0;
    double light_high_lux = 1000.0;
    double temp_cold_c = 18.0;
    double temp_hot_c = 26.0;
    double humidity_dry_pct = 30.0;
    double humidity_humid_pct = 60.0;

    void validate() const;
};

[[nodiscard]] EnvironmentBucket bucketize(double light_lux, double temp_c, double humidity_pct,
                                          const EnvThresholds &thresholds = {});

[[nodiscard]] std::string_view to_string(ActivityMeta meta) noexcept;
[[nodiscard]] std::string_view to_string(Polarity polarity) noexcept;
[[nodiscard]] std::string_view to_string(LightLevel level) noexcept;
[[nodiscard]] std::string_view to_string(TemperatureLevel level) noexcept;
[[nodiscard]] std::string_view to_string(HumidityLevel level) noexcept;
[[nodiscard]] ActivityMeta parse_activity_meta(std::string_view text);

}  // namespace drivesafe::domain
