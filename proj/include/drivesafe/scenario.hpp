#pragma once

// Scripted driver sessions rendered to replay bundles that run_scenario can
// execute directly.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "drivesafe/inference.hpp"
#include "drivesafe/manifest.hpp"
#include "drivesafe/sigproc.hpp"

namespace drivesafe::scenario {

struct WaveComponent {
    double freq_hz = 0;
    double amplitude = 0;
    double phase = 0;  ///< radians
};

/// baseline + drift_per_s * t + sum(amplitude * sin(2 pi f t + phase)) + N(0, sigma^2)
struct WaveProfile {
    double baseline = 0;
    double drift_per_s = 0;
    std::vector<WaveComponent> components;
    double sigma = 0;
    double rate = 0;  ///< 0: the channel's default rate
};

/// floor(duration_s * rate) samples from t = 0. Deterministic per seed.
[[nodiscard]] sigproc::SensorFrame synth_waveform(sigproc::Channel channel, const WaveProfile &profile,
                                                  double duration_s, double rate, std::uint64_t seed);

struct ScriptSegment {
    double start_s = 0;
    double end_s = 0;
    int activity = 0;
};

struct MoodWaypoint {
    int period = 0;
    int valence = 5;
    int arousal = 5;
};

struct SessionScript {
    std::string driver_id = "driver-1";
    double duration_s = 600;
    double period_s = 120;
    std::int64_t tick_ms = 300;
    std::uint64_t seed = 1;
    std::vector<ScriptSegment> segments;
    /// Held stepwise until the next waypoint.
    std::vector<MoodWaypoint> mood;
    std::map<int, int> content_schedule;
    /// Cabin channels are always emitted (defaults filled in); physiological
    /// channels only when listed.
    std::map<sigproc::Channel, WaveProfile> sensors;
    /// "identity" or a path to a profile.tsv.
    std::string classifier_profile = "identity";
    cpsnet::MiningConfig mining;
    cpsnet::PlannerConfig planner;

    /// Throws ScriptError: segments must be non-overlapping and cover
    /// [0, duration); waypoint periods strictly increasing from 0.
    void validate() const;
    [[nodiscard]] int period_count() const noexcept;

    [[nodiscard]] static SessionScript from_json(const nlohmann::json &j);
    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] static SessionScript load(const std::string &path);
};

/// Light 800 lux, temperature 22 C, humidity 45 %, small noise.
[[nodiscard]] std::map<sigproc::Channel, WaveProfile> default_env_profiles();

/// One row per period.
[[nodiscard]] inference::MoodTrace mood_trace(const SessionScript &script);
[[nodiscard]] cpsnet::ActivityTruth activity_truth(const SessionScript &script);

/// Writes sensors/<channel>.csv, mood_trace.tsv, activity_truth.tsv,
/// profile.tsv, catalog.tsv and manifest.json under `dir`; returns the
/// manifest (base_dir = dir).
cpsnet::Manifest emit_session(const SessionScript &script, const std::filesystem::path &dir);

}  // namespace drivesafe::scenario
