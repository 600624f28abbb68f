#pragma once

// Scenario manifest: node links, replay inputs, thresholds and run
// parameters for one simulated drive.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "drivesafe/domain.hpp"
#include "drivesafe/inference.hpp"
#include "drivesafe/recommend.hpp"
#include "drivesafe/sigproc.hpp"

namespace drivesafe::cpsnet {

enum class NodeKind { BANSink, EnvGateway, CameraNode, OnVehicle, Edge, Cloud };

/// Node names used as envelope sender/receiver and in link configs.
[[nodiscard]] std::string_view node_name(NodeKind kind) noexcept;
[[nodiscard]] NodeKind parse_node(std::string_view name);

struct LinkConfig {
    std::string from;
    std::string to;
    std::int64_t latency_ms = 0;
    /// Maximum messages in flight; 0 means unbounded.
    std::size_t capacity = 0;

    friend bool operator==(const LinkConfig &, const LinkConfig &) = default;
};

/// The eight directed links of the platform, zero latency, unbounded.
[[nodiscard]] std::vector<LinkConfig> default_links();

/// Deliveries to `node` in [start_ms, end_ms) are dropped.
struct FailureWindow {
    std::string node;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;

    friend bool operator==(const FailureWindow &, const FailureWindow &) = default;
};

struct MiningConfig {
    double min_support = 0.1;
    double min_confidence = 0.6;
    int every_k_periods = 5;

    friend bool operator==(const MiningConfig &, const MiningConfig &) = default;
};

struct PlannerConfig {
    int horizon = recommend::kDefaultHorizon;
    double alpha = 1.0;
    std::string state_space = "full";
    int target_min_valence = 6;

    friend bool operator==(const PlannerConfig &, const PlannerConfig &) = default;
};

struct SensorSource {
    std::string path;
    double rate = 0;

    friend bool operator==(const SensorSource &, const SensorSource &) = default;
};

struct ActivitySegment {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    int activity = 0;

    friend bool operator==(const ActivitySegment &, const ActivitySegment &) = default;
};

/// Ground-truth activity timeline, segments sorted and non-overlapping.
class ActivityTruth {
  public:
    ActivityTruth() = default;
    /// Throws DomainError on empty, inverted or overlapping segments.
    explicit ActivityTruth(std::vector<ActivitySegment> segments);

    /// TSV: start_ms, end_ms, activity.
    [[nodiscard]] static ActivityTruth parse(std::istream &in);
    [[nodiscard]] static ActivityTruth load(const std::string &path);
    void write(std::ostream &out) const;

    /// Activity at `t_ms`; DomainError outside every segment.
    [[nodiscard]] int at(std::int64_t t_ms) const;
    [[nodiscard]] const std::vector<ActivitySegment> &segments() const noexcept { return segments_; }

  private:
    std::vector<ActivitySegment> segments_;
};

/// Relative paths are resolved against `base_dir` (the manifest's directory).
struct Manifest {
    int version = 1;
    std::string driver_id = "driver-1";
    std::uint64_t seed = 1;
    std::int64_t duration_ms = 600'000;
    std::int64_t tick_ms = 300;
    std::int64_t period_ms = 120'000;
    /// Physiological samples per channel shipped in each period's batch.
    std::size_t points_per_period = 8064;
    std::size_t env_window = sigproc::kDefaultEnvWindow;

    MiningConfig mining;
    PlannerConfig planner;

    inference::MoodSource mood_mode = inference::MoodSource::Replay;
    std::string mood_trace;
    inference::StubMoodRule stub_rule;

    std::string classifier_profile;  ///< empty: identity
    std::string catalog;             ///< empty: built-in catalog
    std::string seed_model;          ///< optional model.tsv
    std::string activity_truth;
    std::map<sigproc::Channel, SensorSource> sensors;
    domain::EnvThresholds thresholds;
    std::map<int, int> content_schedule;  ///< period -> content id
    std::vector<LinkConfig> links;        ///< overrides for default_links()
    std::vector<FailureWindow> failures;

    std::filesystem::path base_dir;

    /// Range checks only; file existence is checked by load_inputs().
    void validate() const;
    [[nodiscard]] std::string resolve(const std::string &path) const;
    /// default_links() with overrides applied, in a stable order.
    [[nodiscard]] std::vector<LinkConfig> effective_links() const;
    [[nodiscard]] int period_count() const noexcept { return static_cast<int>(duration_ms / period_ms); }

    [[nodiscard]] static Manifest from_json(const nlohmann::json &j, std::filesystem::path base_dir);
    [[nodiscard]] nlohmann::json to_json() const;
    /// Throws ScenarioError when the file is missing or malformed.
    [[nodiscard]] static Manifest load(const std::string &path);
    void write(const std::string &path) const;
};

/// Everything a run needs, read from disk up front.
struct ScenarioInputs {
    ActivityTruth truth;
    inference::ClassifierProfile profile;
    domain::Catalog catalog;
    std::optional<inference::MoodTrace> mood_trace;
    std::optional<recommend::TransitionModel> seed_model;
    std::map<sigproc::Channel, sigproc::SensorFrame> frames;
};

/// Throws ScenarioError naming the first missing or unreadable input.
[[nodiscard]] ScenarioInputs load_inputs(const Manifest &manifest);

}  // namespace drivesafe::cpsnet
