#pragma once

// Discrete-event message fabric and the node orchestration loop.
//
// Each node is an actor that only reacts to delivered envelopes and its own
// timers. The Network owns the clock: it encodes every envelope at send
// time, schedules its decode-and-deliver on the link, and logs each delivery
// or drop.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "drivesafe/envelope.hpp"
#include "drivesafe/manifest.hpp"

namespace drivesafe::cpsnet {

/// Min-heap of timed actions; equal times run in insertion order.
class Scheduler {
  public:
    using Action = std::function<void()>;

    std::uint64_t schedule(std::int64_t t_ms, Action action);
    void cancel(std::uint64_t id);
    /// Runs the next live action. Returns false when nothing is pending.
    bool step();
    [[nodiscard]] std::optional<std::int64_t> next_time();
    [[nodiscard]] std::int64_t now() const noexcept { return now_; }

  private:
    struct Entry {
        std::int64_t t_ms;
        std::uint64_t id;
        bool operator>(const Entry &o) const noexcept { return t_ms != o.t_ms ? t_ms > o.t_ms : id > o.id; }
    };
    void skip_cancelled();

    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
    std::map<std::uint64_t, Action> actions_;
    std::uint64_t next_id_ = 0;
    std::int64_t now_ = 0;
};

enum class EventKind { Deliver, Drop };

struct EventRecord {
    std::int64_t t_ms = 0;
    EventKind kind = EventKind::Deliver;
    std::string from;
    std::string to;
    MsgType msg_type = MsgType::SensorBatch;
    std::int64_t seq = 0;
    std::string payload_digest;
    /// Drops only: "capacity", "node_down" or "sender_down".
    std::string reason;

    friend bool operator==(const EventRecord &, const EventRecord &) = default;
};

[[nodiscard]] nlohmann::json to_json(const EventRecord &event);
[[nodiscard]] EventRecord event_from_json(const nlohmann::json &j);

enum class RunMode { Simulated, Realtime };

[[nodiscard]] std::string_view to_string(RunMode mode) noexcept;
[[nodiscard]] RunMode parse_run_mode(std::string_view text);

class Network {
  public:
    using Handler = std::function<void(const Envelope &)>;

    Network(std::string driver_id, std::vector<LinkConfig> links, std::vector<FailureWindow> failures = {});

    void attach(const std::string &node, Handler handler);
    /// Stamps seq and sent_at, encodes, and schedules delivery at
    /// max(now + latency, last receive on the link). A full link drops its
    /// oldest in-flight frame. ScenarioError if no such link exists.
    void send(const std::string &from, const std::string &to, MsgType type, nlohmann::json payload);
    void at(std::int64_t t_ms, Scheduler::Action action);

    /// Runs until no events remain. Realtime mode paces events against the
    /// wall clock, `speed` simulated ms per wall ms.
    void run(RunMode mode = RunMode::Simulated, double speed = 1.0);

    [[nodiscard]] std::int64_t now() const noexcept { return scheduler_.now(); }
    [[nodiscard]] bool is_down(const std::string &node, std::int64_t t_ms) const;
    [[nodiscard]] const std::vector<EventRecord> &events() const noexcept { return events_; }
    /// Delivered frames, one per Deliver event, in log order.
    [[nodiscard]] const std::vector<Frame> &frames() const noexcept { return frames_; }

  private:
    struct InFlight {
        std::uint64_t ticket;
        std::string digest;
        MsgType type;
        std::int64_t seq;
    };
    struct LinkState {
        LinkConfig config;
        std::deque<InFlight> in_flight;
        std::int64_t last_receive = 0;
    };

    void log(std::int64_t t, EventKind kind, const std::string &from, const std::string &to, MsgType type,
             std::int64_t seq, std::string digest, std::string reason = {});

    std::string driver_id_;
    Scheduler scheduler_;
    std::map<std::pair<std::string, std::string>, LinkState> links_;
    std::vector<FailureWindow> failures_;
    std::map<std::string, Handler> handlers_;
    std::map<std::pair<std::string, MsgType>, std::int64_t> seq_;
    std::vector<EventRecord> events_;
    std::vector<Frame> frames_;
};

struct RunOptions {
    RunMode mode = RunMode::Simulated;
    /// Overrides the manifest seed.
    std::optional<std::uint64_t> seed;
    double realtime_speed = 1.0;
};

struct RunResult {
    std::vector<EventRecord> events;
    std::vector<Frame> frames;
    /// (true class, predicted class) per classified camera tick.
    std::vector<std::pair<int, int>> activity_pairs;
    std::vector<mining::ContextTransaction> transactions;
    std::vector<mining::AssociationRule> rules;
    recommend::TransitionModel model;
    /// Every RepairPlanMsg the vehicle sent, in order.
    std::vector<RepairPlanMsg> plans;
    /// Every RuleSet the edge sent, in order.
    std::vector<RuleSet> rule_sets;
    /// Non-fatal conditions (skipped periods, stale plans, end of replay).
    std::vector<std::string> notes;

    [[nodiscard]] std::size_t count(MsgType type, EventKind kind = EventKind::Deliver) const;
};

/// Loads inputs (ScenarioError before anything runs) and executes the loop.
[[nodiscard]] RunResult run_scenario(const Manifest &manifest, const RunOptions &options = {});
[[nodiscard]] RunResult run_scenario(const Manifest &manifest, const ScenarioInputs &inputs,
                                     const RunOptions &options = {});

void write_event_log(std::ostream &out, std::span<const EventRecord> events);
[[nodiscard]] std::vector<EventRecord> read_event_log(std::istream &in);
void write_frames(std::ostream &out, std::span<const Frame> frames);

/// events.jsonl, frames.bin, transactions.jsonl, rules.jsonl, plans.jsonl,
/// model.tsv and activity_report.txt under `dir`.
void write_outputs(const RunResult &result, const std::filesystem::path &dir);

}  // namespace drivesafe::cpsnet
