#pragma once

// Wire envelopes exchanged between platform nodes and their length-prefixed
// frame codec, plus the typed payload bodies.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "drivesafe/domain.hpp"
#include "drivesafe/mining.hpp"
#include "drivesafe/recommend.hpp"
#include "drivesafe/sigproc.hpp"

namespace drivesafe::cpsnet {

inline constexpr int kProtocolVersion = 1;

enum class MsgType {
    SensorBatch,
    ActivityEvent,
    MoodResult,
    TransactionBatch,
    RuleSet,
    RepairPlanMsg,
    SafetyNotification,
    CatalogRequest,
    CatalogResponse,
};

[[nodiscard]] std::string_view to_string(MsgType type) noexcept;
/// Throws DecodeError("msg_type") on unknown names.
[[nodiscard]] MsgType parse_msg_type(std::string_view text);

/// `seq` is strictly increasing per (sender, msg_type) stream, starting at 1.
struct Envelope {
    int version = kProtocolVersion;
    MsgType msg_type = MsgType::SensorBatch;
    std::string driver_id;
    std::string sender;
    std::string receiver;
    std::int64_t seq = 0;
    std::int64_t sent_at = 0;
    nlohmann::json payload = nlohmann::json::object();

    friend bool operator==(const Envelope &, const Envelope &) = default;
};

using Frame = std::vector<std::uint8_t>;

/// 4-byte big-endian body length followed by the JSON body (sorted keys).
[[nodiscard]] Frame encode(const Envelope &envelope);
/// Exactly one frame. Errors name the field: "length" for truncation or
/// trailing bytes, "body" for malformed JSON, "version", "msg_type", the
/// envelope field, or "payload.<name>" for payload fields.
[[nodiscard]] Envelope decode(std::span<const std::uint8_t> frame);
/// Consecutive frames, as written to a frames.bin archive.
[[nodiscard]] std::vector<Envelope> decode_stream(std::span<const std::uint8_t> bytes);

/// FNV-1a 64 of the payload's canonical dump, as 16 hex digits.
[[nodiscard]] std::string payload_digest(const Envelope &envelope);

// ---------------------------------------------------------------------------
// Payloads. from_json on each throws DecodeError naming "payload.<field>".

struct SensorBatch {
    int period = 0;
    std::vector<sigproc::SensorFrame> frames;
};

/// Camera frame stand-in: the ground-truth activity label of the tick.
struct ActivityEvent {
    std::int64_t frame_t = 0;
    int label = 0;
};

struct SafetyNotification {
    int activity = 0;
    domain::ActivityMeta meta = domain::ActivityMeta::SafeDriving;
    std::string message;
    double confidence = 1.0;
    std::int64_t frame_t = 0;
};

struct MoodResult {
    int period = 0;
    domain::AffectiveState state;
    std::string label;
    std::string source;
    mining::ContextTransaction context;
};

struct TransactionBatch {
    std::vector<mining::ContextTransaction> transactions;
};

struct RuleSet {
    int transactions = 0;
    std::vector<mining::AssociationRule> rules;
    recommend::TransitionModel model;
    std::string model_hash;
};

enum class PlanStatus { Initial, Planned, AtTarget, NoPlan };

[[nodiscard]] std::string_view to_string(PlanStatus status) noexcept;

struct RepairPlanMsg {
    int period = -1;
    int plays_in_period = 0;
    PlanStatus status = PlanStatus::Initial;
    std::optional<int> playing;
    std::optional<domain::AffectiveState> start;
    std::vector<int> candidates;
    std::optional<recommend::RepairPlan> plan;
    std::string model_hash;
};

struct CatalogRequest {
    std::string driver_id;
};

struct CatalogResponse {
    domain::Catalog catalog;
};

void to_json(nlohmann::json &j, const SensorBatch &m);
void from_json(const nlohmann::json &j, SensorBatch &m);
void to_json(nlohmann::json &j, const ActivityEvent &m);
void from_json(const nlohmann::json &j, ActivityEvent &m);
void to_json(nlohmann::json &j, const SafetyNotification &m);
void from_json(const nlohmann::json &j, SafetyNotification &m);
void to_json(nlohmann::json &j, const MoodResult &m);
void from_json(const nlohmann::json &j, MoodResult &m);
void to_json(nlohmann::json &j, const TransactionBatch &m);
void from_json(const nlohmann::json &j, TransactionBatch &m);
void to_json(nlohmann::json &j, const RuleSet &m);
void from_json(const nlohmann::json &j, RuleSet &m);
void to_json(nlohmann::json &j, const RepairPlanMsg &m);
void from_json(const nlohmann::json &j, RepairPlanMsg &m);
void to_json(nlohmann::json &j, const CatalogRequest &m);
void from_json(const nlohmann::json &j, CatalogRequest &m);
void to_json(nlohmann::json &j, const CatalogResponse &m);
void from_json(const nlohmann::json &j, CatalogResponse &m);

/// Checks that `payload` parses as the body of `type`.
void validate_payload(MsgType type, const nlohmann::json &payload);

}  // namespace drivesafe::cpsnet
