#include "drivesafe/envelope.hpp"

#include <array>
#include <limits>

#include <fmt/core.h>

#include "drivesafe/digest.hpp"
#include "drivesafe/error.hpp"

namespace drivesafe::cpsnet {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 9> kMsgTypeNames{
    "SensorBatch",    "ActivityEvent",      "MoodResult",     "TransactionBatch", "RuleSet",
    "RepairPlanMsg", "SafetyNotification", "CatalogRequest", "CatalogResponse",
};

template <typename T>
T field(const json &j, const std::string &name) {
    const std::string path = "payload." + name;
    if (!j.is_object()) {
        throw DecodeError("payload", "expected an object");
    }
    const auto it = j.find(name);
    if (it == j.end()) {
        throw DecodeError(path, "missing");
    }
    try {
        return it->template get<T>();
    } catch (const json::exception &e) {
        throw DecodeError(path, e.what());
    } catch (const DomainError &e) {
        throw DecodeError(path, e.what());
    } catch (const ConsistencyError &e) {
        throw DecodeError(path, e.what());
    }
}

json state_json(domain::AffectiveState s) {
    return json::array({s.valence, s.arousal});
}

domain::AffectiveState state_from(const json &j, const std::string &path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        throw DecodeError(path, "state must be a [valence, arousal] pair");
    }
    try {
        return domain::AffectiveState::make(j[0].get<int>(), j[1].get<int>());
    } catch (const DomainError &e) {
        throw DecodeError(path, e.what());
    }
}

json frame_json(const sigproc::SensorFrame &f) {
    return json{{"channel", sigproc::to_string(f.channel)},
                {"t0_ms", f.t0_ms},
                {"rate", f.rate},
                {"samples", f.samples}};
}

sigproc::SensorFrame frame_from(const json &j, const std::string &path) {
    if (!j.is_object()) {
        throw DecodeError(path, "expected an object");
    }
    sigproc::SensorFrame f;
    try {
        f.channel = sigproc::parse_channel(j.at("channel").get<std::string>());
        f.t0_ms = j.at("t0_ms").get<std::int64_t>();
        f.rate = j.at("rate").get<double>();
        f.samples = j.at("samples").get<std::vector<double>>();
    } catch (const json::exception &e) {
        throw DecodeError(path, e.what());
    } catch (const DomainError &e) {
        throw DecodeError(path, e.what());
    }
    if (!(f.rate > 0.0)) {
        throw DecodeError(path + ".rate", "must be positive");
    }
    return f;
}

std::string required_string(const json &body, const char *name) {
    const auto it = body.find(name);
    if (it == body.end() || !it->is_string()) {
        throw DecodeError(name, "missing or not a string");
    }
    return it->get<std::string>();
}

std::int64_t required_int(const json &body, const char *name) {
    const auto it = body.find(name);
    if (it == body.end() || !it->is_number_integer()) {
        throw DecodeError(name, "missing or not an integer");
    }
    return it->get<std::int64_t>();
}

}  // namespace

std::string_view to_string(MsgType type) noexcept {
    return kMsgTypeNames[static_cast<std::size_t>(type)];
}

MsgType parse_msg_type(std::string_view text) {
    for (std::size_t i = 0; i < kMsgTypeNames.size(); ++i) {
        if (kMsgTypeNames[i] == text) {
            return static_cast<MsgType>(i);
        }
    }
    throw DecodeError("msg_type", fmt::format("unknown message type '{}'", text));
}

std::string_view to_string(PlanStatus status) noexcept {
    switch (status) {
        case PlanStatus::Initial: return "initial";
        case PlanStatus::Planned: return "planned";
        case PlanStatus::AtTarget: return "at_target";
        case PlanStatus::NoPlan: return "no_plan";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Codec

Frame encode(const Envelope &e) {
    if (e.version != kProtocolVersion) {
        throw DomainError(fmt::format("cannot encode protocol version {}", e.version));
    }
    validate_payload(e.msg_type, e.payload);
    const json body{{"version", e.version},     {"msg_type", to_string(e.msg_type)},
                    {"driver_id", e.driver_id}, {"sender", e.sender},
                    {"receiver", e.receiver},   {"seq", e.seq},
                    {"sent_at", e.sent_at},     {"payload", e.payload}};
    const std::string text = body.dump();
    if (text.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw DomainError("envelope body exceeds the 32-bit length prefix");
    }
    const auto n = static_cast<std::uint32_t>(text.size());
    Frame frame;
    frame.reserve(4 + text.size());
    frame.push_back(static_cast<std::uint8_t>(n >> 24));
    frame.push_back(static_cast<std::uint8_t>(n >> 16));
    frame.push_back(static_cast<std::uint8_t>(n >> 8));
    frame.push_back(static_cast<std::uint8_t>(n));
    frame.insert(frame.end(), text.begin(), text.end());
    return frame;
}

namespace {

std::uint32_t read_length(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) {
        throw DecodeError("length", fmt::format("truncated prefix: {} of 4 bytes", bytes.size()));
    }
    return (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) | (std::uint32_t{bytes[2]} << 8) |
           std::uint32_t{bytes[3]};
}

Envelope decode_body(std::span<const std::uint8_t> body_bytes) {
    json body;
    try {
        body = json::parse(body_bytes.begin(), body_bytes.end());
    } catch (const json::parse_error &e) {
        throw DecodeError("body", e.what());
    }
    if (!body.is_object()) {
        throw DecodeError("body", "expected an object");
    }
    Envelope e;
    e.version = static_cast<int>(required_int(body, "version"));
    if (e.version != kProtocolVersion) {
        throw DecodeError("version", fmt::format("expected {}, got {}", kProtocolVersion, e.version));
    }
    e.msg_type = parse_msg_type(required_string(body, "msg_type"));
    e.driver_id = required_string(body, "driver_id");
    e.sender = required_string(body, "sender");
    e.receiver = required_string(body, "receiver");
    e.seq = required_int(body, "seq");
    e.sent_at = required_int(body, "sent_at");
    const auto it = body.find("payload");
    if (it == body.end()) {
        throw DecodeError("payload", "missing");
    }
    e.payload = *it;
    validate_payload(e.msg_type, e.payload);
    return e;
}

}  // namespace

Envelope decode(std::span<const std::uint8_t> frame) {
    const std::uint32_t n = read_length(frame);
    const std::size_t available = frame.size() - 4;
    if (n > available) {
        throw DecodeError("length", fmt::format("truncated frame: prefix says {} bytes, {} present", n, available));
    }
    if (n < available) {
        throw DecodeError("length", fmt::format("{} trailing bytes after the body", available - n));
    }
    return decode_body(frame.subspan(4, n));
}

std::vector<Envelope> decode_stream(std::span<const std::uint8_t> bytes) {
    std::vector<Envelope> out;
    while (!bytes.empty()) {
        const std::uint32_t n = read_length(bytes);
        if (n > bytes.size() - 4) {
            throw DecodeError("length", fmt::format("truncated frame #{} in stream", out.size()));
        }
        out.push_back(decode_body(bytes.subspan(4, n)));
        bytes = bytes.subspan(4 + n);
    }
    return out;
}

std::string payload_digest(const Envelope &envelope) {
    return fnv1a64_hex(envelope.payload.dump());
}

// ---------------------------------------------------------------------------
// Payloads

void to_json(json &j, const SensorBatch &m) {
    json frames = json::array();
    for (const auto &f : m.frames) {
        frames.push_back(frame_json(f));
    }
    j = json{{"period", m.period}, {"frames", frames}};
}

void from_json(const json &j, SensorBatch &m) {
    m.period = field<int>(j, "period");
    const auto frames = field<json>(j, "frames");
    if (!frames.is_array()) {
        throw DecodeError("payload.frames", "expected an array");
    }
    m.frames.clear();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        m.frames.push_back(frame_from(frames[i], fmt::format("payload.frames[{}]", i)));
    }
}

void to_json(json &j, const ActivityEvent &m) {
    j = json{{"frame_t", m.frame_t}, {"label", m.label}};
}

void from_json(const json &j, ActivityEvent &m) {
    m.frame_t = field<std::int64_t>(j, "frame_t");
    m.label = field<int>(j, "label");
    if (m.label < 0 || m.label >= domain::kActivityCount) {
        throw DecodeError("payload.label", fmt::format("activity {} out of range", m.label));
    }
}

void to_json(json &j, const SafetyNotification &m) {
    j = json{{"activity", m.activity},
             {"meta", domain::to_string(m.meta)},
             {"message", m.message},
             {"confidence", m.confidence},
             {"frame_t", m.frame_t}};
}

void from_json(const json &j, SafetyNotification &m) {
    m.activity = field<int>(j, "activity");
    if (m.activity < 0 || m.activity >= domain::kActivityCount) {
        throw DecodeError("payload.activity", fmt::format("activity {} out of range", m.activity));
    }
    try {
        m.meta = domain::parse_activity_meta(field<std::string>(j, "meta"));
    } catch (const DomainError &e) {
        throw DecodeError("payload.meta", e.what());
    }
    m.message = field<std::string>(j, "message");
    m.confidence = field<double>(j, "confidence");
    m.frame_t = field<std::int64_t>(j, "frame_t");
}

void to_json(json &j, const MoodResult &m) {
    j = json{{"period", m.period},
             {"state", state_json(m.state)},
             {"label", m.label},
             {"source", m.source},
             {"context", m.context}};
}

void from_json(const json &j, MoodResult &m) {
    m.period = field<int>(j, "period");
    m.state = state_from(field<json>(j, "state"), "payload.state");
    m.label = field<std::string>(j, "label");
    m.source = field<std::string>(j, "source");
    m.context = field<mining::ContextTransaction>(j, "context");
}

void to_json(json &j, const TransactionBatch &m) {
    j = json{{"transactions", m.transactions}};
}

void from_json(const json &j, TransactionBatch &m) {
    m.transactions = field<std::vector<mining::ContextTransaction>>(j, "transactions");
}

void to_json(json &j, const RuleSet &m) {
    j = json{{"transactions", m.transactions}, {"rules", m.rules}, {"model", m.model}, {"model_hash", m.model_hash}};
}

void from_json(const json &j, RuleSet &m) {
    m.transactions = field<int>(j, "transactions");
    m.rules = field<std::vector<mining::AssociationRule>>(j, "rules");
    m.model = field<recommend::TransitionModel>(j, "model");
    m.model_hash = field<std::string>(j, "model_hash");
    if (m.model_hash != m.model.snapshot_hash()) {
        throw DecodeError("payload.model_hash", "does not match the carried model");
    }
}

void to_json(json &j, const RepairPlanMsg &m) {
    j = json{{"period", m.period},
             {"plays_in_period", m.plays_in_period},
             {"status", to_string(m.status)},
             {"playing", m.playing ? json(*m.playing) : json(nullptr)},
             {"start", m.start ? state_json(*m.start) : json(nullptr)},
             {"candidates", m.candidates},
             {"plan", m.plan ? json(*m.plan) : json(nullptr)},
             {"model_hash", m.model_hash}};
}

void from_json(const json &j, RepairPlanMsg &m) {
    m.period = field<int>(j, "period");
    m.plays_in_period = field<int>(j, "plays_in_period");
    const auto status = field<std::string>(j, "status");
    bool known = false;
    for (auto s : {PlanStatus::Initial, PlanStatus::Planned, PlanStatus::AtTarget, PlanStatus::NoPlan}) {
        if (to_string(s) == status) {
            m.status = s;
            known = true;
        }
    }
    if (!known) {
        throw DecodeError("payload.status", fmt::format("unknown plan status '{}'", status));
    }
    const auto playing = field<json>(j, "playing");
    m.playing = playing.is_null() ? std::nullopt : std::optional<int>(field<int>(j, "playing"));
    const auto start = field<json>(j, "start");
    m.start = start.is_null() ? std::nullopt : std::optional(state_from(start, "payload.start"));
    m.candidates = field<std::vector<int>>(j, "candidates");
    const auto plan = field<json>(j, "plan");
    m.plan = plan.is_null() ? std::nullopt : std::optional(field<recommend::RepairPlan>(j, "plan"));
    m.model_hash = field<std::string>(j, "model_hash");
}

void to_json(json &j, const CatalogRequest &m) {
    j = json{{"driver_id", m.driver_id}};
}

void from_json(const json &j, CatalogRequest &m) {
    m.driver_id = field<std::string>(j, "driver_id");
}

void to_json(json &j, const CatalogResponse &m) {
    json items = json::array();
    for (const auto &c : m.catalog.items()) {
        items.push_back(json{{"content_id", c.id}, {"title", c.title}, {"valence_tendency", c.valence_tendency}});
    }
    j = json{{"items", items}};
}

void from_json(const json &j, CatalogResponse &m) {
    const auto items = field<json>(j, "items");
    if (!items.is_array()) {
        throw DecodeError("payload.items", "expected an array");
    }
    std::vector<domain::ContentId> out;
    try {
        for (const auto &it : items) {
            out.push_back(domain::ContentId{it.at("content_id").get<int>(), it.at("title").get<std::string>(),
                                            it.at("valence_tendency").get<int>()});
        }
        m.catalog = domain::Catalog(std::move(out));
    } catch (const json::exception &e) {
        throw DecodeError("payload.items", e.what());
    } catch (const DomainError &e) {
        throw DecodeError("payload.items", e.what());
    }
}

void validate_payload(MsgType type, const json &payload) {
    if (!payload.is_object()) {
        throw DecodeError("payload", "expected an object");
    }
    switch (type) {
        case MsgType::SensorBatch: (void)payload.get<SensorBatch>(); break;
        case MsgType::ActivityEvent: (void)payload.get<ActivityEvent>(); break;
        case MsgType::MoodResult: (void)payload.get<MoodResult>(); break;
        case MsgType::TransactionBatch: (void)payload.get<TransactionBatch>(); break;
        case MsgType::RuleSet: (void)payload.get<RuleSet>(); break;
        case MsgType::RepairPlanMsg: (void)payload.get<RepairPlanMsg>(); break;
        case MsgType::SafetyNotification: (void)payload.get<SafetyNotification>(); break;
        case MsgType::CatalogRequest: (void)payload.get<CatalogRequest>(); break;
        case MsgType::CatalogResponse: (void)payload.get<CatalogResponse>(); break;
    }
}

}  // namespace drivesafe::cpsnet
