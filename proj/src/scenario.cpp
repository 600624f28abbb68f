#include "drivesafe/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/core.h>

#include "drivesafe/error.hpp"

namespace drivesafe::scenario {

using nlohmann::json;
using sigproc::Channel;

sigproc::SensorFrame synth_waveform(Channel channel, const WaveProfile &profile, double duration_s, double rate,
                                    std::uint64_t seed) {
    if (!(rate > 0.0) || !(duration_s > 0.0)) {
        throw DomainError("waveform needs a positive rate and duration");
    }
    sigproc::SensorFrame f;
    f.channel = channel;
    f.rate = rate;
    const auto n = static_cast<std::size_t>(std::floor(duration_s * rate + 1e-9));
    f.samples.resize(n);
    inference::Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        double v = profile.baseline + profile.drift_per_s * t;
        for (const auto &c : profile.components) {
            v += c.amplitude * std::sin(2.0 * std::numbers::pi * c.freq_hz * t + c.phase);
        }
        if (profile.sigma > 0.0) {
            v += profile.sigma * rng.normal();
        }
        f.samples[i] = v;
    }
    return f;
}

std::map<Channel, WaveProfile> default_env_profiles() {
    return {
        {Channel::Light, WaveProfile{800.0, 0.0, {}, 20.0, 0.0}},
        {Channel::Temperature, WaveProfile{22.0, 0.0, {}, 0.2, 0.0}},
        {Channel::Humidity, WaveProfile{45.0, 0.0, {}, 1.0, 0.0}},
    };
}

int SessionScript::period_count() const noexcept {
    return static_cast<int>(std::floor(duration_s / period_s + 1e-9));
}

void SessionScript::validate() const {
    if (!(duration_s > 0.0) || !(period_s > 0.0) || tick_ms <= 0) {
        throw ScriptError("duration, period and tick must be positive");
    }
    if (segments.empty()) {
        throw ScriptError("script has no activity segments");
    }
    double cursor = 0.0;
    for (const auto &s : segments) {
        if (s.activity < 0 || s.activity >= domain::kActivityCount) {
            throw ScriptError(fmt::format("activity {} out of range", s.activity));
        }
        if (!(s.end_s > s.start_s)) {
            throw ScriptError(fmt::format("segment [{}, {}) is empty", s.start_s, s.end_s));
        }
        if (s.start_s < cursor) {
            throw ScriptError(fmt::format("segment starting at {} s overlaps the previous one", s.start_s));
        }
        if (s.start_s > cursor) {
            throw ScriptError(fmt::format("segments leave a gap at [{}, {}) s", cursor, s.start_s));
        }
        cursor = s.end_s;
    }
    if (cursor < duration_s) {
        throw ScriptError(fmt::format("segments end at {} s, before the {} s duration", cursor, duration_s));
    }
    if (mood.empty() || mood.front().period != 0) {
        throw ScriptError("mood waypoints must start at period 0");
    }
    for (std::size_t i = 0; i < mood.size(); ++i) {
        if (i > 0 && mood[i].period <= mood[i - 1].period) {
            throw ScriptError("mood waypoint periods must be strictly increasing");
        }
        if (!domain::AffectiveState{mood[i].valence, mood[i].arousal}.valid()) {
            throw ScriptError(fmt::format("waypoint ({}, {}) outside [1, 9]", mood[i].valence, mood[i].arousal));
        }
    }
    for (const auto &[period, content] : content_schedule) {
        if (period < 0 || content < 1) {
            throw ScriptError(fmt::format("bad content schedule entry {} -> {}", period, content));
        }
    }
}

namespace {

WaveProfile profile_from(const json &j) {
    WaveProfile p;
    p.baseline = j.value("baseline", 0.0);
    p.drift_per_s = j.value("drift_per_s", 0.0);
    p.sigma = j.value("sigma", 0.0);
    p.rate = j.value("rate", 0.0);
    for (const auto &c : j.value("components", json::array())) {
        p.components.push_back(WaveComponent{c.at("freq_hz").get<double>(), c.at("amplitude").get<double>(),
                                             c.value("phase", 0.0)});
    }
    return p;
}

json profile_json(const WaveProfile &p) {
    json comps = json::array();
    for (const auto &c : p.components) {
        comps.push_back(json{{"freq_hz", c.freq_hz}, {"amplitude", c.amplitude}, {"phase", c.phase}});
    }
    return json{{"baseline", p.baseline},
                {"drift_per_s", p.drift_per_s},
                {"sigma", p.sigma},
                {"rate", p.rate},
                {"components", comps}};
}

}  // namespace

SessionScript SessionScript::from_json(const json &j) {
    SessionScript s;
    try {
        s.driver_id = j.value("driver_id", s.driver_id);
        s.duration_s = j.value("duration_s", s.duration_s);
        s.period_s = j.value("period_s", s.period_s);
        s.tick_ms = j.value("tick_ms", s.tick_ms);
        s.seed = j.value("seed", s.seed);
        for (const auto &seg : j.at("segments")) {
            s.segments.push_back(
                ScriptSegment{seg.at("start_s").get<double>(), seg.at("end_s").get<double>(), seg.at("activity").get<int>()});
        }
        for (const auto &w : j.at("mood")) {
            s.mood.push_back(MoodWaypoint{w.at("period").get<int>(), w.at("valence").get<int>(), w.at("arousal").get<int>()});
        }
        for (const auto &e : j.value("content_schedule", json::array())) {
            s.content_schedule[e.at("period").get<int>()] = e.at("content").get<int>();
        }
        s.sensors = default_env_profiles();
        if (j.contains("sensors")) {
            for (const auto &[name, p] : j.at("sensors").items()) {
                s.sensors[sigproc::parse_channel(name)] = profile_from(p);
            }
        }
        s.classifier_profile = j.value("classifier_profile", s.classifier_profile);
        if (j.contains("mining")) {
            const auto &x = j.at("mining");
            s.mining.min_support = x.value("min_support", s.mining.min_support);
            s.mining.min_confidence = x.value("min_confidence", s.mining.min_confidence);
            s.mining.every_k_periods = x.value("every_k_periods", s.mining.every_k_periods);
        }
        if (j.contains("planner")) {
            const auto &x = j.at("planner");
            s.planner.horizon = x.value("horizon", s.planner.horizon);
            s.planner.alpha = x.value("alpha", s.planner.alpha);
            s.planner.state_space = x.value("state_space", s.planner.state_space);
            s.planner.target_min_valence = x.value("target_min_valence", s.planner.target_min_valence);
        }
    } catch (const json::exception &e) {
        throw ScriptError(fmt::format("session script: {}", e.what()));
    } catch (const DomainError &e) {
        throw ScriptError(fmt::format("session script: {}", e.what()));
    }
    s.validate();
    return s;
}

json SessionScript::to_json() const {
    json segs = json::array();
    for (const auto &s : segments) {
        segs.push_back(json{{"start_s", s.start_s}, {"end_s", s.end_s}, {"activity", s.activity}});
    }
    json waypoints = json::array();
    for (const auto &w : mood) {
        waypoints.push_back(json{{"period", w.period}, {"valence", w.valence}, {"arousal", w.arousal}});
    }
    json schedule = json::array();
    for (const auto &[period, content] : content_schedule) {
        schedule.push_back(json{{"period", period}, {"content", content}});
    }
    json sensors_j = json::object();
    for (const auto &[channel, p] : sensors) {
        sensors_j[std::string(sigproc::to_string(channel))] = profile_json(p);
    }
    return json{
        {"driver_id", driver_id},
        {"duration_s", duration_s},
        {"period_s", period_s},
        {"tick_ms", tick_ms},
        {"seed", seed},
        {"segments", segs},
        {"mood", waypoints},
        {"content_schedule", schedule},
        {"sensors", sensors_j},
        {"classifier_profile", classifier_profile},
        {"mining",
         {{"min_support", mining.min_support},
          {"min_confidence", mining.min_confidence},
          {"every_k_periods", mining.every_k_periods}}},
        {"planner",
         {{"horizon", planner.horizon},
          {"alpha", planner.alpha},
          {"state_space", planner.state_space},
          {"target_min_valence", planner.target_min_valence}}},
    };
}

SessionScript SessionScript::load(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ScriptError(fmt::format("cannot open session script '{}'", path));
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error &e) {
        throw ScriptError(fmt::format("session script '{}': {}", path, e.what()));
    }
    auto script = from_json(j);
    if (script.classifier_profile != "identity") {
        const std::filesystem::path p(script.classifier_profile);
        if (p.is_relative()) {
            script.classifier_profile = (std::filesystem::absolute(path).parent_path() / p).string();
        }
    }
    return script;
}

inference::MoodTrace mood_trace(const SessionScript &script) {
    script.validate();
    std::vector<inference::MoodTraceEntry> rows;
    std::size_t w = 0;
    for (int p = 0; p < script.period_count(); ++p) {
        while (w + 1 < script.mood.size() && script.mood[w + 1].period <= p) {
            ++w;
        }
        rows.push_back({p, domain::AffectiveState::make(script.mood[w].valence, script.mood[w].arousal)});
    }
    return inference::MoodTrace(std::move(rows));
}

cpsnet::ActivityTruth activity_truth(const SessionScript &script) {
    script.validate();
    std::vector<cpsnet::ActivitySegment> segs;
    const auto duration_ms = std::llround(script.duration_s * 1000.0);
    for (const auto &s : script.segments) {
        const auto start = std::llround(s.start_s * 1000.0);
        const auto end = std::min<std::int64_t>(std::llround(s.end_s * 1000.0), duration_ms);
        if (start < end) {
            segs.push_back({start, end, s.activity});
        }
    }
    return cpsnet::ActivityTruth(std::move(segs));
}

cpsnet::Manifest emit_session(const SessionScript &script, const std::filesystem::path &dir) {
    script.validate();
    std::filesystem::create_directories(dir / "sensors");
    auto open = [&](const std::filesystem::path &rel) {
        std::ofstream out(dir / rel);
        if (!out) {
            throw ScriptError(fmt::format("cannot write '{}'", (dir / rel).string()));
        }
        return out;
    };

    cpsnet::Manifest m;
    m.driver_id = script.driver_id;
    m.seed = script.seed;
    m.duration_ms = std::llround(script.duration_s * 1000.0);
    m.period_ms = std::llround(script.period_s * 1000.0);
    m.tick_ms = script.tick_ms;
    m.mining = script.mining;
    m.planner = script.planner;
    m.content_schedule = script.content_schedule;
    m.mood_mode = inference::MoodSource::Replay;
    m.base_dir = dir;

    auto sensors = script.sensors;
    for (const auto &[channel, profile] : default_env_profiles()) {
        sensors.try_emplace(channel, profile);
    }
    for (const auto &[channel, profile] : sensors) {
        const double rate = profile.rate > 0.0 ? profile.rate : sigproc::default_rate(channel);
        // Distinct, order-independent stream per channel.
        const std::uint64_t seed = script.seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(channel) + 1));
        const auto frame = synth_waveform(channel, profile, script.duration_s, rate, seed);
        const auto rel = std::filesystem::path("sensors") / fmt::format("{}.csv", sigproc::to_string(channel));
        auto out = open(rel);
        sigproc::write_sensor_csv(out, frame);
        m.sensors[channel] = cpsnet::SensorSource{rel.string(), rate};
    }

    {
        auto out = open("mood_trace.tsv");
        mood_trace(script).write(out);
        m.mood_trace = "mood_trace.tsv";
    }
    {
        auto out = open("activity_truth.tsv");
        activity_truth(script).write(out);
        m.activity_truth = "activity_truth.tsv";
    }
    {
        const auto profile = script.classifier_profile == "identity"
                                 ? inference::ClassifierProfile::identity(script.seed)
                                 : inference::ClassifierProfile::load(script.classifier_profile, script.seed);
        auto out = open("profile.tsv");
        profile.write(out);
        m.classifier_profile = "profile.tsv";
    }
    {
        auto out = open("catalog.tsv");
        domain::Catalog::builtin().write(out);
        m.catalog = "catalog.tsv";
    }
    m.validate();
    m.write((dir / "manifest.json").string());
    return m;
}

}  // namespace drivesafe::scenario
