#include "drivesafe/manifest.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/core.h>

#include "drivesafe/error.hpp"
#include "tsv.hpp"

namespace drivesafe::cpsnet {

using nlohmann::json;

std::string_view node_name(NodeKind kind) noexcept {
    switch (kind) {
        case NodeKind::BANSink: return "ban";
        case NodeKind::EnvGateway: return "envgw";
        case NodeKind::CameraNode: return "camera";
        case NodeKind::OnVehicle: return "vehicle";
        case NodeKind::Edge: return "edge";
        case NodeKind::Cloud: return "cloud";
    }
    return "?";
}

NodeKind parse_node(std::string_view name) {
    for (auto k : {NodeKind::BANSink, NodeKind::EnvGateway, NodeKind::CameraNode, NodeKind::OnVehicle, NodeKind::Edge,
                   NodeKind::Cloud}) {
        if (node_name(k) == name) {
            return k;
        }
    }
    throw DomainError(fmt::format("unknown node '{}'", name));
}

std::vector<LinkConfig> default_links() {
    return {
        {"ban", "edge", 0, 0},     {"envgw", "edge", 0, 0},   {"camera", "edge", 0, 0},
        {"edge", "vehicle", 0, 0}, {"vehicle", "edge", 0, 0}, {"edge", "cloud", 0, 0},
        {"vehicle", "cloud", 0, 0}, {"cloud", "vehicle", 0, 0},
    };
}

// ---------------------------------------------------------------------------
// ActivityTruth

ActivityTruth::ActivityTruth(std::vector<ActivitySegment> segments) : segments_(std::move(segments)) {
    std::sort(segments_.begin(), segments_.end(),
              [](const ActivitySegment &a, const ActivitySegment &b) { return a.start_ms < b.start_ms; });
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto &s = segments_[i];
        if (s.end_ms <= s.start_ms) {
            throw DomainError(fmt::format("activity segment [{}, {}) is empty", s.start_ms, s.end_ms));
        }
        (void)domain::activity_meta(s.activity);
        if (i > 0 && segments_[i - 1].end_ms > s.start_ms) {
            throw DomainError(fmt::format("activity segments overlap at {} ms", s.start_ms));
        }
    }
}

ActivityTruth ActivityTruth::parse(std::istream &in) {
    const auto rows = detail::read_rows(in, '\t', {"start_ms", "end_ms", "activity"}, "activity_truth.tsv");
    std::vector<ActivitySegment> segments;
    for (const auto &row : rows) {
        if (row.fields.size() != 3) {
            throw ParseError(fmt::format("activity_truth.tsv:{}: expected 3 fields", row.line));
        }
        segments.push_back({detail::to_int64(row.fields[0], "activity_truth.tsv", row.line),
                            detail::to_int64(row.fields[1], "activity_truth.tsv", row.line),
                            detail::to_int(row.fields[2], "activity_truth.tsv", row.line)});
    }
    try {
        return ActivityTruth(std::move(segments));
    } catch (const DomainError &e) {
        throw ParseError(std::string("activity_truth.tsv: ") + e.what());
    }
}

ActivityTruth ActivityTruth::load(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(fmt::format("cannot open '{}'", path));
    }
    return parse(in);
}

void ActivityTruth::write(std::ostream &out) const {
    out << "start_ms\tend_ms\tactivity\n";
    for (const auto &s : segments_) {
        out << fmt::format("{}\t{}\t{}\n", s.start_ms, s.end_ms, s.activity);
    }
}

int ActivityTruth::at(std::int64_t t_ms) const {
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t_ms,
                               [](std::int64_t t, const ActivitySegment &s) { return t < s.start_ms; });
    if (it == segments_.begin() || std::prev(it)->end_ms <= t_ms) {
        throw DomainError(fmt::format("no ground-truth activity at {} ms", t_ms));
    }
    return std::prev(it)->activity;
}

// ---------------------------------------------------------------------------
// Manifest

void Manifest::validate() const {
    if (version != 1) {
        throw ScenarioError(fmt::format("manifest version {} is not supported", version));
    }
    if (duration_ms <= 0 || tick_ms <= 0 || period_ms <= 0) {
        throw ScenarioError("duration, tick and period must be positive");
    }
    if (points_per_period < 3 || env_window < 2) {
        throw ScenarioError("points_per_period must be >= 3 and env_window >= 2");
    }
    if (!(mining.min_support > 0.0 && mining.min_support <= 1.0) ||
        !(mining.min_confidence > 0.0 && mining.min_confidence <= 1.0) || mining.every_k_periods < 1) {
        throw ScenarioError("mining thresholds must lie in (0, 1] and every_k_periods >= 1");
    }
    if (planner.horizon < 1 || !(planner.alpha > 0.0)) {
        throw ScenarioError("planner horizon must be >= 1 and alpha > 0");
    }
    for (const auto &l : links) {
        (void)parse_node(l.from);
        (void)parse_node(l.to);
        if (l.latency_ms < 0) {
            throw ScenarioError(fmt::format("link {} -> {} has negative latency", l.from, l.to));
        }
    }
    for (const auto &f : failures) {
        (void)parse_node(f.node);
        if (f.end_ms < f.start_ms) {
            throw ScenarioError(fmt::format("failure window of '{}' ends before it starts", f.node));
        }
    }
    for (const auto &[period, content] : content_schedule) {
        if (period < 0 || content < 1) {
            throw ScenarioError(fmt::format("bad content schedule entry {} -> {}", period, content));
        }
    }
    thresholds.validate();
    stub_rule.validate();
}

std::string Manifest::resolve(const std::string &path) const {
    const std::filesystem::path p(path);
    return (p.is_absolute() || base_dir.empty() ? p : base_dir / p).string();
}

std::vector<LinkConfig> Manifest::effective_links() const {
    auto out = default_links();
    for (const auto &l : links) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const LinkConfig &d) { return d.from == l.from && d.to == l.to; });
        if (it == out.end()) {
            out.push_back(l);
        } else {
            *it = l;
        }
    }
    return out;
}

namespace {

json band_json(const inference::BandRule &r) {
    return json{{"cuts", r.cuts}, {"levels", r.levels}};
}

inference::BandRule band_from(const json &j) {
    return inference::BandRule{j.at("cuts").get<std::vector<double>>(), j.at("levels").get<std::vector<int>>()};
}

}  // namespace

Manifest Manifest::from_json(const json &j, std::filesystem::path base_dir) {
    Manifest m;
    m.base_dir = std::move(base_dir);
    try {
        m.version = j.value("version", 1);
        m.driver_id = j.value("driver_id", m.driver_id);
        m.seed = j.value("seed", m.seed);
        m.duration_ms = j.value("duration_ms", m.duration_ms);
        m.tick_ms = j.value("tick_ms", m.tick_ms);
        m.period_ms = j.value("period_ms", m.period_ms);
        m.points_per_period = j.value("points_per_period", m.points_per_period);
        m.env_window = j.value("env_window", m.env_window);
        if (j.contains("mining")) {
            const auto &x = j.at("mining");
            m.mining.min_support = x.value("min_support", m.mining.min_support);
            m.mining.min_confidence = x.value("min_confidence", m.mining.min_confidence);
            m.mining.every_k_periods = x.value("every_k_periods", m.mining.every_k_periods);
        }
        if (j.contains("planner")) {
            const auto &x = j.at("planner");
            m.planner.horizon = x.value("horizon", m.planner.horizon);
            m.planner.alpha = x.value("alpha", m.planner.alpha);
            m.planner.state_space = x.value("state_space", m.planner.state_space);
            m.planner.target_min_valence = x.value("target_min_valence", m.planner.target_min_valence);
        }
        if (j.contains("mood")) {
            const auto &x = j.at("mood");
            const auto mode = x.value("mode", std::string("replay"));
            if (mode == "replay") {
                m.mood_mode = inference::MoodSource::Replay;
            } else if (mode == "stub") {
                m.mood_mode = inference::MoodSource::Stub;
            } else {
                throw ScenarioError(fmt::format("unknown mood mode '{}'", mode));
            }
            m.mood_trace = x.value("trace", std::string());
            if (x.contains("stub_rule")) {
                const auto &r = x.at("stub_rule");
                m.stub_rule.arousal_from_eda_std = band_from(r.at("arousal_from_eda_std"));
                m.stub_rule.valence_from_emg_std = band_from(r.at("valence_from_emg_std"));
            }
        }
        if (j.contains("classifier")) {
            m.classifier_profile = j.at("classifier").value("profile", std::string());
        }
        m.catalog = j.value("catalog", std::string());
        m.seed_model = j.value("seed_model", std::string());
        m.activity_truth = j.value("activity_truth", std::string());
        if (j.contains("sensors")) {
            for (const auto &[name, src] : j.at("sensors").items()) {
                const auto channel = sigproc::parse_channel(name);
                m.sensors[channel] =
                    SensorSource{src.at("path").get<std::string>(), src.value("rate", sigproc::default_rate(channel))};
            }
        }
        if (j.contains("thresholds")) {
            const auto &x = j.at("thresholds");
            auto &t = m.thresholds;
            t.light_low_lux = x.value("light_low_lux", t.light_low_lux);
            t.light_high_lux = x.value("light_high_lux", t.light_high_lux);
            t.temp_cold_c = x.value("temp_cold_c", t.temp_cold_c);
            t.temp_hot_c = x.value("temp_hot_c", t.temp_hot_c);
            t.humidity_dry_pct = x.value("humidity_dry_pct", t.humidity_dry_pct);
            t.humidity_humid_pct = x.value("humidity_humid_pct", t.humidity_humid_pct);
        }
        for (const auto &e : j.value("content_schedule", json::array())) {
            m.content_schedule[e.at("period").get<int>()] = e.at("content").get<int>();
        }
        for (const auto &e : j.value("links", json::array())) {
            m.links.push_back(LinkConfig{e.at("from").get<std::string>(), e.at("to").get<std::string>(),
                                         e.value("latency_ms", std::int64_t{0}), e.value("capacity", std::size_t{0})});
        }
        for (const auto &e : j.value("failures", json::array())) {
            m.failures.push_back(FailureWindow{e.at("node").get<std::string>(), e.at("start_ms").get<std::int64_t>(),
                                               e.at("end_ms").get<std::int64_t>()});
        }
        m.validate();
    } catch (const json::exception &e) {
        throw ScenarioError(fmt::format("manifest: {}", e.what()));
    } catch (const DomainError &e) {
        throw ScenarioError(fmt::format("manifest: {}", e.what()));
    }
    return m;
}

json Manifest::to_json() const {
    json sensors_j = json::object();
    for (const auto &[channel, src] : sensors) {
        sensors_j[std::string(sigproc::to_string(channel))] = json{{"path", src.path}, {"rate", src.rate}};
    }
    json schedule = json::array();
    for (const auto &[period, content] : content_schedule) {
        schedule.push_back(json{{"period", period}, {"content", content}});
    }
    json links_j = json::array();
    for (const auto &l : links) {
        links_j.push_back(json{{"from", l.from}, {"to", l.to}, {"latency_ms", l.latency_ms}, {"capacity", l.capacity}});
    }
    json failures_j = json::array();
    for (const auto &f : failures) {
        failures_j.push_back(json{{"node", f.node}, {"start_ms", f.start_ms}, {"end_ms", f.end_ms}});
    }
    return json{
        {"version", version},
        {"driver_id", driver_id},
        {"seed", seed},
        {"duration_ms", duration_ms},
        {"tick_ms", tick_ms},
        {"period_ms", period_ms},
        {"points_per_period", points_per_period},
        {"env_window", env_window},
        {"mining",
         {{"min_support", mining.min_support},
          {"min_confidence", mining.min_confidence},
          {"every_k_periods", mining.every_k_periods}}},
        {"planner",
         {{"horizon", planner.horizon},
          {"alpha", planner.alpha},
          {"state_space", planner.state_space},
          {"target_min_valence", planner.target_min_valence}}},
        {"mood",
         {{"mode", inference::to_string(mood_mode)},
          {"trace", mood_trace},
          {"stub_rule",
           {{"arousal_from_eda_std", band_json(stub_rule.arousal_from_eda_std)},
            {"valence_from_emg_std", band_json(stub_rule.valence_from_emg_std)}}}}},
        {"classifier", {{"profile", classifier_profile}}},
        {"catalog", catalog},
        {"seed_model", seed_model},
        {"activity_truth", activity_truth},
        {"sensors", sensors_j},
        {"thresholds",
         {{"light_low_lux", thresholds.light_low_lux},
          {"light_high_lux", thresholds.light_high_lux},
          {"temp_cold_c", thresholds.temp_cold_c},
          {"temp_hot_c", thresholds.temp_hot_c},
          {"humidity_dry_pct", thresholds.humidity_dry_pct},
          {"humidity_humid_pct", thresholds.humidity_humid_pct}}},
        {"content_schedule", schedule},
        {"links", links_j},
        {"failures", failures_j},
    };
}

Manifest Manifest::load(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ScenarioError(fmt::format("cannot open manifest '{}'", path));
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error &e) {
        throw ScenarioError(fmt::format("manifest '{}': {}", path, e.what()));
    }
    return from_json(j, std::filesystem::absolute(path).parent_path());
}

void Manifest::write(const std::string &path) const {
    std::ofstream out(path);
    if (!out) {
        throw ScenarioError(fmt::format("cannot write manifest '{}'", path));
    }
    out << to_json().dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Inputs

namespace {

template <typename F>
auto load_or_fail(const std::string &what, const std::string &path, F &&loader) {
    if (!std::filesystem::exists(path)) {
        throw ScenarioError(fmt::format("missing {} '{}'", what, path));
    }
    try {
        return loader(path);
    } catch (const Error &e) {
        throw ScenarioError(fmt::format("{} '{}': {}", what, path, e.what()));
    }
}

}  // namespace

ScenarioInputs load_inputs(const Manifest &m) {
    m.validate();
    ScenarioInputs in;
    if (m.activity_truth.empty()) {
        throw ScenarioError("manifest names no activity ground truth");
    }
    in.truth = load_or_fail("activity ground truth", m.resolve(m.activity_truth),
                            [](const std::string &p) { return ActivityTruth::load(p); });
    for (std::int64_t t = 0; t < m.duration_ms; t += m.tick_ms) {
        try {
            (void)in.truth.at(t);
        } catch (const DomainError &e) {
            throw ScenarioError(e.what());
        }
    }

    in.profile = m.classifier_profile.empty()
                     ? inference::ClassifierProfile::identity(m.seed)
                     : load_or_fail("classifier profile", m.resolve(m.classifier_profile),
                                    [&](const std::string &p) { return inference::ClassifierProfile::load(p, m.seed); });
    in.catalog = m.catalog.empty() ? domain::Catalog::builtin()
                                   : load_or_fail("catalog", m.resolve(m.catalog),
                                                  [](const std::string &p) { return domain::Catalog::load(p); });
    if (in.catalog.empty()) {
        throw ScenarioError("catalog is empty");
    }

    if (m.mood_mode == inference::MoodSource::Replay) {
        if (m.mood_trace.empty()) {
            throw ScenarioError("replay mood mode needs a mood trace");
        }
        in.mood_trace = load_or_fail("mood trace", m.resolve(m.mood_trace),
                                     [](const std::string &p) { return inference::MoodTrace::load(p); });
    }
    if (!m.seed_model.empty()) {
        in.seed_model = load_or_fail("seed model", m.resolve(m.seed_model),
                                     [](const std::string &p) { return recommend::TransitionModel::load(p); });
    }

    for (auto channel : sigproc::kEnvChannels) {
        if (!m.sensors.contains(channel)) {
            throw ScenarioError(fmt::format("missing replay data for channel {}", sigproc::to_string(channel)));
        }
    }
    if (m.mood_mode == inference::MoodSource::Stub) {
        for (auto channel : {sigproc::Channel::EMG, sigproc::Channel::EDA}) {
            if (!m.sensors.contains(channel)) {
                throw ScenarioError(fmt::format("stub mood mode needs replay data for {}", sigproc::to_string(channel)));
            }
        }
    }
    for (const auto &[channel, src] : m.sensors) {
        const auto what = fmt::format("{} replay file", sigproc::to_string(channel));
        const double rate = src.rate;
        in.frames[channel] = load_or_fail(what, m.resolve(src.path), [&](const std::string &p) {
            return sigproc::load_sensor_csv(p, channel, rate);
        });
    }
    return in;
}

}  // namespace drivesafe::cpsnet
