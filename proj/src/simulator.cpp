#include "drivesafe/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <thread>

#include <fmt/core.h>

#include "drivesafe/error.hpp"

namespace drivesafe::cpsnet {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Scheduler

std::uint64_t Scheduler::schedule(std::int64_t t_ms, Action action) {
    if (t_ms < now_) {
        throw DomainError(fmt::format("cannot schedule at {} ms, clock is at {} ms", t_ms, now_));
    }
    const auto id = next_id_++;
    heap_.push(Entry{t_ms, id});
    actions_.emplace(id, std::move(action));
    return id;
}

void Scheduler::cancel(std::uint64_t id) {
    actions_.erase(id);
}

void Scheduler::skip_cancelled() {
    while (!heap_.empty() && !actions_.contains(heap_.top().id)) {
        heap_.pop();
    }
}

std::optional<std::int64_t> Scheduler::next_time() {
    skip_cancelled();
    if (heap_.empty()) {
        return std::nullopt;
    }
    return heap_.top().t_ms;
}

bool Scheduler::step() {
    skip_cancelled();
    if (heap_.empty()) {
        return false;
    }
    const Entry e = heap_.top();
    heap_.pop();
    now_ = e.t_ms;
    auto node = actions_.extract(e.id);
    node.mapped()();
    return true;
}

// ---------------------------------------------------------------------------
// Event log

json to_json(const EventRecord &e) {
    json j{{"t_ms", e.t_ms},
           {"event", e.kind == EventKind::Deliver ? "deliver" : "drop"},
           {"from", e.from},
           {"to", e.to},
           {"msg_type", to_string(e.msg_type)},
           {"seq", e.seq},
           {"payload_digest", e.payload_digest}};
    if (e.kind == EventKind::Drop) {
        j["reason"] = e.reason;
    }
    return j;
}

EventRecord event_from_json(const json &j) {
    EventRecord e;
    e.t_ms = j.at("t_ms").get<std::int64_t>();
    const auto kind = j.at("event").get<std::string>();
    if (kind != "deliver" && kind != "drop") {
        throw ParseError(fmt::format("unknown event kind '{}'", kind));
    }
    e.kind = kind == "deliver" ? EventKind::Deliver : EventKind::Drop;
    e.from = j.at("from").get<std::string>();
    e.to = j.at("to").get<std::string>();
    e.msg_type = parse_msg_type(j.at("msg_type").get<std::string>());
    e.seq = j.at("seq").get<std::int64_t>();
    e.payload_digest = j.at("payload_digest").get<std::string>();
    e.reason = j.value("reason", std::string());
    return e;
}

void write_event_log(std::ostream &out, std::span<const EventRecord> events) {
    for (const auto &e : events) {
        out << to_json(e).dump() << '\n';
    }
}

std::vector<EventRecord> read_event_log(std::istream &in) {
    std::vector<EventRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        try {
            out.push_back(event_from_json(json::parse(line)));
        } catch (const json::exception &e) {
            throw ParseError(fmt::format("events.jsonl:{}: {}", lineno, e.what()));
        }
    }
    return out;
}

void write_frames(std::ostream &out, std::span<const Frame> frames) {
    for (const auto &f : frames) {
        out.write(reinterpret_cast<const char *>(f.data()), static_cast<std::streamsize>(f.size()));
    }
}

std::string_view to_string(RunMode mode) noexcept {
    return mode == RunMode::Simulated ? "simulated" : "realtime";
}

RunMode parse_run_mode(std::string_view text) {
    if (text == "simulated") return RunMode::Simulated;
    if (text == "realtime") return RunMode::Realtime;
    throw DomainError(fmt::format("unknown run mode '{}'", text));
}

// ---------------------------------------------------------------------------
// Network

Network::Network(std::string driver_id, std::vector<LinkConfig> links, std::vector<FailureWindow> failures)
    : driver_id_(std::move(driver_id)), failures_(std::move(failures)) {
    for (auto &l : links) {
        if (l.latency_ms < 0) {
            throw DomainError(fmt::format("link {} -> {} has negative latency", l.from, l.to));
        }
        auto key = std::pair{l.from, l.to};
        links_[key] = LinkState{std::move(l), {}, 0};
    }
}

void Network::attach(const std::string &node, Handler handler) {
    handlers_[node] = std::move(handler);
}

bool Network::is_down(const std::string &node, std::int64_t t_ms) const {
    return std::any_of(failures_.begin(), failures_.end(), [&](const FailureWindow &f) {
        return f.node == node && f.start_ms <= t_ms && t_ms < f.end_ms;
    });
}

void Network::log(std::int64_t t, EventKind kind, const std::string &from, const std::string &to, MsgType type,
                  std::int64_t seq, std::string digest, std::string reason) {
    events_.push_back(EventRecord{t, kind, from, to, type, seq, std::move(digest), std::move(reason)});
}

void Network::at(std::int64_t t_ms, Scheduler::Action action) {
    scheduler_.schedule(t_ms, std::move(action));
}

void Network::send(const std::string &from, const std::string &to, MsgType type, json payload) {
    const auto key = std::pair{from, to};
    const auto link_it = links_.find(key);
    if (link_it == links_.end()) {
        throw ScenarioError(fmt::format("no link {} -> {}", from, to));
    }
    const std::int64_t now = scheduler_.now();
    Envelope e;
    e.msg_type = type;
    e.driver_id = driver_id_;
    e.sender = from;
    e.receiver = to;
    e.seq = ++seq_[{from, type}];
    e.sent_at = now;
    e.payload = std::move(payload);
    Frame frame = encode(e);
    std::string digest = payload_digest(e);

    if (is_down(from, now)) {
        log(now, EventKind::Drop, from, to, type, e.seq, std::move(digest), "sender_down");
        return;
    }
    auto &link = link_it->second;
    if (link.config.capacity > 0 && link.in_flight.size() >= link.config.capacity) {
        const InFlight oldest = link.in_flight.front();
        link.in_flight.pop_front();
        scheduler_.cancel(oldest.ticket);
        log(now, EventKind::Drop, from, to, oldest.type, oldest.seq, oldest.digest, "capacity");
    }
    const std::int64_t receive_at = std::max(now + link.config.latency_ms, link.last_receive);
    link.last_receive = receive_at;
    const auto seq = e.seq;
    const auto ticket =
        scheduler_.schedule(receive_at, [this, key, type, seq, digest, frame = std::move(frame)]() mutable {
            auto &l = links_.at(key);
            l.in_flight.pop_front();
            const auto &[src, dst] = key;
            if (is_down(dst, scheduler_.now())) {
                log(scheduler_.now(), EventKind::Drop, src, dst, type, seq, std::move(digest), "node_down");
                return;
            }
            log(scheduler_.now(), EventKind::Deliver, src, dst, type, seq, std::move(digest));
            const Envelope env = decode(frame);
            frames_.push_back(std::move(frame));
            if (const auto h = handlers_.find(dst); h != handlers_.end()) {
                h->second(env);
            }
        });
    link.in_flight.push_back(InFlight{ticket, std::move(digest), type, seq});
}

void Network::run(RunMode mode, double speed) {
    if (!(speed > 0.0)) {
        throw DomainError("realtime speed must be positive");
    }
    const auto wall_start = std::chrono::steady_clock::now();
    while (const auto t = scheduler_.next_time()) {
        if (mode == RunMode::Realtime) {
            std::this_thread::sleep_until(
                wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                 std::chrono::duration<double, std::milli>(static_cast<double>(*t) / speed)));
        }
        scheduler_.step();
    }
}

std::size_t RunResult::count(MsgType type, EventKind kind) const {
    return static_cast<std::size_t>(std::count_if(
        events.begin(), events.end(), [&](const EventRecord &e) { return e.msg_type == type && e.kind == kind; }));
}

// ---------------------------------------------------------------------------
// Nodes

namespace {

const std::string kBan{node_name(NodeKind::BANSink)};
const std::string kEnvGw{node_name(NodeKind::EnvGateway)};
const std::string kCamera{node_name(NodeKind::CameraNode)};
const std::string kVehicle{node_name(NodeKind::OnVehicle)};
const std::string kEdge{node_name(NodeKind::Edge)};
const std::string kCloud{node_name(NodeKind::Cloud)};

/// Samples stamped in [start_ms, end_ms), at most the trailing `max_points`.
sigproc::SensorFrame slice(const sigproc::SensorFrame &f, std::int64_t start_ms, std::int64_t end_ms,
                           std::size_t max_points) {
    std::size_t lo = 0;
    std::size_t hi = f.samples.size();
    auto first_at_or_after = [&](std::int64_t t) {
        std::size_t a = 0;
        std::size_t b = f.samples.size();
        while (a < b) {
            const std::size_t mid = a + (b - a) / 2;
            if (f.time_of(mid) < t) {
                a = mid + 1;
            } else {
                b = mid;
            }
        }
        return a;
    };
    lo = first_at_or_after(start_ms);
    hi = first_at_or_after(end_ms);
    if (hi - lo > max_points) {
        lo = hi - max_points;
    }
    sigproc::SensorFrame out;
    out.channel = f.channel;
    out.rate = f.rate;
    out.t0_ms = lo < f.samples.size() ? f.time_of(lo) : start_ms;
    out.samples.assign(f.samples.begin() + static_cast<std::ptrdiff_t>(lo),
                       f.samples.begin() + static_cast<std::ptrdiff_t>(hi));
    return out;
}

class Platform {
  public:
    Platform(const Manifest &m, const ScenarioInputs &in, std::uint64_t seed, RunResult &result)
        : m_(m),
          in_(in),
          result_(result),
          net_(m.driver_id, m.effective_links(), m.failures),
          classifier_(with_seed(in.profile, seed)),
          estimator_(in.mood_trace ? inference::MoodEstimator::replay(*in.mood_trace)
                                   : inference::MoodEstimator::stub(m.stub_rule)),
          edge_model_(in.seed_model ? *in.seed_model
                                    : recommend::TransitionModel(recommend::StateSpace::from_name(m.planner.state_space),
                                                                 m.planner.alpha)),
          vehicle_model_(edge_model_.space(), edge_model_.alpha()),
          target_(recommend::valence_at_least(m.planner.target_min_valence)) {
        for (const auto &[channel, frame] : in.frames) {
            if (sigproc::is_physiological(channel)) {
                has_physio_ = true;
            }
        }
        net_.attach(kEdge, [this](const Envelope &e) { edge_on(e); });
        net_.attach(kVehicle, [this](const Envelope &e) { vehicle_on(e); });
        net_.attach(kCloud, [this](const Envelope &e) { cloud_on(e); });
    }

    void run(const RunOptions &options) {
        net_.at(0, [this] { vehicle_start(); });
        net_.at(0, [this] { edge_publish_rules(); });
        net_.at(0, [this] { camera_tick(0); });
        for (int p = 0; p < m_.period_count(); ++p) {
            net_.at((p + 1) * m_.period_ms, [this, p] { sensor_batches(p); });
        }
        net_.run(options.mode, options.realtime_speed);
        result_.events = net_.events();
        result_.frames = net_.frames();
        result_.transactions = db_;
        result_.rules = rules_;
        result_.model = edge_model_;
    }

  private:
    static inference::ClassifierProfile with_seed(inference::ClassifierProfile p, std::uint64_t seed) {
        p.seed = seed;
        return p;
    }

    void note(std::string text) { result_.notes.push_back(fmt::format("t={} {}", net_.now(), std::move(text))); }

    // --- sensing nodes -----------------------------------------------------

    void camera_tick(std::int64_t t) {
        net_.send(kCamera, kEdge, MsgType::ActivityEvent, ActivityEvent{t, in_.truth.at(t)});
        if (t + m_.tick_ms < m_.duration_ms) {
            net_.at(t + m_.tick_ms, [this, t] { camera_tick(t + m_.tick_ms); });
        }
    }

    void sensor_batches(int p) {
        const std::int64_t start = p * m_.period_ms;
        const std::int64_t end = start + m_.period_ms;
        SensorBatch ban{p, {}};
        SensorBatch env{p, {}};
        for (const auto &[channel, frame] : in_.frames) {
            if (sigproc::is_physiological(channel)) {
                ban.frames.push_back(slice(frame, start, end, m_.points_per_period));
            } else {
                env.frames.push_back(slice(frame, start, end, frame.samples.size()));
            }
        }
        if (has_physio_) {
            net_.send(kBan, kEdge, MsgType::SensorBatch, ban);
        }
        net_.send(kEnvGw, kEdge, MsgType::SensorBatch, env);
    }

    // --- edge ----------------------------------------------------------------

    void edge_on(const Envelope &e) {
        switch (e.msg_type) {
            case MsgType::ActivityEvent: {
                const auto ev = e.payload.get<ActivityEvent>();
                const auto obs = classifier_.classify(ev.label, ev.frame_t);
                result_.activity_pairs.emplace_back(ev.label, obs.activity);
                observations_[mining::period_of(ev.frame_t, m_.period_ms)].push_back(obs);
                const auto meta = obs.meta();
                const auto message =
                    meta == domain::ActivityMeta::SafeDriving
                        ? std::string("Safe driving")
                        : fmt::format("Distracted driving: {}", domain::ActivityTable::builtin().at(obs.activity).description);
                net_.send(kEdge, kVehicle, MsgType::SafetyNotification,
                          SafetyNotification{obs.activity, meta, message, obs.confidence, ev.frame_t});
                break;
            }
            case MsgType::SensorBatch: {
                auto batch = e.payload.get<SensorBatch>();
                auto &slot = batches_[batch.period];
                slot[e.sender] = std::move(batch);
                const std::size_t expected = has_physio_ ? 2 : 1;
                if (slot.size() == expected) {
                    const int p = slot.begin()->second.period;
                    auto bundle = std::move(slot);
                    batches_.erase(p);
                    edge_period(p, bundle);
                }
                break;
            }
            case MsgType::RepairPlanMsg: {
                const auto msg = e.payload.get<RepairPlanMsg>();
                if (msg.status != PlanStatus::Initial && !published_hashes_.contains(msg.model_hash)) {
                    note(fmt::format("plan for period {} carries unknown model hash {}", msg.period, msg.model_hash));
                }
                playing_[msg.plays_in_period] = msg.playing;
                break;
            }
            default: note(fmt::format("edge ignored {}", to_string(e.msg_type)));
        }
    }

    void edge_period(int p, const std::map<std::string, SensorBatch> &bundle) {
        sigproc::PhysioFeatures features;
        if (const auto it = bundle.find(kBan); it != bundle.end()) {
            for (const auto &frame : it->second.frames) {
                try {
                    features.get(frame.channel) = sigproc::channel_features(frame);
                } catch (const Error &err) {
                    note(fmt::format("period {}: {} features skipped: {}", p, sigproc::to_string(frame.channel),
                                     err.what()));
                }
            }
        }

        inference::MoodEstimate mood;
        try {
            mood = estimator_.estimate(features, p);
        } catch (const Error &err) {
            note(fmt::format("period {}: no mood estimate: {}", p, err.what()));
            prev_mood_.reset();
            return;
        }

        const auto obs_it = observations_.find(p);
        if (obs_it == observations_.end() || obs_it->second.empty()) {
            note(fmt::format("period {}: no activity observations", p));
            prev_mood_.reset();
            return;
        }
        const auto activity = period_activity(obs_it->second);
        observations_.erase(obs_it);

        std::map<sigproc::Channel, const sigproc::SensorFrame *> env;
        for (const auto &frame : bundle.at(kEnvGw).frames) {
            env[frame.channel] = &frame;
        }
        std::size_t window = m_.env_window;
        for (auto channel : sigproc::kEnvChannels) {
            if (!env.contains(channel) || env[channel]->samples.size() < 2) {
                note(fmt::format("period {}: environment channel {} has too few samples", p,
                                 sigproc::to_string(channel)));
                prev_mood_.reset();
                return;
            }
            window = std::min(window, env[channel]->samples.size());
        }
        const auto snapshot = sigproc::env_snapshot(*env[sigproc::Channel::Light], *env[sigproc::Channel::Temperature],
                                                    *env[sigproc::Channel::Humidity], window);

        std::optional<int> playing;
        if (const auto it = playing_.find(p); it != playing_.end()) {
            playing = it->second;
        }

        mining::ContextTransaction tx;
        try {
            tx = mining::fuse_context(activity, mood, snapshot, playing,
                                      mining::FuseOptions{m_.period_ms, m_.thresholds});
        } catch (const ConsistencyError &err) {
            note(fmt::format("period {}: {}", p, err.what()));
            prev_mood_.reset();
            return;
        }
        db_.push_back(tx);
        net_.send(kEdge, kCloud, MsgType::TransactionBatch, TransactionBatch{{tx}});

        if (prev_mood_ && prev_mood_->period_index == p - 1 && playing) {
            edge_model_.observe(recommend::Transition{prev_mood_->state, *playing, mood.state});
        }
        prev_mood_ = mood;

        if (db_.size() % static_cast<std::size_t>(m_.mining.every_k_periods) == 0) {
            edge_publish_rules();
        }
        net_.send(kEdge, kVehicle, MsgType::MoodResult,
                  MoodResult{p, mood.state, domain::mood_lookup(mood.state).name,
                             std::string(inference::to_string(mood.source)), tx});
    }

    /// Most frequent predicted class (ties to the lowest id), stamped at its
    /// first tick with the mean confidence of its ticks.
    static inference::ActivityObservation period_activity(const std::vector<inference::ActivityObservation> &obs) {
        std::array<int, domain::kActivityCount> votes{};
        for (const auto &o : obs) {
            ++votes[static_cast<std::size_t>(o.activity)];
        }
        const int best = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
        inference::ActivityObservation out;
        out.activity = best;
        double confidence = 0.0;
        bool first = true;
        for (const auto &o : obs) {
            if (o.activity == best) {
                if (first) {
                    out.t_ms = o.t_ms;
                    first = false;
                }
                confidence += o.confidence;
            }
        }
        out.confidence = confidence / votes[static_cast<std::size_t>(best)];
        return out;
    }

    void edge_publish_rules() {
        if (!db_.empty()) {
            rules_ = mining::apriori_rules(mining::apriori_frequent(db_, m_.mining.min_support),
                                           m_.mining.min_confidence);
        }
        RuleSet rs{static_cast<int>(db_.size()), rules_, edge_model_, edge_model_.snapshot_hash()};
        published_hashes_.insert(rs.model_hash);
        result_.rule_sets.push_back(rs);
        net_.send(kEdge, kVehicle, MsgType::RuleSet, rs);
    }

    // --- vehicle ---------------------------------------------------------------

    void vehicle_start() {
        net_.send(kVehicle, kCloud, MsgType::CatalogRequest, CatalogRequest{m_.driver_id});
        RepairPlanMsg msg;
        msg.period = -1;
        msg.plays_in_period = 0;
        msg.status = PlanStatus::Initial;
        if (const auto it = m_.content_schedule.find(0); it != m_.content_schedule.end()) {
            playing_now_ = it->second;
        }
        msg.playing = playing_now_;
        vehicle_send_plan(msg);
    }

    void vehicle_send_plan(const RepairPlanMsg &msg) {
        result_.plans.push_back(msg);
        net_.send(kVehicle, kEdge, MsgType::RepairPlanMsg, msg);
    }

    void vehicle_on(const Envelope &e) {
        switch (e.msg_type) {
            case MsgType::CatalogResponse: catalog_ = e.payload.get<CatalogResponse>().catalog; break;
            case MsgType::RuleSet: {
                auto rs = e.payload.get<RuleSet>();
                vehicle_rules_ = std::move(rs.rules);
                vehicle_model_ = std::move(rs.model);
                vehicle_hash_ = std::move(rs.model_hash);
                break;
            }
            case MsgType::SafetyNotification: break;
            case MsgType::MoodResult: vehicle_plan(e.payload.get<MoodResult>()); break;
            default: note(fmt::format("vehicle ignored {}", to_string(e.msg_type)));
        }
    }

    void vehicle_plan(const MoodResult &mood) {
        RepairPlanMsg msg;
        msg.period = mood.period;
        msg.plays_in_period = mood.period + 1;
        msg.start = mood.state;
        msg.model_hash = vehicle_hash_;
        msg.candidates = recommend::candidate_contents(vehicle_rules_, mood.context, catalog_);
        if (target_(mood.state)) {
            msg.status = PlanStatus::AtTarget;
        } else if (msg.candidates.empty()) {
            msg.status = PlanStatus::NoPlan;
        } else {
            msg.plan = recommend::plan_repair(vehicle_model_, mood.state, target_, m_.planner.horizon, msg.candidates);
            msg.status = msg.plan ? PlanStatus::Planned : PlanStatus::NoPlan;
        }
        if (const auto it = m_.content_schedule.find(msg.plays_in_period); it != m_.content_schedule.end()) {
            playing_now_ = it->second;
        } else if (msg.plan && !msg.plan->contents.empty()) {
            playing_now_ = msg.plan->contents.front();
        }
        msg.playing = playing_now_;
        vehicle_send_plan(msg);
    }

    // --- cloud -----------------------------------------------------------------

    void cloud_on(const Envelope &e) {
        switch (e.msg_type) {
            case MsgType::CatalogRequest:
                net_.send(kCloud, kVehicle, MsgType::CatalogResponse, CatalogResponse{in_.catalog});
                break;
            case MsgType::TransactionBatch: {
                auto batch = e.payload.get<TransactionBatch>();
                archive_.insert(archive_.end(), batch.transactions.begin(), batch.transactions.end());
                break;
            }
            default: note(fmt::format("cloud ignored {}", to_string(e.msg_type)));
        }
    }

    const Manifest &m_;
    const ScenarioInputs &in_;
    RunResult &result_;
    Network net_;
    bool has_physio_ = false;

    inference::ActivityClassifier classifier_;
    inference::MoodEstimator estimator_;
    recommend::TransitionModel edge_model_;
    std::vector<mining::ContextTransaction> db_;
    std::vector<mining::AssociationRule> rules_;
    std::map<int, std::vector<inference::ActivityObservation>> observations_;
    std::map<int, std::map<std::string, SensorBatch>> batches_;
    std::map<int, std::optional<int>> playing_;
    std::optional<inference::MoodEstimate> prev_mood_;
    std::set<std::string> published_hashes_;

    domain::Catalog catalog_;
    std::vector<mining::AssociationRule> vehicle_rules_;
    recommend::TransitionModel vehicle_model_;
    std::string vehicle_hash_;
    std::optional<int> playing_now_;
    recommend::TargetPredicate target_;

    std::vector<mining::ContextTransaction> archive_;
};

}  // namespace

RunResult run_scenario(const Manifest &manifest, const ScenarioInputs &inputs, const RunOptions &options) {
    RunResult result;
    Platform platform(manifest, inputs, options.seed.value_or(manifest.seed), result);
    platform.run(options);
    return result;
}

RunResult run_scenario(const Manifest &manifest, const RunOptions &options) {
    const auto inputs = load_inputs(manifest);
    return run_scenario(manifest, inputs, options);
}

void write_outputs(const RunResult &result, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char *name, std::ios::openmode mode = std::ios::out) {
        std::ofstream out(dir / name, mode);
        if (!out) {
            throw ScenarioError(fmt::format("cannot write '{}'", (dir / name).string()));
        }
        return out;
    };
    {
        auto out = open("events.jsonl");
        write_event_log(out, result.events);
    }
    {
        auto out = open("frames.bin", std::ios::out | std::ios::binary);
        write_frames(out, result.frames);
    }
    {
        auto out = open("transactions.jsonl");
        mining::write_transactions(out, result.transactions);
    }
    {
        auto out = open("rules.jsonl");
        mining::write_rules(out, result.rules);
    }
    {
        auto out = open("plans.jsonl");
        for (const auto &p : result.plans) {
            out << json(p).dump() << '\n';
        }
    }
    {
        auto out = open("model.tsv");
        result.model.write(out);
    }
    if (!result.activity_pairs.empty()) {
        auto out = open("activity_report.txt");
        out << inference::format_report(inference::classification_report_from_ids(result.activity_pairs));
    }
}

}  // namespace drivesafe::cpsnet
