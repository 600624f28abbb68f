#include "drivesafe/recommend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/core.h>

#include "drivesafe/digest.hpp"
#include "drivesafe/error.hpp"
#include "tsv.hpp"

namespace drivesafe::recommend {

using nlohmann::json;

// ---------------------------------------------------------------------------
// State spaces

StateSpace StateSpace::full() {
    StateSpace s;
    s.kind_ = Kind::Full;
    for (int cell = 0; cell < domain::kMoodCells; ++cell) {
        s.states_.push_back(AffectiveState::from_cell(cell));
    }
    return s;
}

StateSpace StateSpace::grid3x3() {
    StateSpace s;
    s.kind_ = Kind::Grid3x3;
    for (int v : {2, 5, 8}) {
        for (int a : {2, 5, 8}) {
            s.states_.push_back(AffectiveState{v, a});
        }
    }
    return s;
}

StateSpace StateSpace::custom(std::vector<AffectiveState> states) {
    if (states.empty()) {
        throw DomainError("custom state space needs at least one state");
    }
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (!states[i].valid()) {
            throw DomainError("custom state space contains an invalid state");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (states[i] == states[j]) {
                throw DomainError("custom state space repeats a state");
            }
        }
    }
    StateSpace s;
    s.kind_ = Kind::Custom;
    s.states_ = std::move(states);
    return s;
}

std::size_t StateSpace::index_of(AffectiveState s) const {
    if (!s.valid()) {
        throw DomainError(fmt::format("state ({}, {}) outside [1, 9]^2", s.valence, s.arousal));
    }
    switch (kind_) {
        case Kind::Full: return static_cast<std::size_t>(s.cell());
        case Kind::Grid3x3: return static_cast<std::size_t>(((s.valence - 1) / 3) * 3 + (s.arousal - 1) / 3);
        case Kind::Custom: break;
    }
    const auto it = std::find(states_.begin(), states_.end(), s);
    if (it == states_.end()) {
        throw DomainError(fmt::format("state ({}, {}) not in state space", s.valence, s.arousal));
    }
    return static_cast<std::size_t>(it - states_.begin());
}

AffectiveState StateSpace::state_at(std::size_t index) const {
    if (index >= states_.size()) {
        throw DomainError(fmt::format("state index {} out of range", index));
    }
    return states_[index];
}

std::string StateSpace::name() const {
    switch (kind_) {
        case Kind::Full: return "full";
        case Kind::Grid3x3: return "grid3x3";
        case Kind::Custom: break;
    }
    std::string out = "custom:";
    for (std::size_t i = 0; i < states_.size(); ++i) {
        out += fmt::format("{}{},{}", i ? ";" : "", states_[i].valence, states_[i].arousal);
    }
    return out;
}

StateSpace StateSpace::from_name(const std::string &name) {
    if (name == "full") return full();
    if (name == "grid3x3") return grid3x3();
    if (name.starts_with("custom:")) {
        std::vector<AffectiveState> states;
        for (const auto &part : detail::split(std::string_view(name).substr(7), ';')) {
            const auto parts = detail::split(part, ',');
            if (parts.size() != 2) {
                throw DomainError(fmt::format("bad state '{}' in state space name", part));
            }
            states.push_back(AffectiveState{detail::to_int(parts[0], "state space", 0), detail::to_int(parts[1], "state space", 0)});
        }
        return custom(std::move(states));
    }
    throw DomainError(fmt::format("unknown state space '{}'", name));
}

// ---------------------------------------------------------------------------
// Transition model

TransitionModel::TransitionModel(StateSpace space, double alpha) : space_(std::move(space)), alpha_(alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw DomainError(fmt::format("smoothing alpha {} must be positive", alpha));
    }
}

void TransitionModel::observe(const Transition &t, double weight) {
    observe(space_.index_of(t.state), t.content, space_.index_of(t.next), weight);
}

void TransitionModel::observe(std::size_t state, int content, std::size_t next, double weight) {
    if (state >= space_.size() || next >= space_.size()) {
        throw DomainError("transition state index out of range");
    }
    if (!(weight >= 0.0)) {
        throw DomainError("transition weight must be non-negative");
    }
    if (weight == 0.0) {
        return;
    }
    counts_[{state, content, next}] += weight;
    totals_[{state, content}] += weight;
}

double TransitionModel::count(std::size_t state, int content, std::size_t next) const {
    const auto it = counts_.find({state, content, next});
    return it == counts_.end() ? 0.0 : it->second;
}

double TransitionModel::probability(std::size_t state, int content, std::size_t next) const {
    if (state >= space_.size() || next >= space_.size()) {
        throw DomainError("transition state index out of range");
    }
    const auto it = totals_.find({state, content});
    const double total = it == totals_.end() ? 0.0 : it->second;
    return (count(state, content, next) + alpha_) / (total + alpha_ * static_cast<double>(space_.size()));
}

double TransitionModel::probability(AffectiveState state, int content, AffectiveState next) const {
    return probability(space_.index_of(state), content, space_.index_of(next));
}

double TransitionModel::log_probability(std::size_t state, int content, std::size_t next) const {
    return std::log(probability(state, content, next));
}

std::vector<int> TransitionModel::contents() const {
    std::vector<int> out;
    for (const auto &[key, total] : totals_) {
        out.push_back(key.second);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void TransitionModel::write(std::ostream &out) const {
    out << fmt::format("# alpha={:.17g} space={}\n", alpha_, space_.name());
    out << "s\tc\ts_next\tcount\n";
    for (const auto &[key, n] : counts_) {
        const auto &[s, c, t] = key;
        const auto from = space_.state_at(s);
        const auto to = space_.state_at(t);
        out << fmt::format("{},{}\t{}\t{},{}\t{:.17g}\n", from.valence, from.arousal, c, to.valence, to.arousal, n);
    }
}

TransitionModel TransitionModel::parse(std::istream &in) {
    std::string first;
    std::getline(in, first);
    double alpha = 1.0;
    std::string space = "full";
    if (!first.starts_with("# ")) {
        throw ParseError("model.tsv: missing '# alpha=... space=...' header");
    }
    for (const auto &tok : detail::split(std::string_view(first).substr(2), ' ')) {
        if (tok.starts_with("alpha=")) {
            alpha = detail::to_double(tok.substr(6), "model.tsv", 1);
        } else if (tok.starts_with("space=")) {
            space = tok.substr(6);
        }
    }
    TransitionModel model(StateSpace::from_name(space), alpha);
    const auto rows = detail::read_rows(in, '\t', {"s", "c", "s_next", "count"}, "model.tsv");
    auto state = [](const std::string &text, std::size_t line) {
        const auto parts = detail::split(text, ',');
        if (parts.size() != 2) {
            throw ParseError(fmt::format("model.tsv:{}: bad state '{}'", line, text));
        }
        return AffectiveState{detail::to_int(parts[0], "model.tsv", line), detail::to_int(parts[1], "model.tsv", line)};
    };
    for (const auto &row : rows) {
        if (row.fields.size() != 4) {
            throw ParseError(fmt::format("model.tsv:{}: expected 4 fields", row.line + 1));
        }
        try {
            model.observe(Transition{state(row.fields[0], row.line), detail::to_int(row.fields[1], "model.tsv", row.line),
                                     state(row.fields[2], row.line)},
                          detail::to_double(row.fields[3], "model.tsv", row.line));
        } catch (const DomainError &e) {
            throw ParseError(fmt::format("model.tsv:{}: {}", row.line + 1, e.what()));
        }
    }
    return model;
}

TransitionModel TransitionModel::load(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(fmt::format("cannot open '{}'", path));
    }
    return parse(in);
}

std::string TransitionModel::snapshot_hash() const {
    std::ostringstream ss;
    write(ss);
    return fnv1a64_hex(ss.str());
}

TransitionModel learn_transitions(std::span<const Transition> history, double alpha, StateSpace space) {
    TransitionModel model(std::move(space), alpha);
    for (const auto &t : history) {
        model.observe(t);
    }
    return model;
}

TargetPredicate valence_at_least(int min_valence) {
    return [min_valence](AffectiveState s) { return s.valence >= min_valence; };
}

// ---------------------------------------------------------------------------
// Planner

namespace {

struct Value {
    double score = -std::numeric_limits<double>::infinity();
    int length = 0;

    [[nodiscard]] bool reachable() const noexcept { return std::isfinite(score); }
};

bool better(double score, int length, const Value &current) {
    if (!current.reachable()) return std::isfinite(score);
    if (score > current.score + kTieEps) return true;
    if (score < current.score - kTieEps) return false;
    return length < current.length;
}

}  // namespace

std::optional<RepairPlan> plan_repair(const TransitionModel &model, AffectiveState start, const TargetPredicate &target,
                                      int horizon, std::span<const int> candidates) {
    if (candidates.empty()) {
        throw DomainError("plan_repair needs at least one candidate content");
    }
    if (horizon < 1) {
        throw DomainError(fmt::format("planning horizon {} must be >= 1", horizon));
    }
    if (!target) {
        throw DomainError("plan_repair needs a target predicate");
    }
    const auto &space = model.space();
    const std::size_t n = space.size();
    const std::size_t start_index = space.index_of(start);

    if (target(space.state_at(start_index))) {
        return RepairPlan{};
    }

    std::vector<int> contents(candidates.begin(), candidates.end());
    std::sort(contents.begin(), contents.end());
    contents.erase(std::unique(contents.begin(), contents.end()), contents.end());
    const std::size_t k = contents.size();

    std::vector<char> is_target(n);
    for (std::size_t s = 0; s < n; ++s) {
        is_target[s] = target(space.state_at(s)) ? 1 : 0;
    }
    // log P indexed [s][c][s'].
    std::vector<double> lp(n * k * n);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t t = 0; t < n; ++t) {
                lp[(s * k + c) * n + t] = model.log_probability(s, contents[c], t);
            }
        }
    }

    // best[r][s]: optimal continuation from s with at most r steps left.
    const auto steps = static_cast<std::size_t>(horizon);
    std::vector<std::vector<Value>> best(steps + 1, std::vector<Value>(n));
    for (std::size_t s = 0; s < n; ++s) {
        if (is_target[s]) best[0][s] = Value{0.0, 0};
    }
    for (std::size_t r = 1; r <= steps; ++r) {
        for (std::size_t s = 0; s < n; ++s) {
            if (is_target[s]) {
                best[r][s] = Value{0.0, 0};
                continue;
            }
            Value v;
            for (std::size_t c = 0; c < k; ++c) {
                for (std::size_t t = 0; t < n; ++t) {
                    const Value &rest = best[r - 1][t];
                    if (!rest.reachable()) continue;
                    const double score = lp[(s * k + c) * n + t] + rest.score;
                    if (better(score, rest.length + 1, v)) {
                        v = Value{score, rest.length + 1};
                    }
                }
            }
            best[r][s] = v;
        }
    }

    if (!best[steps][start_index].reachable()) {
        return std::nullopt;
    }

    // Walk forward taking the lexicographically first optimal step each time.
    RepairPlan plan;
    std::size_t s = start_index;
    std::size_t r = steps;
    while (!is_target[s]) {
        const Value &goal = best[r][s];
        bool stepped = false;
        for (std::size_t c = 0; c < k && !stepped; ++c) {
            for (std::size_t t = 0; t < n && !stepped; ++t) {
                const Value &rest = best[r - 1][t];
                if (!rest.reachable() || rest.length + 1 != goal.length) continue;
                const double score = lp[(s * k + c) * n + t] + rest.score;
                if (std::abs(score - goal.score) <= kTieEps) {
                    plan.contents.push_back(contents[c]);
                    plan.predicted_states.push_back(space.state_at(t));
                    plan.log_likelihood += lp[(s * k + c) * n + t];
                    s = t;
                    --r;
                    stepped = true;
                }
            }
        }
        if (!stepped) {
            // Unreachable unless tie tolerances interact badly.
            throw Error("plan reconstruction failed");
        }
    }
    return plan;
}

std::vector<int> candidate_contents(std::span<const mining::AssociationRule> rules,
                                    const mining::ContextTransaction &context, const domain::Catalog &catalog) {
    struct Score {
        double confidence;
        double support;
    };
    std::map<int, Score> best;
    const auto items = mining::make_itemset(context.items);
    for (const auto &rule : rules) {
        if (!rule.consequent.is_content()) continue;
        if (!std::includes(items.begin(), items.end(), rule.antecedent.begin(), rule.antecedent.end())) continue;
        const int id = rule.consequent.number();
        if (!catalog.empty() && catalog.find(id) == nullptr) continue;
        auto [it, inserted] = best.try_emplace(id, Score{rule.confidence, rule.support});
        if (!inserted) {
            auto &cur = it->second;
            if (rule.confidence > cur.confidence ||
                (rule.confidence == cur.confidence && rule.support > cur.support)) {
                cur = Score{rule.confidence, rule.support};
            }
        }
    }
    if (best.empty()) {
        return catalog.ids();
    }
    std::vector<std::pair<int, Score>> ranked(best.begin(), best.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto &a, const auto &b) {
        if (a.second.confidence != b.second.confidence) return a.second.confidence > b.second.confidence;
        if (a.second.support != b.second.support) return a.second.support > b.second.support;
        return a.first < b.first;
    });
    std::vector<int> out;
    out.reserve(ranked.size());
    for (const auto &[id, score] : ranked) {
        out.push_back(id);
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json state_json(AffectiveState s) {
    return json::array({s.valence, s.arousal});
}

AffectiveState state_from(const json &j) {
    if (!j.is_array() || j.size() != 2) {
        throw DomainError("state must be a [valence, arousal] pair");
    }
    return AffectiveState::make(j[0].get<int>(), j[1].get<int>());
}

}  // namespace

void to_json(json &j, const RepairPlan &plan) {
    json states = json::array();
    for (const auto &s : plan.predicted_states) {
        states.push_back(state_json(s));
    }
    j = json{{"contents", plan.contents}, {"predicted_states", states}, {"log_likelihood", plan.log_likelihood}};
}

void from_json(const json &j, RepairPlan &plan) {
    plan.contents = j.at("contents").get<std::vector<int>>();
    plan.predicted_states.clear();
    for (const auto &s : j.at("predicted_states")) {
        plan.predicted_states.push_back(state_from(s));
    }
    if (plan.contents.size() != plan.predicted_states.size()) {
        throw DomainError("plan contents and predicted states differ in length");
    }
    plan.log_likelihood = j.at("log_likelihood").get<double>();
}

void to_json(json &j, const TransitionModel &model) {
    json counts = json::array();
    for (const auto &[key, n] : model.counts()) {
        const auto &[s, c, t] = key;
        counts.push_back(json::array({state_json(model.space().state_at(s)), c,
                                      state_json(model.space().state_at(t)), n}));
    }
    j = json{{"alpha", model.alpha()}, {"space", model.space().name()}, {"counts", counts}};
}

void from_json(const json &j, TransitionModel &model) {
    TransitionModel m(StateSpace::from_name(j.at("space").get<std::string>()), j.at("alpha").get<double>());
    for (const auto &row : j.at("counts")) {
        if (!row.is_array() || row.size() != 4) {
            throw DomainError("model count rows are [state, content, next, count]");
        }
        m.observe(Transition{state_from(row[0]), row[1].get<int>(), state_from(row[2])}, row[3].get<double>());
    }
    model = std::move(m);
}

}  // namespace drivesafe::recommend
