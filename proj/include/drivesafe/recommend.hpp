#pragma once

// Per-driver Bayesian transition model P(next state | content, state) and the
// maximum-likelihood content sequence planner built on it.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "drivesafe/domain.hpp"
#include "drivesafe/mining.hpp"

namespace drivesafe::recommend {

using domain::AffectiveState;

/// The discrete states the model is defined over.
///
/// - Full: the 81 (valence, arousal) cells.
/// - Grid3x3: valence and arousal each coarsened to {1-3, 4-6, 7-9}; a state
///   is represented by its cell centre (2, 5 or 8 on each axis).
/// - Custom: an explicit ordered list of states (used for toy models).
class StateSpace {
  public:
    enum class Kind { Full, Grid3x3, Custom };

    [[nodiscard]] static StateSpace full();
    [[nodiscard]] static StateSpace grid3x3();
    [[nodiscard]] static StateSpace custom(std::vector<AffectiveState> states);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t size() const noexcept { return states_.size(); }
    /// Index of the state containing `s`; DomainError if none does.
    [[nodiscard]] std::size_t index_of(AffectiveState s) const;
    [[nodiscard]] AffectiveState state_at(std::size_t index) const;
    [[nodiscard]] const std::vector<AffectiveState> &states() const noexcept { return states_; }
    [[nodiscard]] std::string name() const;
    [[nodiscard]] static StateSpace from_name(const std::string &name);

    friend bool operator==(const StateSpace &, const StateSpace &) = default;

  private:
    Kind kind_ = Kind::Full;
    std::vector<AffectiveState> states_;
};

struct Transition {
    AffectiveState state;
    int content = 0;
    AffectiveState next;
};

/// Laplace-smoothed conditional model:
///   P(s'|c,s) = (count(s,c,s') + alpha) / (sum_s'' count(s,c,s'') + alpha |S|)
class TransitionModel {
  public:
    explicit TransitionModel(StateSpace space = StateSpace::full(), double alpha = 1.0);

    void observe(const Transition &t, double weight = 1.0);
    void observe(std::size_t state, int content, std::size_t next, double weight = 1.0);

    [[nodiscard]] double probability(std::size_t state, int content, std::size_t next) const;
    [[nodiscard]] double probability(AffectiveState state, int content, AffectiveState next) const;
    [[nodiscard]] double log_probability(std::size_t state, int content, std::size_t next) const;
    [[nodiscard]] double count(std::size_t state, int content, std::size_t next) const;

    [[nodiscard]] const StateSpace &space() const noexcept { return space_; }
    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    /// Keyed (state index, content, next index); zero counts are not stored.
    [[nodiscard]] const std::map<std::tuple<std::size_t, int, std::size_t>, double> &counts() const noexcept {
        return counts_;
    }
    /// Contents that appear in at least one observation.
    [[nodiscard]] std::vector<int> contents() const;

    /// model.tsv: `# alpha=<a> space=<name>` header then rows s, c, s', count
    /// with states written as "valence,arousal".
    void write(std::ostream &out) const;
    [[nodiscard]] static TransitionModel parse(std::istream &in);
    [[nodiscard]] static TransitionModel load(const std::string &path);

    /// FNV-1a 64 of the canonical model.tsv serialization, as 16 hex digits.
    [[nodiscard]] std::string snapshot_hash() const;

    friend bool operator==(const TransitionModel &, const TransitionModel &) = default;

  private:
    StateSpace space_;
    double alpha_;
    std::map<std::tuple<std::size_t, int, std::size_t>, double> counts_;
    std::map<std::pair<std::size_t, int>, double> totals_;
};

[[nodiscard]] TransitionModel learn_transitions(std::span<const Transition> history, double alpha = 1.0,
                                                StateSpace space = StateSpace::full());

using TargetPredicate = std::function<bool(AffectiveState)>;

/// valence >= min_valence (default: positive polarity).
[[nodiscard]] TargetPredicate valence_at_least(int min_valence = 6);

inline constexpr int kDefaultHorizon = 5;
/// Log-likelihoods closer than this are treated as ties.
inline constexpr double kTieEps = 1e-9;

struct RepairPlan {
    std::vector<int> contents;
    std::vector<AffectiveState> predicted_states;
    double log_likelihood = 0;

    friend bool operator==(const RepairPlan &, const RepairPlan &) = default;
};

/// Maximum-likelihood (content, state) path of length <= horizon from
/// `start` to a state satisfying `target`. Ties: higher log-likelihood
/// (within kTieEps), then fewer steps, then lexicographically smallest
/// (content id, state index) per step from the first. Returns nullopt when
/// no path reaches the target; DomainError on empty candidates or
/// horizon < 1. Predicted states are the state-space representatives.
[[nodiscard]] std::optional<RepairPlan> plan_repair(const TransitionModel &model, AffectiveState start,
                                                    const TargetPredicate &target, int horizon,
                                                    std::span<const int> candidates);

/// Contents of rules whose antecedent is contained in the context, ranked by
/// confidence desc, support desc, id asc (best rule per content). Falls back
/// to the whole catalog (ascending ids) when no rule matches.
[[nodiscard]] std::vector<int> candidate_contents(std::span<const mining::AssociationRule> rules,
                                                  const mining::ContextTransaction &context,
                                                  const domain::Catalog &catalog);

void to_json(nlohmann::json &j, const RepairPlan &plan);
void from_json(const nlohmann::json &j, RepairPlan &plan);
void to_json(nlohmann::json &j, const TransitionModel &model);
void from_json(const nlohmann::json &j, TransitionModel &model);

}  // namespace drivesafe::recommend
