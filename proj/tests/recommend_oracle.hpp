#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "drivesafe/recommend.hpp"

namespace dstest {

using drivesafe::domain::AffectiveState;
using drivesafe::recommend::RepairPlan;
using drivesafe::recommend::StateSpace;
using drivesafe::recommend::TargetPredicate;
using drivesafe::recommend::TransitionModel;

struct PathCandidate {
    std::vector<int> contents;
    std::vector<std::size_t> states;
    double log_likelihood = 0;
};

/// Enumerates every (content, state) path that stops at its first target
/// state within `horizon` steps and keeps the best under the planner's
/// ordering: likelihood, then length, then (content, state index) per step.
inline std::optional<RepairPlan> brute_force_plan(const TransitionModel &model, AffectiveState start,
                                                  const TargetPredicate &target, int horizon,
                                                  std::vector<int> candidates) {
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    const auto &space = model.space();
    const std::size_t s0 = space.index_of(start);
    if (target(space.state_at(s0))) return RepairPlan{};

    std::optional<PathCandidate> best;
    const auto consider = [&](const PathCandidate &p) {
        if (!best) {
            best = p;
            return;
        }
        const double eps = drivesafe::recommend::kTieEps;
        if (p.log_likelihood > best->log_likelihood + eps) {
            best = p;
            return;
        }
        if (p.log_likelihood < best->log_likelihood - eps) return;
        if (p.contents.size() != best->contents.size()) {
            if (p.contents.size() < best->contents.size()) best = p;
            return;
        }
        for (std::size_t i = 0; i < p.contents.size(); ++i) {
            if (p.contents[i] != best->contents[i]) {
                if (p.contents[i] < best->contents[i]) best = p;
                return;
            }
            if (p.states[i] != best->states[i]) {
                if (p.states[i] < best->states[i]) best = p;
                return;
            }
        }
    };

    PathCandidate path;
    const auto walk = [&](auto &&self, std::size_t s, int depth) -> void {
        for (int c : candidates) {
            for (std::size_t t = 0; t < space.size(); ++t) {
                path.contents.push_back(c);
                path.states.push_back(t);
                const double lp = std::log(model.probability(s, c, t));
                path.log_likelihood += lp;
                if (target(space.state_at(t))) {
                    consider(path);
                } else if (depth + 1 < horizon) {
                    self(self, t, depth + 1);
                }
                path.log_likelihood -= lp;
                path.contents.pop_back();
                path.states.pop_back();
            }
        }
    };
    walk(walk, s0, 0);
    if (!best) return std::nullopt;
    RepairPlan plan;
    plan.contents = best->contents;
    for (auto s : best->states) plan.predicted_states.push_back(space.state_at(s));
    plan.log_likelihood = best->log_likelihood;
    return plan;
}

/// Distinct random cells; valence spread so both target and non-target
/// states usually appear.
inline StateSpace random_space(std::mt19937_64 &gen, int n) {
    std::vector<int> cells(drivesafe::domain::kMoodCells);
    for (int i = 0; i < drivesafe::domain::kMoodCells; ++i) cells[static_cast<std::size_t>(i)] = i;
    std::shuffle(cells.begin(), cells.end(), gen);
    std::vector<AffectiveState> states;
    for (int i = 0; i < n; ++i) states.push_back(AffectiveState::from_cell(cells[static_cast<std::size_t>(i)]));
    return StateSpace::custom(states);
}

/// Small integer counts (including many zeros) so exact ties are common.
inline TransitionModel random_model(std::mt19937_64 &gen, const StateSpace &space, const std::vector<int> &contents,
                                    double alpha) {
    TransitionModel model(space, alpha);
    std::uniform_int_distribution<int> count(0, 3);
    for (std::size_t s = 0; s < space.size(); ++s)
        for (int c : contents)
            for (std::size_t t = 0; t < space.size(); ++t) {
                const int k = count(gen);
                if (k > 0) model.observe(s, c, t, k);
            }
    return model;
}

inline bool same_plan(const std::optional<RepairPlan> &a, const std::optional<RepairPlan> &b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return a->contents == b->contents && a->predicted_states == b->predicted_states &&
           std::abs(a->log_likelihood - b->log_likelihood) <= 1e-9;
}

struct SweepResult {
    int cases = 0;
    int mismatches = 0;
};

/// Every combination of 1..4 states, 1..3 contents, horizon 1..4 and start
/// state, over `models_per_shape` random count tables each, plus the
/// all-zero table where every path of equal length ties exactly.
inline SweepResult planner_sweep(std::uint64_t seed, int models_per_shape) {
    std::mt19937_64 gen(seed);
    SweepResult r;
    const auto target = drivesafe::recommend::valence_at_least(6);
    for (int n = 1; n <= 4; ++n) {
        for (int k = 1; k <= 3; ++k) {
            std::vector<int> contents;
            for (int c = 0; c < k; ++c) contents.push_back(3 * c + 2);
            for (int m = 0; m <= models_per_shape; ++m) {
                const auto space = random_space(gen, n);
                const auto model = m == 0 ? TransitionModel(space, 1.0) : random_model(gen, space, contents, m % 2 ? 1.0 : 0.5);
                for (int h = 1; h <= 4; ++h) {
                    for (const auto &start : space.states()) {
                        ++r.cases;
                        const auto got = drivesafe::recommend::plan_repair(model, start, target, h, contents);
                        const auto want = brute_force_plan(model, start, target, h, contents);
                        if (!same_plan(got, want)) ++r.mismatches;
                    }
                }
            }
        }
    }
    return r;
}

}  // namespace dstest
