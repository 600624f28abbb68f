#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "drivesafe/error.hpp"
#include "drivesafe/recommend.hpp"
#include "recommend_oracle.hpp"

using namespace drivesafe;
using namespace drivesafe::recommend;
using domain::AffectiveState;

namespace {

AffectiveState st(int v, int a) { return AffectiveState::make(v, a); }

}  // namespace

TEST(StateSpaces, IndexAndNames) {
    const auto full = StateSpace::full();
    EXPECT_EQ(full.size(), 81u);
    EXPECT_EQ(full.index_of(st(1, 1)), 0u);
    EXPECT_EQ(full.state_at(80), st(9, 9));
    const auto grid = StateSpace::grid3x3();
    EXPECT_EQ(grid.size(), 9u);
    EXPECT_EQ(grid.state_at(grid.index_of(st(3, 7))), (AffectiveState{2, 8}));
    EXPECT_EQ(grid.index_of(st(9, 1)), grid.index_of(st(7, 3)));
    EXPECT_EQ(StateSpace::from_name(grid.name()), grid);
    EXPECT_EQ(StateSpace::from_name(full.name()), full);
    const auto toy = StateSpace::custom({st(2, 2), st(7, 7)});
    EXPECT_THROW((void)toy.index_of(st(5, 5)), DomainError);
    EXPECT_THROW((void)StateSpace::custom({st(2, 2), st(2, 2)}), DomainError);
}

TEST(Learn, EmptyHistoryIsUniform) {
    const auto model = learn_transitions({}, 1.0);
    for (std::size_t s = 0; s < 81; s += 7)
        for (std::size_t t = 0; t < 81; t += 5) EXPECT_DOUBLE_EQ(model.probability(s, 20, t), 1.0 / 81.0);
}

TEST(Learn, SingleObservationDominatesAsAlphaVanishes) {
    const std::vector<Transition> h{{st(3, 8), 20, st(6, 5)}};
    double prev = 0;
    for (double alpha : {1.0, 1e-2, 1e-4, 1e-8}) {
        const double p = learn_transitions(h, alpha).probability(st(3, 8), 20, st(6, 5));
        EXPECT_GT(p, prev);
        prev = p;
    }
    EXPECT_NEAR(prev, 1.0, 1e-6);
    EXPECT_THROW((void)TransitionModel(StateSpace::full(), 0.0), DomainError);
}

TEST(Learn, ToyHistoryMatchesHandCounts) {
    const auto space = StateSpace::custom({st(2, 7), st(4, 5), st(7, 4)});
    const std::vector<Transition> h{
        {st(2, 7), 1, st(4, 5)}, {st(2, 7), 1, st(4, 5)}, {st(2, 7), 1, st(2, 7)},
        {st(4, 5), 1, st(7, 4)}, {st(2, 7), 2, st(7, 4)},
    };
    const auto m = learn_transitions(h, 1.0, space);
    // From (2,7) under content 1: counts 1, 2, 0 over three states, total 3.
    EXPECT_DOUBLE_EQ(m.probability(0, 1, 0), 2.0 / 6.0);
    EXPECT_DOUBLE_EQ(m.probability(0, 1, 1), 3.0 / 6.0);
    EXPECT_DOUBLE_EQ(m.probability(0, 1, 2), 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(m.probability(1, 1, 2), 2.0 / 4.0);
    EXPECT_DOUBLE_EQ(m.probability(0, 2, 2), 2.0 / 4.0);
    EXPECT_DOUBLE_EQ(m.probability(2, 1, 0), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.count(0, 1, 1), 2.0);
    EXPECT_EQ(m.contents(), (std::vector<int>{1, 2}));
}

TEST(Learn, ConditionalsAreProperDistributions) {
    std::mt19937_64 gen(4);
    const auto space = StateSpace::grid3x3();
    const auto model = dstest::random_model(gen, space, {1, 5, 9}, 0.7);
    for (std::size_t s = 0; s < space.size(); ++s)
        for (int c : {1, 5, 9, 42}) {
            double total = 0;
            for (std::size_t t = 0; t < space.size(); ++t) {
                const double p = model.probability(s, c, t);
                EXPECT_GT(p, 0.0);
                total += p;
            }
            EXPECT_NEAR(total, 1.0, 1e-9);
        }
}

TEST(Plan, StartAtTargetGivesEmptyPlan) {
    const auto plan = plan_repair(TransitionModel{}, st(7, 3), valence_at_least(6), 5, std::vector<int>{1});
    ASSERT_TRUE(plan);
    EXPECT_TRUE(plan->contents.empty());
    EXPECT_EQ(plan->log_likelihood, 0.0);
}

TEST(Plan, RejectsBadArguments) {
    const TransitionModel m;
    EXPECT_THROW((void)plan_repair(m, st(2, 2), valence_at_least(6), 3, std::vector<int>{}), DomainError);
    EXPECT_THROW((void)plan_repair(m, st(2, 2), valence_at_least(6), 0, std::vector<int>{1}), DomainError);
}

TEST(Plan, FollowsDeterministicChain) {
    const auto space = StateSpace::custom({st(2, 8), st(4, 6), st(7, 4)});
    TransitionModel m(space, 1e-12);
    m.observe(0, 1, 1, 1.0);
    m.observe(1, 2, 2, 1.0);
    const auto plan = plan_repair(m, st(2, 8), valence_at_least(6), 3, std::vector<int>{1, 2});
    ASSERT_TRUE(plan);
    EXPECT_EQ(plan->contents, (std::vector<int>{1, 2}));
    EXPECT_EQ(plan->predicted_states, (std::vector<AffectiveState>{st(4, 6), st(7, 4)}));
    EXPECT_NEAR(plan->log_likelihood, 0.0, 1e-9);
}

TEST(Plan, NoPathWithinHorizon) {
    const auto space = StateSpace::custom({st(2, 8), st(3, 6)});
    EXPECT_FALSE(plan_repair(TransitionModel(space), st(2, 8), valence_at_least(6), 4, std::vector<int>{1}));
}

TEST(Plan, TwoStateTwoContentToyMatchesEnumeration) {
    const auto space = StateSpace::custom({st(3, 7), st(7, 3)});
    TransitionModel m(space, 1.0);
    m.observe(0, 1, 0, 3);
    m.observe(0, 1, 1, 1);
    m.observe(0, 2, 1, 2);
    m.observe(0, 2, 0, 2);
    const std::vector<int> cands{1, 2};
    const auto got = plan_repair(m, st(3, 7), valence_at_least(6), 3, cands);
    EXPECT_TRUE(dstest::same_plan(got, dstest::brute_force_plan(m, st(3, 7), valence_at_least(6), 3, cands)));
    ASSERT_TRUE(got);
    EXPECT_EQ(got->contents, (std::vector<int>{2}));
    EXPECT_NEAR(got->log_likelihood, std::log(3.0 / 6.0), 1e-12);
}

TEST(Plan, TiesPreferFewerStepsThenLowestContentAndState) {
    // Uniform model: every one-step path ties; the lowest content id and
    // the lowest-index target state win.
    const auto space = StateSpace::custom({st(2, 2), st(8, 8), st(6, 1)});
    const TransitionModel m(space, 1.0);
    const auto plan = plan_repair(m, st(2, 2), valence_at_least(6), 4, std::vector<int>{9, 4, 7});
    ASSERT_TRUE(plan);
    EXPECT_EQ(plan->contents, (std::vector<int>{4}));
    EXPECT_EQ(plan->predicted_states, (std::vector<AffectiveState>{st(8, 8)}));
}

TEST(Plan, MatchesExhaustiveEnumerationOnSmallModels) {
    const auto r = dstest::planner_sweep(11, 40);
    EXPECT_GT(r.cases, 4000);
    EXPECT_EQ(r.mismatches, 0);
}

TEST(Plan, PlanIsValidPath) {
    std::mt19937_64 gen(8);
    const auto space = StateSpace::grid3x3();
    const auto model = dstest::random_model(gen, space, {3, 5}, 1.0);
    const auto plan = plan_repair(model, st(2, 8), valence_at_least(6), 5, std::vector<int>{3, 5});
    ASSERT_TRUE(plan);
    ASSERT_EQ(plan->contents.size(), plan->predicted_states.size());
    EXPECT_TRUE(valence_at_least(6)(plan->predicted_states.back()));
    double ll = 0;
    AffectiveState s = st(2, 8);
    for (std::size_t i = 0; i < plan->contents.size(); ++i) {
        ll += std::log(model.probability(s, plan->contents[i], plan->predicted_states[i]));
        s = plan->predicted_states[i];
    }
    EXPECT_NEAR(plan->log_likelihood, ll, 1e-9);
}

TEST(Plan, ScalingCountsAndAlphaKeepsTheArgmax) {
    std::mt19937_64 gen(21);
    for (int trial = 0; trial < 20; ++trial) {
        const auto space = dstest::random_space(gen, 4);
        const std::vector<int> cands{1, 2, 3};
        const auto base = dstest::random_model(gen, space, cands, 1.0);
        TransitionModel scaled(space, 7.0);
        for (const auto &[key, n] : base.counts()) {
            scaled.observe(std::get<0>(key), std::get<1>(key), std::get<2>(key), 7.0 * n);
        }
        for (const auto &start : space.states()) {
            const auto a = plan_repair(base, start, valence_at_least(6), 3, cands);
            const auto b = plan_repair(scaled, start, valence_at_least(6), 3, cands);
            ASSERT_EQ(a.has_value(), b.has_value());
            if (a) {
                EXPECT_EQ(a->contents, b->contents);
                EXPECT_EQ(a->predicted_states, b->predicted_states);
            }
        }
    }
}

TEST(Plan, IsReproducible) {
    std::mt19937_64 g1(3), g2(3);
    const auto m1 = dstest::random_model(g1, StateSpace::grid3x3(), {1, 2}, 1.0);
    const auto m2 = dstest::random_model(g2, StateSpace::grid3x3(), {1, 2}, 1.0);
    const auto p1 = plan_repair(m1, st(1, 9), valence_at_least(6), 5, std::vector<int>{1, 2});
    const auto p2 = plan_repair(m2, st(1, 9), valence_at_least(6), 5, std::vector<int>{1, 2});
    ASSERT_TRUE(p1 && p2);
    EXPECT_EQ(nlohmann::json(*p1).dump(), nlohmann::json(*p2).dump());
}

TEST(Model, TsvRoundTripPreservesHash) {
    std::mt19937_64 gen(12);
    const auto model = dstest::random_model(gen, StateSpace::grid3x3(), {4, 20}, 0.5);
    std::stringstream ss;
    model.write(ss);
    const auto back = TransitionModel::parse(ss);
    EXPECT_EQ(back, model);
    EXPECT_EQ(back.snapshot_hash(), model.snapshot_hash());
    EXPECT_EQ(model.snapshot_hash().size(), 16u);
    auto changed = model;
    changed.observe(0, 4, 1, 1.0);
    EXPECT_NE(changed.snapshot_hash(), model.snapshot_hash());
}

TEST(Model, JsonRoundTrip) {
    const auto model = learn_transitions(std::vector<Transition>{{st(3, 8), 20, st(6, 5)}});
    const TransitionModel back = nlohmann::json(model).get<TransitionModel>();
    EXPECT_EQ(back, model);
}

namespace {

mining::AssociationRule rule(std::vector<mining::Item> ante, int content, double support, double confidence) {
    return {mining::make_itemset(std::move(ante)), mining::Item::content(content), support, confidence};
}

mining::ContextTransaction context_a3_ar7_v2() {
    return {mining::make_itemset({mining::Item::activity(3), mining::Item::arousal(7), mining::Item::valence(2),
                                  mining::Item::light(domain::LightLevel::Medium)}),
            0};
}

}  // namespace

TEST(Candidates, MatchingRuleComesFirst) {
    using mining::Item;
    const std::vector<mining::AssociationRule> rules{
        rule({Item::activity(3), Item::arousal(7), Item::valence(2)}, 20, 0.4, 1.0),
        rule({Item::activity(3)}, 7, 0.5, 0.7),
        rule({Item::activity(0)}, 4, 0.5, 0.9),
    };
    const auto c = candidate_contents(rules, context_a3_ar7_v2(), domain::Catalog::builtin());
    EXPECT_EQ(c, (std::vector<int>{20, 7}));
}

TEST(Candidates, FallBackToWholeCatalog) {
    using mining::Item;
    const std::vector<mining::AssociationRule> rules{rule({Item::activity(0)}, 4, 0.5, 0.9)};
    EXPECT_EQ(candidate_contents(rules, context_a3_ar7_v2(), domain::Catalog::builtin()),
              domain::Catalog::builtin().ids());
    EXPECT_EQ(candidate_contents({}, context_a3_ar7_v2(), domain::Catalog::builtin()),
              domain::Catalog::builtin().ids());
}

TEST(Candidates, EqualConfidenceRanksLowerSupportLater) {
    using mining::Item;
    const std::vector<mining::AssociationRule> rules{
        rule({Item::activity(3)}, 5, 0.2, 0.8),
        rule({Item::arousal(7)}, 9, 0.3, 0.8),
        rule({Item::valence(2)}, 1, 0.2, 0.8),
    };
    EXPECT_EQ(candidate_contents(rules, context_a3_ar7_v2(), domain::Catalog::builtin()),
              (std::vector<int>{9, 1, 5}));
}
