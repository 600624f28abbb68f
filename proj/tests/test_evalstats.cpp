#include <gtest/gtest.h>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "drivesafe/error.hpp"
#include "drivesafe/evalstats.hpp"
#include "drivesafe/special_functions.hpp"
#include "test_support.hpp"

using namespace drivesafe;
using namespace drivesafe::evalstats;

namespace bm = boost::math;

namespace {

std::vector<GroupSample> usability() { return load_responses(dstest::fixture_path("responses.tsv")); }

double z_of(double level) { return bm::quantile(bm::normal(), 1.0 - (1.0 - level) / 2.0); }

// Textbook interval formulas with Boost quantiles.
std::pair<double, double> oracle_ci(int x, int n, double level, CiMethod m) {
    const double a = 1.0 - level;
    const double z = z_of(level);
    const double p = static_cast<double>(x) / n;
    switch (m) {
        case CiMethod::Wald: {
            const double h = z * std::sqrt(p * (1 - p) / n);
            return {p - h, p + h};
        }
        case CiMethod::ClopperPearson: {
            const double lo = x == 0 ? 0.0 : bm::quantile(bm::beta_distribution<>(x, n - x + 1), a / 2);
            const double hi = x == n ? 1.0 : bm::quantile(bm::beta_distribution<>(x + 1, n - x), 1 - a / 2);
            return {lo, hi};
        }
        case CiMethod::Jeffreys: {
            const bm::beta_distribution<> b(x + 0.5, n - x + 0.5);
            return {x == 0 ? 0.0 : bm::quantile(b, a / 2), x == n ? 1.0 : bm::quantile(b, 1 - a / 2)};
        }
        case CiMethod::Wilson: {
            const double d = 1 + z * z / n;
            const double c = (p + z * z / (2.0 * n)) / d;
            const double h = z / d * std::sqrt(p * (1 - p) / n + z * z / (4.0 * n * n));
            return {std::max(0.0, c - h), std::min(1.0, c + h)};
        }
        case CiMethod::AgrestiCoull: {
            const double nt = n + z * z;
            const double pt = (x + z * z / 2) / nt;
            const double h = z * std::sqrt(pt * (1 - pt) / nt);
            return {std::max(0.0, pt - h), std::min(1.0, pt + h)};
        }
    }
    return {0, 0};
}

struct Printed {
    CiMethod method;
    double lower, upper;
};

const Printed kPrinted[] = {
    {CiMethod::Wald, 0.8434, 1.0066},      {CiMethod::ClopperPearson, 0.7961, 0.9843},
    {CiMethod::Wilson, 0.8014, 0.9742},    {CiMethod::Jeffreys, 0.8132, 0.9784},
    {CiMethod::AgrestiCoull, 0.7943, 0.9812},
};

}  // namespace

TEST(Describe, HandArithmetic) {
    const auto a = describe(std::vector<double>{5, 5, 5, 5, 5, 4});
    EXPECT_NEAR(a.mean, 29.0 / 6.0, 1e-12);
    EXPECT_NEAR(a.sample_variance, (5.0 / 36.0) / 5.0 * 6.0, 1e-12);
    EXPECT_NEAR(a.population_std, std::sqrt(5.0 / 36.0), 1e-12);
    EXPECT_NEAR(a.mean, 4.83, 0.005);
    EXPECT_NEAR(a.sample_variance, 0.17, 0.005);
    EXPECT_NEAR(a.population_std, 0.37, 0.005);

    const auto b = describe(std::vector<double>{1, 2, 3});
    EXPECT_DOUBLE_EQ(b.mean, 2.0);
    EXPECT_DOUBLE_EQ(b.sample_variance, 1.0);

    const auto c = describe(std::vector<double>(7, 3.25));
    EXPECT_EQ(c.sample_variance, 0.0);
    EXPECT_EQ(c.population_std, 0.0);
    EXPECT_THROW((void)describe(std::vector<double>{1.0}), DegenerateInputError);
}

TEST(Describe, UsabilityFixtureReproducesPublishedGroupRows) {
    // (mean, sample variance, population std) as printed. Group E's mean is
    // printed truncated (16/6 = 2.667), so rows compare at +-0.01.
    const double rows[5][3] = {
        {4.83, 0.17, 0.37}, {4.5, 0.3, 0.5}, {4.67, 0.27, 0.47}, {4.67, 0.27, 0.47}, {2.66, 3.87, 1.80},
    };
    const auto groups = usability();
    ASSERT_EQ(groups.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        const auto d = describe(groups[i]);
        EXPECT_EQ(d.n, 6u);
        EXPECT_NEAR(d.mean, rows[i][0], 0.01) << groups[i].label;
        EXPECT_NEAR(d.sample_variance, rows[i][1], 0.01) << groups[i].label;
        EXPECT_NEAR(d.population_std, rows[i][2], 0.01) << groups[i].label;
    }
}

TEST(Anova, UsabilityFixtureReproducesPublishedTable) {
    const auto r = anova_oneway(usability());
    EXPECT_EQ(r.df_model, 4);
    EXPECT_EQ(r.df_residual, 25);
    EXPECT_NEAR(r.ss_model, 19.53, 0.005);
    EXPECT_NEAR(r.ss_residual, 24.33, 0.005);
    EXPECT_NEAR(r.ms_model, 4.88, 0.01);
    EXPECT_NEAR(r.ms_residual, 0.97, 0.01);
    EXPECT_NEAR(r.f_value, 5.02, 0.02);
    EXPECT_NEAR(r.p_value, 0.0041, 0.0005);
}

TEST(Anova, MatchesBoostFisherTail) {
    const auto r = anova_oneway(usability());
    const bm::fisher_f dist(r.df_model, r.df_residual);
    EXPECT_NEAR(r.p_value, bm::cdf(bm::complement(dist, r.f_value)), 1e-9);
    for (double f : {0.1, 0.9, 2.5, 5.0, 12.0}) {
        for (auto [d1, d2] : {std::pair{1, 5}, std::pair{4, 25}, std::pair{7, 3}}) {
            EXPECT_NEAR(special::f_survival(f, d1, d2), bm::cdf(bm::complement(bm::fisher_f(d1, d2), f)), 1e-9);
        }
    }
}

TEST(Anova, SumsOfSquaresDecomposeTheTotal) {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd(10, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<GroupSample> groups(3 + trial % 3);
        double sum = 0, sumsq = 0;
        int n = 0;
        for (auto &g : groups) {
            for (int i = 0; i < 2 + trial % 4; ++i) {
                const double v = nd(gen);
                g.scores.push_back(v);
                sum += v;
                sumsq += v * v;
                ++n;
            }
        }
        const double total = sumsq - sum * sum / n;
        const auto r = anova_oneway(groups);
        EXPECT_NEAR((r.ss_model + r.ss_residual) / total, 1.0, 1e-9);
        EXPECT_NEAR(r.ms_model, r.ss_model / r.df_model, 1e-12);
        EXPECT_NEAR(r.f_value, r.ms_model / r.ms_residual, 1e-9);
        EXPECT_GE(r.p_value, 0.0);
        EXPECT_LE(r.p_value, 1.0);
    }
}

TEST(Anova, DegenerateGroups) {
    const std::vector<GroupSample> same{{"a", {2, 2, 2}}, {"b", {2, 2}}};
    const auto r = anova_oneway(same);
    EXPECT_EQ(r.ss_model, 0.0);
    EXPECT_EQ(r.f_value, 0.0);
    EXPECT_FALSE(r.f_infinite);

    // Between-group sum of squares weights each group by its size:
    // 2 * 0.25 + 2 * 0.25.
    const std::vector<GroupSample> split{{"a", {0, 0}}, {"b", {1, 1}}};
    const auto s = anova_oneway(split);
    EXPECT_DOUBLE_EQ(s.ss_model, 1.0);
    EXPECT_EQ(s.ss_residual, 0.0);
    EXPECT_TRUE(s.f_infinite);
    EXPECT_EQ(s.p_value, 0.0);

    EXPECT_THROW((void)anova_oneway(std::vector<GroupSample>{{"a", {1, 2}}}), DegenerateInputError);
    EXPECT_THROW((void)anova_oneway(std::vector<GroupSample>{{"a", {1}}, {"b", {2}}}), DegenerateInputError);
}

TEST(Anova, PValueAgreesWithPermutationTest) {
    std::mt19937_64 gen(12345);
    std::normal_distribution<double> nd(0, 1);
    std::vector<GroupSample> groups(3);
    const double shift[3] = {0.0, 0.6, 1.1};
    std::vector<double> pooled;
    for (std::size_t g = 0; g < 3; ++g) {
        for (int i = 0; i < 8; ++i) {
            groups[g].scores.push_back(nd(gen) + shift[g]);
            pooled.push_back(groups[g].scores.back());
        }
    }
    const auto observed = anova_oneway(groups);
    int exceed = 0;
    const int rounds = 10000;
    for (int k = 0; k < rounds; ++k) {
        std::shuffle(pooled.begin(), pooled.end(), gen);
        std::vector<GroupSample> perm(3);
        for (std::size_t i = 0; i < pooled.size(); ++i) perm[i / 8].scores.push_back(pooled[i]);
        exceed += anova_oneway(perm).f_value >= observed.f_value;
    }
    EXPECT_NEAR(static_cast<double>(exceed) / rounds, observed.p_value, 0.01);
}

TEST(BinomCI, PublishedIntervalsForThirtySevenOfForty) {
    for (const auto &row : kPrinted) {
        const auto ci = binom_ci(37, 40, 0.95, row.method);
        EXPECT_NEAR(ci.prevalence, 0.925, 1e-12);
        EXPECT_NEAR(ci.lower, row.lower, 0.001) << to_string(row.method);
        EXPECT_NEAR(ci.upper, row.upper, 0.001) << to_string(row.method);
    }
}

TEST(BinomCI, MatchesBoostQuantileFormulas) {
    for (int n : {1, 2, 7, 40, 123}) {
        for (int x = 0; x <= n; x += std::max(1, n / 9)) {
            for (double level : {0.8, 0.95, 0.99}) {
                for (auto m : kCiMethods) {
                    const auto ci = binom_ci(x, n, level, m);
                    const auto [lo, hi] = oracle_ci(x, n, level, m);
                    EXPECT_NEAR(ci.lower, lo, 1e-8) << to_string(m) << " " << x << "/" << n;
                    EXPECT_NEAR(ci.upper, hi, 1e-8) << to_string(m) << " " << x << "/" << n;
                    EXPECT_EQ(ci.level, level);
                }
            }
        }
    }
}

TEST(BinomCI, BoundsAndConventions) {
    const auto wald = binom_ci(37, 40, 0.95, CiMethod::Wald);
    EXPECT_GT(wald.upper, 1.0);
    for (auto m : {CiMethod::Wilson, CiMethod::AgrestiCoull, CiMethod::ClopperPearson, CiMethod::Jeffreys}) {
        for (int x : {0, 1, 20, 39, 40}) {
            const auto ci = binom_ci(x, 40, 0.95, m);
            EXPECT_GE(ci.lower, 0.0);
            EXPECT_LE(ci.upper, 1.0);
            EXPECT_LE(ci.lower, ci.prevalence + 1e-12);
            EXPECT_GE(ci.upper, ci.prevalence - 1e-12);
        }
    }
    for (int n : {1, 5, 40}) {
        EXPECT_EQ(binom_ci(n, n, 0.95, CiMethod::ClopperPearson).upper, 1.0);
        EXPECT_EQ(binom_ci(0, n, 0.95, CiMethod::ClopperPearson).lower, 0.0);
    }
    EXPECT_THROW((void)binom_ci(5, 4, 0.95, CiMethod::Wilson), DomainError);
    EXPECT_THROW((void)binom_ci(1, 4, 1.0, CiMethod::Wilson), DomainError);
    EXPECT_THROW((void)binom_ci(0, 0, 0.95, CiMethod::Wilson), DomainError);
}

TEST(BinomCI, WidthsShrinkLikeInverseRootN) {
    for (auto m : kCiMethods) {
        const double w40 = [&] { auto c = binom_ci(30, 40, 0.95, m); return c.upper - c.lower; }();
        const double w400 = [&] { auto c = binom_ci(300, 400, 0.95, m); return c.upper - c.lower; }();
        const double w4000 = [&] { auto c = binom_ci(3000, 4000, 0.95, m); return c.upper - c.lower; }();
        EXPECT_NEAR(w40 / w400 / std::sqrt(10.0), 1.0, 0.12) << to_string(m);
        EXPECT_NEAR(w400 / w4000 / std::sqrt(10.0), 1.0, 0.03) << to_string(m);
    }
}

TEST(BinomCI, MethodNamesRoundTrip) {
    for (auto m : kCiMethods) EXPECT_EQ(parse_ci_method(to_string(m)), m);
    EXPECT_THROW((void)parse_ci_method("bootstrap"), DomainError);
}

TEST(SpecialFunctions, AgreeWithBoost) {
    for (double p : {1e-6, 0.025, 0.3, 0.5, 0.975, 1 - 1e-6}) {
        EXPECT_NEAR(special::normal_quantile(p), bm::quantile(bm::normal(), p), 1e-9);
    }
    for (auto [a, b] : {std::pair{0.5, 0.5}, std::pair{37.5, 3.5}, std::pair{2.0, 30.0}}) {
        for (double x : {0.01, 0.2, 0.5, 0.9}) {
            EXPECT_NEAR(special::incomplete_beta(a, b, x), bm::cdf(bm::beta_distribution<>(a, b), x), 1e-10);
            EXPECT_NEAR(special::beta_quantile(x, a, b), bm::quantile(bm::beta_distribution<>(a, b), x), 1e-9);
        }
    }
}

TEST(Files, BinaryQuestionnaireTally) {
    const auto t = load_binary(dstest::fixture_path("binary.tsv"));
    EXPECT_EQ(t.successes, 37);
    EXPECT_EQ(t.trials, 40);
    std::istringstream bad("user\tquestion\tanswer\nA\tQ1\t2\n");
    EXPECT_THROW((void)read_binary(bad), ParseError);
}

TEST(Files, ResponsesKeepFileOrderAndFormat) {
    const auto groups = usability();
    EXPECT_EQ(groups.front().label, "A");
    EXPECT_EQ(groups.back().label, "E");
    const auto text = format_descriptives(groups);
    EXPECT_NE(text.find("Overall"), std::string::npos);
    EXPECT_NE(format_anova(anova_oneway(groups)).find("5.02"), std::string::npos);
}
