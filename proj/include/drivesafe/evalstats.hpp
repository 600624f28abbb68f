#pragma once

// Evaluation statistics for the usability and effectiveness questionnaires:
// descriptive statistics, one-way ANOVA and binomial confidence intervals.

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace drivesafe::evalstats {

struct GroupSample {
    std::string label;
    std::vector<double> scores;
};

/// Both divisors are reported: usability tables print the sample variance
/// next to the population standard deviation.
struct Description {
    std::size_t n = 0;
    double mean = 0;
    double sample_variance = 0;      ///< divisor n - 1
    double population_variance = 0;  ///< divisor n
    double sample_std = 0;
    double population_std = 0;
};

/// Throws DegenerateInputError when the group has fewer than two scores.
[[nodiscard]] Description describe(const GroupSample &group);
[[nodiscard]] Description describe(std::span<const double> scores);

struct AnovaResult {
    double ss_model = 0;
    double ss_residual = 0;
    double ms_model = 0;
    double ms_residual = 0;
    double f_value = 0;
    double p_value = 1;
    int df_model = 0;
    int df_residual = 0;
    /// Zero within-group variance with non-zero between-group variance.
    bool f_infinite = false;
};

/// One-way between/within decomposition; p from the F(df_model, df_residual)
/// upper tail. Needs >= 2 non-empty groups and more scores than groups.
[[nodiscard]] AnovaResult anova_oneway(std::span<const GroupSample> groups);

enum class CiMethod { Wald, ClopperPearson, Wilson, Jeffreys, AgrestiCoull };

inline constexpr std::array<CiMethod, 5> kCiMethods{CiMethod::Wald, CiMethod::ClopperPearson, CiMethod::Wilson,
                                                    CiMethod::Jeffreys, CiMethod::AgrestiCoull};

[[nodiscard]] std::string_view to_string(CiMethod method) noexcept;
[[nodiscard]] CiMethod parse_ci_method(std::string_view text);

struct BinomialCI {
    CiMethod method = CiMethod::Wald;
    double prevalence = 0;
    double lower = 0;
    double upper = 0;
    double level = 0.95;
};

/// Two-sided interval for x successes in n trials at confidence `level`.
///
/// Wald is the plain normal approximation and may leave [0, 1]. Agresti-Coull
/// is clamped to [0, 1]. Clopper-Pearson and Jeffreys use lower = 0 at x = 0
/// and upper = 1 at x = n.
[[nodiscard]] BinomialCI binom_ci(int x, int n, double level, CiMethod method);

// responses.tsv (user, question, score) -> one group per user in file order.
[[nodiscard]] std::vector<GroupSample> read_responses(std::istream &in);
[[nodiscard]] std::vector<GroupSample> load_responses(const std::string &path);

struct BinaryTally {
    int successes = 0;
    int trials = 0;
};

// binary.tsv (user, question, answer in {0, 1}).
[[nodiscard]] BinaryTally read_binary(std::istream &in);
[[nodiscard]] BinaryTally load_binary(const std::string &path);

/// Text report shaped like the usability/ANOVA/interval tables.
[[nodiscard]] std::string format_descriptives(std::span<const GroupSample> groups);
[[nodiscard]] std::string format_anova(const AnovaResult &result);
[[nodiscard]] std::string format_intervals(std::span<const BinomialCI> intervals);

}  // namespace drivesafe::evalstats
