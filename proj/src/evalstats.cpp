#include "drivesafe/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "drivesafe/error.hpp"
#include "drivesafe/special_functions.hpp"
#include "tsv.hpp"

namespace drivesafe::evalstats {

Description describe(std::span<const double> scores) {
    if (scores.size() < 2) {
        throw DegenerateInputError(fmt::format("variance needs at least 2 scores, got {}", scores.size()));
    }
    Description d;
    d.n = scores.size();
    const auto n = static_cast<double>(d.n);
    d.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : scores) {
        ss += (v - d.mean) * (v - d.mean);
    }
    d.sample_variance = ss / (n - 1.0);
    d.population_variance = ss / n;
    d.sample_std = std::sqrt(d.sample_variance);
    d.population_std = std::sqrt(d.population_variance);
    return d;
}

Description describe(const GroupSample &group) {
    return describe(group.scores);
}

AnovaResult anova_oneway(std::span<const GroupSample> groups) {
    if (groups.size() < 2) {
        throw DegenerateInputError("ANOVA needs at least two groups");
    }
    std::size_t total_n = 0;
    double grand_sum = 0.0;
    for (const auto &g : groups) {
        if (g.scores.empty()) {
            throw DegenerateInputError(fmt::format("ANOVA group '{}' is empty", g.label));
        }
        total_n += g.scores.size();
        grand_sum += std::accumulate(g.scores.begin(), g.scores.end(), 0.0);
    }
    if (total_n <= groups.size()) {
        throw DegenerateInputError("ANOVA needs more observations than groups");
    }
    const double grand_mean = grand_sum / static_cast<double>(total_n);

    AnovaResult r;
    for (const auto &g : groups) {
        const double mean =
            std::accumulate(g.scores.begin(), g.scores.end(), 0.0) / static_cast<double>(g.scores.size());
        r.ss_model += static_cast<double>(g.scores.size()) * (mean - grand_mean) * (mean - grand_mean);
        for (double v : g.scores) {
            r.ss_residual += (v - mean) * (v - mean);
        }
    }
    r.df_model = static_cast<int>(groups.size()) - 1;
    r.df_residual = static_cast<int>(total_n - groups.size());
    r.ms_model = r.ss_model / r.df_model;
    r.ms_residual = r.ss_residual / r.df_residual;

    // Residual SS that is pure rounding noise relative to the data counts as zero.
    const double scale = std::max(r.ss_model, 1.0);
    if (r.ss_residual <= 1e-12 * scale) {
        if (r.ss_model <= 1e-12 * scale) {
            r.f_value = 0.0;
            r.p_value = 1.0;
        } else {
            r.f_infinite = true;
            r.f_value = std::numeric_limits<double>::infinity();
            r.p_value = 0.0;
        }
        return r;
    }
    r.f_value = r.ms_model / r.ms_residual;
    r.p_value = special::f_survival(r.f_value, r.df_model, r.df_residual);
    return r;
}

// ---------------------------------------------------------------------------
// Binomial intervals

std::string_view to_string(CiMethod method) noexcept {
    switch (method) {
        case CiMethod::Wald: return "Wald";
        case CiMethod::ClopperPearson: return "ClopperPearson";
        case CiMethod::Wilson: return "Wilson";
        case CiMethod::Jeffreys: return "Jeffreys";
        case CiMethod::AgrestiCoull: return "AgrestiCoull";
    }
    return "?";
}

CiMethod parse_ci_method(std::string_view text) {
    for (auto m : kCiMethods) {
        if (to_string(m) == text) return m;
    }
    throw DomainError(fmt::format("unknown interval method '{}'", text));
}

BinomialCI binom_ci(int x, int n, double level, CiMethod method) {
    if (n < 1 || x < 0 || x > n) {
        throw DomainError(fmt::format("binomial interval needs 0 <= x <= n, n >= 1 (x={}, n={})", x, n));
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw DomainError(fmt::format("confidence level {} outside (0, 1)", level));
    }
    const double alpha = 1.0 - level;
    const double z = special::normal_quantile(1.0 - alpha / 2.0);
    const auto nd = static_cast<double>(n);
    const auto xd = static_cast<double>(x);
    const double p = xd / nd;

    BinomialCI ci;
    ci.method = method;
    ci.prevalence = p;
    ci.level = level;
    switch (method) {
        case CiMethod::Wald: {
            const double half = z * std::sqrt(p * (1.0 - p) / nd);
            ci.lower = p - half;
            ci.upper = p + half;
            break;
        }
        case CiMethod::ClopperPearson: {
            ci.lower = x == 0 ? 0.0 : special::beta_quantile(alpha / 2.0, xd, nd - xd + 1.0);
            ci.upper = x == n ? 1.0 : special::beta_quantile(1.0 - alpha / 2.0, xd + 1.0, nd - xd);
            break;
        }
        case CiMethod::Wilson: {
            const double z2 = z * z;
            const double denom = 1.0 + z2 / nd;
            const double centre = (p + z2 / (2.0 * nd)) / denom;
            const double half = z / denom * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd));
            ci.lower = std::max(0.0, centre - half);
            ci.upper = std::min(1.0, centre + half);
            break;
        }
        case CiMethod::Jeffreys: {
            ci.lower = x == 0 ? 0.0 : special::beta_quantile(alpha / 2.0, xd + 0.5, nd - xd + 0.5);
            ci.upper = x == n ? 1.0 : special::beta_quantile(1.0 - alpha / 2.0, xd + 0.5, nd - xd + 0.5);
            break;
        }
        case CiMethod::AgrestiCoull: {
            const double n_adj = nd + z * z;
            const double p_adj = (xd + z * z / 2.0) / n_adj;
            const double half = z * std::sqrt(p_adj * (1.0 - p_adj) / n_adj);
            ci.lower = std::max(0.0, p_adj - half);
            ci.upper = std::min(1.0, p_adj + half);
            break;
        }
    }
    return ci;
}

// ---------------------------------------------------------------------------
// Files

std::vector<GroupSample> read_responses(std::istream &in) {
    const auto rows = detail::read_rows(in, '\t', {"user", "question", "score"}, "responses.tsv");
    std::vector<GroupSample> groups;
    for (const auto &row : rows) {
        if (row.fields.size() != 3) {
            throw ParseError(fmt::format("responses.tsv:{}: expected 3 fields", row.line));
        }
        const double score = detail::to_double(row.fields[2], "responses.tsv", row.line);
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const GroupSample &g) { return g.label == row.fields[0]; });
        if (it == groups.end()) {
            groups.push_back(GroupSample{row.fields[0], {}});
            it = std::prev(groups.end());
        }
        it->scores.push_back(score);
    }
    if (groups.empty()) {
        throw ParseError("responses.tsv: no scores");
    }
    return groups;
}

std::vector<GroupSample> load_responses(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(fmt::format("cannot open '{}'", path));
    }
    return read_responses(in);
}

BinaryTally read_binary(std::istream &in) {
    const auto rows = detail::read_rows(in, '\t', {"user", "question", "answer"}, "binary.tsv");
    BinaryTally t;
    for (const auto &row : rows) {
        if (row.fields.size() != 3) {
            throw ParseError(fmt::format("binary.tsv:{}: expected 3 fields", row.line));
        }
        const int v = detail::to_int(row.fields[2], "binary.tsv", row.line);
        if (v != 0 && v != 1) {
            throw ParseError(fmt::format("binary.tsv:{}: answer must be 0 or 1", row.line));
        }
        t.successes += v;
        ++t.trials;
    }
    return t;
}

BinaryTally load_binary(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(fmt::format("cannot open '{}'", path));
    }
    return read_binary(in);
}

std::string format_descriptives(std::span<const GroupSample> groups) {
    std::string out = fmt::format("{:<10}{:>10}{:>10}{:>20}\n", "Users", "Mean", "Variance", "Standard Deviation");
    GroupSample overall{"Overall", {}};
    for (const auto &g : groups) {
        const auto d = describe(g);
        out += fmt::format("{:<10}{:>10.2f}{:>10.2f}{:>20.2f}\n", g.label, d.mean, d.sample_variance,
                           d.population_std);
        overall.scores.insert(overall.scores.end(), g.scores.begin(), g.scores.end());
    }
    const auto d = describe(overall);
    out += fmt::format("{:<10}{:>10.2f}{:>10.2f}{:>20.2f}\n", overall.label, d.mean, d.sample_variance,
                       d.population_std);
    return out;
}

std::string format_anova(const AnovaResult &r) {
    std::string out;
    out += fmt::format("{:<28}{:>12.2f}\n", "Sum of Squares Residual", r.ss_residual);
    out += fmt::format("{:<28}{:>12.2f}\n", "Sum of Squares Model", r.ss_model);
    out += fmt::format("{:<28}{:>12.2f}\n", "Mean Square Residual", r.ms_residual);
    out += fmt::format("{:<28}{:>12.2f}\n", "Mean Square Explained", r.ms_model);
    out += r.f_infinite ? fmt::format("{:<28}{:>12}\n", "F-value", "inf")
                        : fmt::format("{:<28}{:>12.2f}\n", "F-value", r.f_value);
    out += fmt::format("{:<28}{:>12.4f}\n", "P-value", r.p_value);
    out += fmt::format("{:<28}{:>12}\n", "df (model, residual)", fmt::format("{}, {}", r.df_model, r.df_residual));
    return out;
}

std::string format_intervals(std::span<const BinomialCI> intervals) {
    std::string out = fmt::format("{:<16}{:>12}{:>12}{:>12}\n", "Method", "Prevalence", "Lower CL", "Upper CL");
    for (const auto &ci : intervals) {
        out += fmt::format("{:<16}{:>12.4f}{:>12.4f}{:>12.4f}\n", to_string(ci.method), ci.prevalence, ci.lower,
                           ci.upper);
    }
    return out;
}

}  // namespace drivesafe::evalstats
