#pragma once

// Context fusion into itemset transactions and Apriori association rule
// mining of context -> content rules.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "drivesafe/domain.hpp"
#include "drivesafe/inference.hpp"
#include "drivesafe/sigproc.hpp"

namespace drivesafe::mining {

enum class ItemKind { Activity, Arousal, Valence, EnvLight, EnvTemperature, EnvHumidity, Content };

/// One typed item, stored in its canonical text form ("activity_3",
/// "env_temp_comfort", "content_20"). Ordering is lexicographic on the text.
class Item {
  public:
    [[nodiscard]] static Item activity(int id);
    [[nodiscard]] static Item arousal(int level);
    [[nodiscard]] static Item valence(int level);
    [[nodiscard]] static Item light(domain::LightLevel level);
    [[nodiscard]] static Item temperature(domain::TemperatureLevel level);
    [[nodiscard]] static Item humidity(domain::HumidityLevel level);
    [[nodiscard]] static Item content(int id);
    /// Throws DomainError on unknown text.
    [[nodiscard]] static Item parse(std::string_view text);

    [[nodiscard]] ItemKind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::string &text() const noexcept { return text_; }
    /// Numeric payload for activity/arousal/valence/content items.
    [[nodiscard]] int number() const;
    [[nodiscard]] bool is_content() const noexcept { return kind_ == ItemKind::Content; }

    friend bool operator==(const Item &a, const Item &b) noexcept { return a.text_ == b.text_; }
    friend auto operator<=>(const Item &a, const Item &b) noexcept { return a.text_ <=> b.text_; }

  private:
    Item(ItemKind kind, std::string text) : kind_(kind), text_(std::move(text)) {}

    ItemKind kind_;
    std::string text_;
};

/// Sorted, duplicate-free.
using Itemset = std::vector<Item>;

[[nodiscard]] Itemset make_itemset(std::vector<Item> items);
[[nodiscard]] std::string to_string(const Itemset &items);

struct ContextTransaction {
    Itemset items;
    int period = 0;

    /// At most one item per kind; activity, arousal and valence present.
    void validate() const;
    [[nodiscard]] std::optional<int> content() const;

    friend bool operator==(const ContextTransaction &, const ContextTransaction &) = default;
};

struct FuseOptions {
    std::int64_t period_ms = 120'000;
    domain::EnvThresholds thresholds;
};

/// Observation period containing `t_ms`.
[[nodiscard]] int period_of(std::int64_t t_ms, std::int64_t period_ms);

/// Fuses one period's observations. Throws ConsistencyError when the
/// activity timestamp or the environment window falls outside the mood
/// estimate's period.
[[nodiscard]] ContextTransaction fuse_context(const inference::ActivityObservation &activity,
                                              const inference::MoodEstimate &mood, const sigproc::EnvSnapshot &env,
                                              std::optional<int> playing, const FuseOptions &options = {});

using FrequentItemsets = std::map<Itemset, double>;

inline constexpr double kDefaultMinSupport = 0.1;
inline constexpr double kDefaultMinConfidence = 0.6;
/// Slack for threshold comparisons on ratios of small integers.
inline constexpr double kThresholdEps = 1e-12;

/// All itemsets whose relative support is >= min_support, by level-wise
/// join-and-prune.
[[nodiscard]] FrequentItemsets apriori_frequent(std::span<const ContextTransaction> db,
                                                double min_support = kDefaultMinSupport);

struct AssociationRule {
    Itemset antecedent;
    Item consequent = Item::content(1);
    double support = 0;
    double confidence = 0;

    friend bool operator==(const AssociationRule &, const AssociationRule &) = default;
};

/// Rules antecedent -> single content item with confidence >= min_confidence,
/// ordered by (antecedent, consequent).
[[nodiscard]] std::vector<AssociationRule> apriori_rules(const FrequentItemsets &frequent,
                                                         double min_confidence = kDefaultMinConfidence);

// JSON lines: transactions.jsonl / rules.jsonl. These are also the wire payloads.
void to_json(nlohmann::json &j, const ContextTransaction &t);
void from_json(const nlohmann::json &j, ContextTransaction &t);
void to_json(nlohmann::json &j, const AssociationRule &r);
void from_json(const nlohmann::json &j, AssociationRule &r);

[[nodiscard]] std::vector<ContextTransaction> read_transactions(std::istream &in);
void write_transactions(std::ostream &out, std::span<const ContextTransaction> db);
[[nodiscard]] std::vector<AssociationRule> read_rules(std::istream &in);
void write_rules(std::ostream &out, std::span<const AssociationRule> rules);

}  // namespace drivesafe::mining
