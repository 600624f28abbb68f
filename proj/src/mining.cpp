#include "drivesafe/mining.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>

#include <fmt/core.h>

#include "drivesafe/error.hpp"

namespace drivesafe::mining {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Items

Item Item::activity(int id) {
    static_cast<void>(domain::activity_meta(id));
    return Item(ItemKind::Activity, fmt::format("activity_{}", id));
}

Item Item::arousal(int level) {
    if (level < domain::kAffectMin || level > domain::kAffectMax) {
        throw DomainError(fmt::format("arousal {} outside [1, 9]", level));
    }
    return Item(ItemKind::Arousal, fmt::format("arousal_{}", level));
}

Item Item::valence(int level) {
    if (level < domain::kAffectMin || level > domain::kAffectMax) {
        throw DomainError(fmt::format("valence {} outside [1, 9]", level));
    }
    return Item(ItemKind::Valence, fmt::format("valence_{}", level));
}

Item Item::light(domain::LightLevel level) {
    return Item(ItemKind::EnvLight, fmt::format("env_light_{}", domain::to_string(level)));
}

Item Item::temperature(domain::TemperatureLevel level) {
    return Item(ItemKind::EnvTemperature, fmt::format("env_temp_{}", domain::to_string(level)));
}

Item Item::humidity(domain::HumidityLevel level) {
    return Item(ItemKind::EnvHumidity, fmt::format("env_hum_{}", domain::to_string(level)));
}

Item Item::content(int id) {
    if (id < 1) {
        throw DomainError(fmt::format("content id {} must be >= 1", id));
    }
    return Item(ItemKind::Content, fmt::format("content_{}", id));
}

namespace {

std::optional<int> parse_number(std::string_view text) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        return std::nullopt;
    }
    return value;
}

}  // namespace

Item Item::parse(std::string_view text) {
    auto numbered = [&](std::string_view prefix, auto make) -> std::optional<Item> {
        if (!text.starts_with(prefix)) {
            return std::nullopt;
        }
        const auto n = parse_number(text.substr(prefix.size()));
        if (!n) {
            throw DomainError(fmt::format("malformed item '{}'", text));
        }
        return make(*n);
    };
    if (auto i = numbered("activity_", &Item::activity)) return *i;
    if (auto i = numbered("arousal_", &Item::arousal)) return *i;
    if (auto i = numbered("valence_", &Item::valence)) return *i;
    if (auto i = numbered("content_", &Item::content)) return *i;
    using namespace domain;
    for (auto l : {LightLevel::Low, LightLevel::Medium, LightLevel::High}) {
        if (Item::light(l).text() == text) return Item::light(l);
    }
    for (auto t : {TemperatureLevel::Cold, TemperatureLevel::Comfort, TemperatureLevel::Hot}) {
        if (Item::temperature(t).text() == text) return Item::temperature(t);
    }
    for (auto h : {HumidityLevel::Dry, HumidityLevel::Comfort, HumidityLevel::Humid}) {
        if (Item::humidity(h).text() == text) return Item::humidity(h);
    }
    throw DomainError(fmt::format("unknown item '{}'", text));
}

int Item::number() const {
    const auto pos = text_.rfind('_');
    const auto n = parse_number(std::string_view(text_).substr(pos + 1));
    if (!n) {
        throw DomainError(fmt::format("item '{}' carries no number", text_));
    }
    return *n;
}

Itemset make_itemset(std::vector<Item> items) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    return items;
}

std::string to_string(const Itemset &items) {
    std::string out = "{";
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += (i ? ", " : "") + items[i].text();
    }
    return out + "}";
}

// ---------------------------------------------------------------------------
// Transactions

void ContextTransaction::validate() const {
    if (!std::is_sorted(items.begin(), items.end()) ||
        std::adjacent_find(items.begin(), items.end()) != items.end()) {
        throw DomainError(fmt::format("transaction {} items not sorted/unique", period));
    }
    std::set<ItemKind> kinds;
    for (const auto &item : items) {
        if (!kinds.insert(item.kind()).second) {
            throw DomainError(fmt::format("transaction {} repeats an item kind ({})", period, item.text()));
        }
    }
    for (auto required : {ItemKind::Activity, ItemKind::Arousal, ItemKind::Valence}) {
        if (!kinds.contains(required)) {
            throw DomainError(fmt::format("transaction {} lacks activity/arousal/valence", period));
        }
    }
}

std::optional<int> ContextTransaction::content() const {
    for (const auto &item : items) {
        if (item.is_content()) {
            return item.number();
        }
    }
    return std::nullopt;
}

int period_of(std::int64_t t_ms, std::int64_t period_ms) {
    if (period_ms <= 0) {
        throw DomainError("period length must be positive");
    }
    if (t_ms < 0) {
        throw DomainError("timestamps must be non-negative");
    }
    return static_cast<int>(t_ms / period_ms);
}

ContextTransaction fuse_context(const inference::ActivityObservation &activity, const inference::MoodEstimate &mood,
                                const sigproc::EnvSnapshot &env, std::optional<int> playing,
                                const FuseOptions &options) {
    const int activity_period = period_of(activity.t_ms, options.period_ms);
    if (activity_period != mood.period_index) {
        throw ConsistencyError(fmt::format("activity observed in period {}, mood estimate is for period {}",
                                           activity_period, mood.period_index));
    }
    const int env_period = period_of(env.t_end_ms, options.period_ms);
    if (env_period != mood.period_index) {
        throw ConsistencyError(fmt::format("environment window ends in period {}, mood estimate is for period {}",
                                           env_period, mood.period_index));
    }
    const auto bucket =
        domain::bucketize(env.light.mean, env.temperature.mean, env.humidity.mean, options.thresholds);
    std::vector<Item> items{
        Item::activity(activity.activity),
        Item::arousal(mood.state.arousal),
        Item::valence(mood.state.valence),
        Item::light(bucket.light),
        Item::temperature(bucket.temperature),
        Item::humidity(bucket.humidity),
    };
    if (playing) {
        items.push_back(Item::content(*playing));
    }
    ContextTransaction t{make_itemset(std::move(items)), mood.period_index};
    t.validate();
    return t;
}

// ---------------------------------------------------------------------------
// Apriori

namespace {

using Encoded = std::vector<int>;

bool meets(std::size_t count, std::size_t total, double min_support) {
    return static_cast<double>(count) / static_cast<double>(total) >= min_support - kThresholdEps;
}

}  // namespace

FrequentItemsets apriori_frequent(std::span<const ContextTransaction> db, double min_support) {
    if (db.empty()) {
        throw DomainError("apriori needs a non-empty transaction database");
    }
    if (!(min_support > 0.0) || min_support > 1.0) {
        throw DomainError(fmt::format("min_support {} outside (0, 1]", min_support));
    }

    // Intern items in sorted order so encoded itemsets sort like the originals.
    std::vector<Item> vocab;
    for (const auto &t : db) {
        vocab.insert(vocab.end(), t.items.begin(), t.items.end());
    }
    vocab = make_itemset(std::move(vocab));
    auto code_of = [&vocab](const Item &item) {
        return static_cast<int>(std::lower_bound(vocab.begin(), vocab.end(), item) - vocab.begin());
    };
    std::vector<Encoded> rows;
    rows.reserve(db.size());
    for (const auto &t : db) {
        Encoded e;
        for (const auto &item : make_itemset(t.items)) {
            e.push_back(code_of(item));
        }
        rows.push_back(std::move(e));
    }

    const std::size_t total = db.size();
    FrequentItemsets out;
    auto emit = [&](const Encoded &set, std::size_t count) {
        Itemset items;
        items.reserve(set.size());
        for (int code : set) {
            items.push_back(vocab[static_cast<std::size_t>(code)]);
        }
        out.emplace(std::move(items), static_cast<double>(count) / static_cast<double>(total));
    };

    // Level 1.
    std::vector<std::size_t> single(vocab.size(), 0);
    for (const auto &row : rows) {
        for (int code : row) {
            ++single[static_cast<std::size_t>(code)];
        }
    }
    std::vector<Encoded> level;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        if (meets(single[i], total, min_support)) {
            level.push_back({static_cast<int>(i)});
            emit(level.back(), single[i]);
        }
    }

    while (level.size() > 1) {
        // Join: pairs sharing all but the last item. `level` is sorted.
        const std::set<Encoded> previous(level.begin(), level.end());
        std::vector<Encoded> candidates;
        for (std::size_t i = 0; i < level.size(); ++i) {
            for (std::size_t j = i + 1; j < level.size(); ++j) {
                if (!std::equal(level[i].begin(), level[i].end() - 1, level[j].begin())) {
                    break;
                }
                Encoded c = level[i];
                c.push_back(level[j].back());
                // Prune: every (k-1)-subset must be frequent.
                bool keep = true;
                for (std::size_t drop = 0; drop + 2 < c.size() && keep; ++drop) {
                    Encoded sub;
                    sub.reserve(c.size() - 1);
                    for (std::size_t k = 0; k < c.size(); ++k) {
                        if (k != drop) sub.push_back(c[k]);
                    }
                    keep = previous.contains(sub);
                }
                if (keep) {
                    candidates.push_back(std::move(c));
                }
            }
        }
        std::vector<Encoded> next;
        for (auto &c : candidates) {
            std::size_t count = 0;
            for (const auto &row : rows) {
                if (std::includes(row.begin(), row.end(), c.begin(), c.end())) {
                    ++count;
                }
            }
            if (meets(count, total, min_support)) {
                emit(c, count);
                next.push_back(std::move(c));
            }
        }
        level = std::move(next);
    }
    return out;
}

std::vector<AssociationRule> apriori_rules(const FrequentItemsets &frequent, double min_confidence) {
    if (!(min_confidence > 0.0) || min_confidence > 1.0) {
        throw DomainError(fmt::format("min_confidence {} outside (0, 1]", min_confidence));
    }
    std::vector<AssociationRule> rules;
    for (const auto &[items, support] : frequent) {
        for (std::size_t k = 0; k < items.size(); ++k) {
            if (!items[k].is_content() || items.size() < 2) {
                continue;
            }
            Itemset antecedent;
            for (std::size_t m = 0; m < items.size(); ++m) {
                if (m != k) antecedent.push_back(items[m]);
            }
            if (std::any_of(antecedent.begin(), antecedent.end(), [](const Item &i) { return i.is_content(); })) {
                continue;
            }
            const auto it = frequent.find(antecedent);
            if (it == frequent.end() || it->second <= 0.0) {
                continue;
            }
            const double confidence = support / it->second;
            if (confidence >= min_confidence - kThresholdEps) {
                rules.push_back(AssociationRule{std::move(antecedent), items[k], support, confidence});
            }
        }
    }
    std::sort(rules.begin(), rules.end(), [](const AssociationRule &a, const AssociationRule &b) {
        if (a.antecedent != b.antecedent) return a.antecedent < b.antecedent;
        return a.consequent < b.consequent;
    });
    return rules;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json items_to_json(const Itemset &items) {
    json arr = json::array();
    for (const auto &item : items) {
        arr.push_back(item.text());
    }
    return arr;
}

Itemset items_from_json(const json &j) {
    std::vector<Item> items;
    for (const auto &e : j) {
        items.push_back(Item::parse(e.get<std::string>()));
    }
    return make_itemset(std::move(items));
}

}  // namespace

void to_json(json &j, const ContextTransaction &t) {
    j = json{{"period", t.period}, {"items", items_to_json(t.items)}};
}

void from_json(const json &j, ContextTransaction &t) {
    t.period = j.at("period").get<int>();
    t.items = items_from_json(j.at("items"));
    t.validate();
}

void to_json(json &j, const AssociationRule &r) {
    j = json{{"antecedent", items_to_json(r.antecedent)},
             {"consequent", r.consequent.text()},
             {"support", r.support},
             {"confidence", r.confidence}};
}

void from_json(const json &j, AssociationRule &r) {
    r.antecedent = items_from_json(j.at("antecedent"));
    r.consequent = Item::parse(j.at("consequent").get<std::string>());
    if (!r.consequent.is_content()) {
        throw DomainError("rule consequent must be a content item");
    }
    r.support = j.at("support").get<double>();
    r.confidence = j.at("confidence").get<double>();
}

namespace {

template <typename T>
std::vector<T> read_jsonl(std::istream &in, std::string_view what) {
    std::vector<T> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(json::parse(line).get<T>());
        } catch (const json::exception &e) {
            throw ParseError(fmt::format("{}:{}: {}", what, lineno, e.what()));
        } catch (const DomainError &e) {
            throw ParseError(fmt::format("{}:{}: {}", what, lineno, e.what()));
        }
    }
    return out;
}

}  // namespace

std::vector<ContextTransaction> read_transactions(std::istream &in) {
    return read_jsonl<ContextTransaction>(in, "transactions.jsonl");
}

void write_transactions(std::ostream &out, std::span<const ContextTransaction> db) {
    for (const auto &t : db) {
        out << json(t).dump() << '\n';
    }
}

std::vector<AssociationRule> read_rules(std::istream &in) {
    return read_jsonl<AssociationRule>(in, "rules.jsonl");
}

void write_rules(std::ostream &out, std::span<const AssociationRule> rules) {
    for (const auto &r : rules) {
        out << json(r).dump() << '\n';
    }
}

}  // namespace drivesafe::mining
