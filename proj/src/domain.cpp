#include "drivesafe/domain.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/core.h>

#include "builtin_tables.hpp"
#include "drivesafe/error.hpp"
#include "tsv.hpp"

namespace drivesafe::domain {

AffectiveState AffectiveState::make(int valence, int arousal) {
    AffectiveState s{valence, arousal};
    if (!s.valid()) {
        throw DomainError(fmt::format("affective state ({}, {}) outside [1, 9]^2", valence, arousal));
    }
    return s;
}

bool AffectiveState::valid() const noexcept {
    return valence >= kAffectMin && valence <= kAffectMax && arousal >= kAffectMin && arousal <= kAffectMax;
}

int AffectiveState::cell() const {
    if (!valid()) {
        throw DomainError(fmt::format("affective state ({}, {}) outside [1, 9]^2", valence, arousal));
    }
    return (valence - kAffectMin) * kAffectLevels + (arousal - kAffectMin);
}

AffectiveState AffectiveState::from_cell(int cell) {
    if (cell < 0 || cell >= kMoodCells) {
        throw DomainError(fmt::format("mood cell {} outside [0, 81)", cell));
    }
    return AffectiveState{cell / kAffectLevels + kAffectMin, cell % kAffectLevels + kAffectMin};
}

Polarity polarity_of(AffectiveState state) noexcept {
    if (state.valence < 5) {
        return Polarity::Negative;
    }
    return state.valence == 5 ? Polarity::Neutral : Polarity::Positive;
}

// ---------------------------------------------------------------------------
// Mood table

MoodTable MoodTable::parse(std::istream &in) {
    const auto rows = detail::read_rows(in, '\t', {"valence", "arousal", "label"}, "moods.tsv");
    MoodTable table;
    std::array<bool, kMoodCells> seen{};
    for (const auto &row : rows) {
        if (row.fields.size() != 3) {
            throw ParseError(fmt::format("moods.tsv:{}: expected 3 fields", row.line));
        }
        const int v = detail::to_int(row.fields[0], "moods.tsv", row.line);
        const int a = detail::to_int(row.fields[1], "moods.tsv", row.line);
        const AffectiveState state{v, a};
        if (!state.valid()) {
            throw ParseError(fmt::format("moods.tsv:{}: coordinates ({}, {}) out of range", row.line, v, a));
        }
        if (row.fields[2].empty()) {
            throw ParseError(fmt::format("moods.tsv:{}: empty label", row.line));
        }
        const int cell = state.cell();
        if (seen[cell]) {
            throw ParseError(fmt::format("moods.tsv:{}: duplicate cell ({}, {})", row.line, v, a));
        }
        seen[cell] = true;
        table.cells_[cell] = MoodLabel{row.fields[2], state, polarity_of(state)};
    }
    if (rows.size() != kMoodCells) {
        throw ParseError(fmt::format("moods.tsv: expected {} cells, found {}", kMoodCells, rows.size()));
    }
    return table;
}

MoodTable MoodTable::load(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(fmt::format("cannot open '{}'", path));
    }
    return parse(in);
}

const MoodTable &MoodTable::builtin() {
    static const MoodTable table = [] {
        std::istringstream in{std::string(builtin::kMoodsTsv)};
        return parse(in);
    }();
    return table;
}

const MoodLabel &MoodTable::lookup(AffectiveState state) const {
    return cells_[state.cell()];
}

Polarity MoodTable::polarity(const MoodLabel &label) const {
    if (!label.cell.valid()) {
        throw DomainError(fmt::format("mood label '{}' has invalid coordinates", label.name));
    }
    const auto &expected = lookup(label.cell);
    if (expected.name != label.name) {
        throw DomainError(fmt::format("unknown mood label '{}' at ({}, {})", label.name, label.cell.valence,
                                      label.cell.arousal));
    }
    return polarity_of(label.cell);
}

Polarity MoodTable::polarity(std::string_view name) const {
    const auto cells = cells_named(name);
    if (cells.empty()) {
        throw DomainError(fmt::format("unknown mood label '{}'", name));
    }
    const Polarity p = polarity_of(cells.front());
    for (const auto &c : cells) {
        if (polarity_of(c) != p) {
            throw DomainError(fmt::format("mood label '{}' spans several polarities", name));
        }
    }
    return p;
}

std::vector<AffectiveState> MoodTable::cells_named(std::string_view name) const {
    std::vector<AffectiveState> out;
    for (const auto &label : cells_) {
        if (label.name == name) {
            out.push_back(label.cell);
        }
    }
    return out;
}

const MoodLabel &mood_lookup(AffectiveState state) {
    return MoodTable::builtin().lookup(state);
}

Polarity mood_polarity(const MoodLabel &label) {
    return MoodTable::builtin().polarity(label);
}

// ---------------------------------------------------------------------------
// Activities

ActivityTable ActivityTable::parse(std::istream &in) {
    const auto rows = detail::read_rows(in, '\t', {"id", "description", "meta"}, "activities.tsv");
    if (rows.size() != kActivityCount) {
        throw ParseError(fmt::format("activities.tsv: expected {} classes, found {}", kActivityCount, rows.size()));
    }
    ActivityTable table;
    std::array<bool, kActivityCount> seen{};
    for (const auto &row : rows) {
        if (row.fields.size() != 3) {
            throw ParseError(fmt::format("activities.tsv:{}: expected 3 fields", row.line));
        }
        const int id = detail::to_int(row.fields[0], "activities.tsv", row.line);
        if (id < 0 || id >= kActivityCount || seen[id]) {
            throw ParseError(fmt::format("activities.tsv:{}: bad or duplicate id {}", row.line, id));
        }
        seen[id] = true;
        const ActivityMeta meta = parse_activity_meta(row.fields[2]);
        if ((meta == ActivityMeta::SafeDriving) != (id == 0)) {
            throw ParseError(fmt::format("activities.tsv:{}: only class 0 may be SafeDriving", row.line));
        }
        table.classes_[id] = ActivityClass{id, row.fields[1], meta};
    }
    return table;
}

ActivityTable ActivityTable::load(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(fmt::format("cannot open '{}'", path));
    }
    return parse(in);
}

const ActivityTable &ActivityTable::builtin() {
    static const ActivityTable table = [] {
        std::istringstream in{std::string(builtin::kActivitiesTsv)};
        return parse(in);
    }();
    return table;
}

const ActivityClass &ActivityTable::at(int id) const {
    if (id < 0 || id >= kActivityCount) {
        throw DomainError(fmt::format("activity id {} outside [0, 9]", id));
    }
    return classes_[id];
}

ActivityMeta activity_meta(int id) {
    if (id < 0 || id >= kActivityCount) {
        throw DomainError(fmt::format("activity id {} outside [0, 9]", id));
    }
    return id == 0 ? ActivityMeta::SafeDriving : ActivityMeta::DistractedDriving;
}

// ---------------------------------------------------------------------------
// Catalog

Catalog::Catalog(std::vector<ContentId> items) : items_(std::move(items)) {
    std::set<int> ids;
    for (const auto &item : items_) {
        if (item.id < 1) {
            throw DomainError(fmt::format("content id {} must be >= 1", item.id));
        }
        if (!ids.insert(item.id).second) {
            throw DomainError(fmt::format("duplicate content id {}", item.id));
        }
    }
    std::sort(items_.begin(), items_.end(), [](const auto &a, const auto &b) { return a.id < b.id; });
}

Catalog Catalog::parse(std::istream &in) {
    const auto rows = detail::read_rows(in, '\t', {"content_id", "title", "valence_tendency"}, "catalog.tsv");
    std::vector<ContentId> items;
    items.reserve(rows.size());
    for (const auto &row : rows) {
        if (row.fields.size() != 3) {
            throw ParseError(fmt::format("catalog.tsv:{}: expected 3 fields", row.line));
        }
        items.push_back(ContentId{detail::to_int(row.fields[0], "catalog.tsv", row.line), row.fields[1],
                                  detail::to_int(row.fields[2], "catalog.tsv", row.line)});
    }
    try {
        return Catalog(std::move(items));
    } catch (const DomainError &e) {
        throw ParseError(std::string("catalog.tsv: ") + e.what());
    }
}

Catalog Catalog::load(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(fmt::format("cannot open '{}'", path));
    }
    return parse(in);
}

const Catalog &Catalog::builtin() {
    static const Catalog catalog = [] {
        std::istringstream in{std::string(builtin::kCatalogTsv)};
        return parse(in);
    }();
    return catalog;
}

const ContentId *Catalog::find(int id) const noexcept {
    const auto it = std::lower_bound(items_.begin(), items_.end(), id,
                                     [](const ContentId &c, int value) { return c.id < value; });
    return it != items_.end() && it->id == id ? &*it : nullptr;
}

std::vector<int> Catalog::ids() const {
    std::vector<int> out;
    out.reserve(items_.size());
    for (const auto &item : items_) {
        out.push_back(item.id);
    }
    return out;
}

void Catalog::write(std::ostream &out) const {
    out << "content_id\ttitle\tvalence_tendency\n";
    for (const auto &item : items_) {
        out << item.id << '\t' << item.title << '\t' << item.valence_tendency << '\n';
    }
}

// ---------------------------------------------------------------------------
// Environment

void EnvThresholds::validate() const {
    if (!(light_low_lux < light_high_lux) || !(temp_cold_c < temp_hot_c) ||
        !(humidity_dry_pct < humidity_humid_pct)) {
        throw DomainError("environment thresholds must be strictly increasing per axis");
    }
}

EnvironmentBucket bucketize(double light_lux, double temp_c, double humidity_pct, const EnvThresholds &t) {
    t.validate();
    EnvironmentBucket b;
    b.light = light_lux < t.light_low_lux    ? LightLevel::Low
              : light_lux > t.light_high_lux ? LightLevel::High
                                             : LightLevel::Medium;
    b.temperature = temp_c < t.temp_cold_c  ? TemperatureLevel::Cold
                    : temp_c > t.temp_hot_c ? TemperatureLevel::Hot
                                            : TemperatureLevel::Comfort;
    b.humidity = humidity_pct < t.humidity_dry_pct     ? HumidityLevel::Dry
                 : humidity_pct > t.humidity_humid_pct ? HumidityLevel::Humid
                                                       : HumidityLevel::Comfort;
    return b;
}

std::string_view to_string(ActivityMeta meta) noexcept {
    return meta == ActivityMeta::SafeDriving ? "SafeDriving" : "DistractedDriving";
}

std::string_view to_string(Polarity polarity) noexcept {
    switch (polarity) {
        case Polarity::Negative: return "Negative";
        case Polarity::Neutral: return "Neutral";
        case Polarity::Positive: return "Positive";
    }
    return "?";
}

std::string_view to_string(LightLevel level) noexcept {
    switch (level) {
        case LightLevel::Low: return "low";
        case LightLevel::Medium: return "medium";
        case LightLevel::High: return "high";
    }
    return "?";
}

std::string_view to_string(TemperatureLevel level) noexcept {
    switch (level) {
        case TemperatureLevel::Cold: return "cold";
        case TemperatureLevel::Comfort: return "comfort";
        case TemperatureLevel::Hot: return "hot";
    }
    return "?";
}

std::string_view to_string(HumidityLevel level) noexcept {
    switch (level) {
        case HumidityLevel::Dry: return "dry";
        case HumidityLevel::Comfort: return "comfort";
        case HumidityLevel::Humid: return "humid";
    }
    return "?";
}

ActivityMeta parse_activity_meta(std::string_view text) {
    if (text == "SafeDriving" || text == "Safe") {
        return ActivityMeta::SafeDriving;
    }
    if (text == "DistractedDriving" || text == "Distracted") {
        return ActivityMeta::DistractedDriving;
    }
    throw DomainError(fmt::format("unknown activity meta-class '{}'", text));
}

}  // namespace drivesafe::domain
