// drivesafe: command-line front end for scenario runs, rule mining, content
// planning, questionnaire statistics and session synthesis.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "CLI11.hpp"

#include "drivesafe/error.hpp"
#include "drivesafe/evalstats.hpp"
#include "drivesafe/mining.hpp"
#include "drivesafe/recommend.hpp"
#include "drivesafe/scenario.hpp"
#include "drivesafe/simulator.hpp"

namespace ds = drivesafe;

namespace {

int cmd_run(const std::string &manifest_path, const std::string &mode, std::optional<std::uint64_t> seed,
            const std::string &out_dir, double speed) {
    const auto manifest = ds::cpsnet::Manifest::load(manifest_path);
    ds::cpsnet::RunOptions options;
    options.mode = ds::cpsnet::parse_run_mode(mode);
    options.seed = seed;
    options.realtime_speed = speed;
    const auto result = ds::cpsnet::run_scenario(manifest, options);

    fmt::print("events: {}\n", result.events.size());
    for (auto type : {ds::cpsnet::MsgType::ActivityEvent, ds::cpsnet::MsgType::SafetyNotification,
                      ds::cpsnet::MsgType::SensorBatch, ds::cpsnet::MsgType::MoodResult,
                      ds::cpsnet::MsgType::RuleSet, ds::cpsnet::MsgType::RepairPlanMsg}) {
        fmt::print("  {:<20} delivered {:>6}  dropped {:>4}\n", ds::cpsnet::to_string(type), result.count(type),
                   result.count(type, ds::cpsnet::EventKind::Drop));
    }
    fmt::print("transactions: {}\nrules: {}\n", result.transactions.size(), result.rules.size());
    for (const auto &p : result.plans) {
        if (p.status == ds::cpsnet::PlanStatus::Initial) {
            continue;
        }
        std::string contents;
        if (p.plan) {
            for (int c : p.plan->contents) {
                contents += fmt::format("{}{}", contents.empty() ? "" : ",", c);
            }
        }
        fmt::print("period {}: {} [{}] playing {}\n", p.period, ds::cpsnet::to_string(p.status), contents,
                   p.playing ? std::to_string(*p.playing) : "-");
    }
    for (const auto &n : result.notes) {
        fmt::print("note: {}\n", n);
    }
    if (!out_dir.empty()) {
        ds::cpsnet::write_outputs(result, out_dir);
        fmt::print("outputs written to {}\n", out_dir);
    }
    return 0;
}

int cmd_mine(const std::string &path, double min_support, double min_confidence, const std::string &out_path) {
    std::ifstream in(path);
    if (!in) {
        throw ds::ParseError(fmt::format("cannot open '{}'", path));
    }
    const auto db = ds::mining::read_transactions(in);
    const auto rules = ds::mining::apriori_rules(ds::mining::apriori_frequent(db, min_support), min_confidence);
    if (out_path.empty()) {
        ds::mining::write_rules(std::cout, rules);
    } else {
        std::ofstream out(out_path);
        ds::mining::write_rules(out, rules);
        fmt::print("{} rules written to {}\n", rules.size(), out_path);
    }
    return 0;
}

ds::domain::AffectiveState parse_state(const std::string &text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) {
        throw ds::DomainError(fmt::format("state '{}' is not 'valence,arousal'", text));
    }
    return ds::domain::AffectiveState::make(std::stoi(text.substr(0, comma)), std::stoi(text.substr(comma + 1)));
}

int cmd_plan(const std::string &model_path, const std::string &start, const std::string &target, int horizon,
             std::vector<int> candidates) {
    const auto model = ds::recommend::TransitionModel::load(model_path);
    std::string t = target;
    if (t.starts_with("v>=")) {
        t = t.substr(3);
    }
    const auto predicate = ds::recommend::valence_at_least(std::stoi(t));
    if (candidates.empty()) {
        candidates = model.contents();
    }
    const auto plan = ds::recommend::plan_repair(model, parse_state(start), predicate, horizon, candidates);
    if (!plan) {
        fmt::print("no plan reaches the target within {} steps\n", horizon);
        return 2;
    }
    fmt::print("{}\n", nlohmann::json(*plan).dump(2));
    return 0;
}

int cmd_stats(const std::string &responses, const std::string &binary, double level) {
    const auto groups = ds::evalstats::load_responses(responses);
    fmt::print("{}\n", ds::evalstats::format_descriptives(groups));
    fmt::print("{}\n", ds::evalstats::format_anova(ds::evalstats::anova_oneway(groups)));
    if (!binary.empty()) {
        const auto tally = ds::evalstats::load_binary(binary);
        std::vector<ds::evalstats::BinomialCI> cis;
        for (auto m : ds::evalstats::kCiMethods) {
            cis.push_back(ds::evalstats::binom_ci(tally.successes, tally.trials, level, m));
        }
        fmt::print("{}/{} positive\n{}", tally.successes, tally.trials, ds::evalstats::format_intervals(cis));
    }
    return 0;
}

int cmd_synth(const std::string &script_path, const std::string &out_dir) {
    const auto script = ds::scenario::SessionScript::load(script_path);
    ds::scenario::emit_session(script, out_dir);
    fmt::print("session written to {}/manifest.json\n", out_dir);
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"drivesafe: driver activity, mood and content-recommendation platform simulator"};
    app.require_subcommand(1);

    std::string manifest, mode = "simulated", out_dir;
    std::optional<std::uint64_t> seed;
    double speed = 1.0;
    auto *run = app.add_subcommand("run", "Run a scenario manifest");
    run->add_option("manifest", manifest, "Scenario manifest (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--mode", mode, "simulated or realtime")->check(CLI::IsMember({"simulated", "realtime"}));
    run->add_option("--seed", seed, "Override the manifest seed");
    run->add_option("--out", out_dir, "Directory for the event log and artifacts");
    run->add_option("--speed", speed, "Realtime mode: simulated ms per wall ms")->check(CLI::PositiveNumber);

    std::string transactions, rules_out;
    double min_support = ds::mining::kDefaultMinSupport, min_confidence = ds::mining::kDefaultMinConfidence;
    auto *mine = app.add_subcommand("mine", "Mine association rules from transactions.jsonl");
    mine->add_option("transactions", transactions)->required()->check(CLI::ExistingFile);
    mine->add_option("--min-support", min_support)->check(CLI::Range(0.0, 1.0));
    mine->add_option("--min-confidence", min_confidence)->check(CLI::Range(0.0, 1.0));
    mine->add_option("--out", rules_out, "Write rules.jsonl here instead of stdout");

    std::string model, start, target;
    int horizon = ds::recommend::kDefaultHorizon;
    std::vector<int> candidates;
    auto *plan = app.add_subcommand("plan", "Plan a content sequence with a transition model");
    plan->add_option("model", model, "model.tsv")->required()->check(CLI::ExistingFile);
    plan->add_option("start", start, "Start state 'valence,arousal'")->required();
    plan->add_option("target", target, "Minimum target valence, e.g. 6 or v>=6")->required();
    plan->add_option("--horizon", horizon)->check(CLI::PositiveNumber);
    plan->add_option("--candidates", candidates, "Candidate content ids (default: contents in the model)")
        ->delimiter(',');

    std::string responses, binary;
    double level = 0.95;
    auto *stats = app.add_subcommand("stats", "Questionnaire statistics");
    stats->add_option("responses", responses, "responses.tsv")->required()->check(CLI::ExistingFile);
    stats->add_option("--binary", binary, "binary.tsv for prevalence intervals")->check(CLI::ExistingFile);
    stats->add_option("--level", level)->check(CLI::Range(0.5, 0.9999));

    std::string script, synth_out;
    auto *synth = app.add_subcommand("synth", "Render a session script to a replay bundle");
    synth->add_option("script", script, "Session script (JSON)")->required()->check(CLI::ExistingFile);
    synth->add_option("outdir", synth_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(manifest, mode, seed, out_dir, speed);
        if (*mine) return cmd_mine(transactions, min_support, min_confidence, rules_out);
        if (*plan) return cmd_plan(model, start, target, horizon, candidates);
        if (*stats) return cmd_stats(responses, binary, level);
        if (*synth) return cmd_synth(script, synth_out);
    } catch (const ds::Error &e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    } catch (const std::invalid_argument &e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
