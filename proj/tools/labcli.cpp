#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "poisonlab/experiment.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::string preset;
    std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "Path to the experiment config JSON")
        ->required();
    cmd->add_option("--seed", o.seed, "Master seed override");
    cmd->add_option("--out", o.out_dir, "Output directory override");
    cmd->add_option("--preset", o.preset, "Preset override: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
}

labcli::ExperimentConfig load(const CommonOpts& o) {
    labcli::ExperimentConfig cfg = labcli::load_config(o.config_path);
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (!o.preset.empty()) cfg.preset = o.preset;
    return cfg;
}

void print_report(const labcli::RunReport& rep) {
    std::cout << rep.to_json().dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"poisonlab: data-poisoning vs gradient-shaping experiment harness"};
    app.require_subcommand(1);

    CommonOpts train_o, attack_o, telemetry_o, sweep_o, scenario_o, analyze_o;
    auto* cmd_train = app.add_subcommand("train", "Train the clean baseline only");
    add_common(cmd_train, train_o);
    auto* cmd_attack = app.add_subcommand("attack", "Run the configured attack end to end");
    add_common(cmd_attack, attack_o);
    auto* cmd_telemetry =
        app.add_subcommand("telemetry", "Run and print per-epoch gradient telemetry");
    add_common(cmd_telemetry, telemetry_o);
    auto* cmd_sweep = app.add_subcommand("sweep", "Sweep the (C, sigma) grid");
    add_common(cmd_sweep, sweep_o);
    auto* cmd_scenario =
        app.add_subcommand("scenario", "Run both phase-wise defense arrangements");
    add_common(cmd_scenario, scenario_o);
    auto* cmd_analyze =
        app.add_subcommand("analyze", "PCA/KMeans and boundary-grid exports");
    add_common(cmd_analyze, analyze_o);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_train->parsed()) {
            labcli::ExperimentConfig cfg = load(train_o);
            cfg.attack.kind = "none";
            print_report(labcli::run(cfg));
        } else if (cmd_attack->parsed()) {
            print_report(labcli::run(load(attack_o)));
        } else if (cmd_telemetry->parsed()) {
            labcli::RunReport rep = labcli::run(load(telemetry_o));
            for (const auto& r : rep.telemetry) {
                nlohmann::json j = {{"epoch", r.epoch},
                                    {"clean_norm", r.clean_norm},
                                    {"poison_norm", r.poison_norm},
                                    {"ratio", r.ratio},
                                    {"cosine", r.cosine},
                                    {"train_acc_clean", r.train_acc_clean},
                                    {"train_acc_poison", r.train_acc_poison}};
                std::cout << j.dump() << "\n";
            }
        } else if (cmd_sweep->parsed()) {
            auto rows = labcli::sweep(load(sweep_o));
            std::size_t failed = 0;
            for (const auto& r : rows)
                if (r.failed) ++failed;
            std::cout << nlohmann::json{{"cells", rows.size()}, {"failed", failed}}.dump()
                      << "\n";
        } else if (cmd_scenario->parsed()) {
            auto rows = labcli::scenario_distinct(load(scenario_o));
            for (const auto& r : rows) {
                nlohmann::json j = {{"base_model", r.base_model},
                                    {"retrain", r.retrain_mode},
                                    {"success_rate", r.success_rate}};
                if (r.mean_poisons) j["mean_poisons"] = *r.mean_poisons;
                std::cout << j.dump() << "\n";
            }
        } else if (cmd_analyze->parsed()) {
            labcli::analyze(load(analyze_o));
            std::cout << nlohmann::json{{"status", "ok"}}.dump() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
