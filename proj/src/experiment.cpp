#include "poisonlab/experiment.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

namespace labcli {

namespace fs = std::filesystem;

void ExperimentConfig::validate() const {
    auto is_one_of = [](const std::string& v, std::initializer_list<const char*> opts) {
        for (const char* o : opts)
            if (v == o) return true;
        return false;
    };
    if (!is_one_of(dataset.kind,
                   {"two_moons", "purchase_like", "synthetic_images", "idx", "csv"}))
        throw config_error("dataset.kind: unknown value '" + dataset.kind + "'");
    if (!is_one_of(model.kind, {"lr", "mlp", "cnn"}))
        throw config_error("model.kind: unknown value '" + model.kind + "'");
    if (!is_one_of(attack.kind,
                   {"none", "label_flip", "watermark", "patch", "concentrated",
                    "targeted_one_shot", "targeted_multi"}))
        throw config_error("attack.kind: unknown value '" + attack.kind + "'");
    if (!is_one_of(dp_placement, {"none", "pretrain", "retrain", "both"}))
        throw config_error("dp_placement: unknown value '" + dp_placement + "'");
    if (!is_one_of(preset, {"desk", "paper"}))
        throw config_error("preset: unknown value '" + preset + "'");
    bool targeted =
        attack.kind == "targeted_one_shot" || attack.kind == "targeted_multi";
    if (targeted && !retrain)
        throw config_error("retrain: required for targeted attacks");
    if (dp_placement != "none" && !dp)
        throw config_error("dp: parameters required when dp_placement != none");
    if (dp) dp->validate();
    if (pretrain.epochs < 1) throw config_error("pretrain.epochs: must be >= 1");
    if (pretrain.learning_rate <= 0) throw config_error("pretrain.learning_rate: must be > 0");
    if (pretrain.batch_size < 1) throw config_error("pretrain.batch_size: must be >= 1");
}

namespace {

PhaseSpec phase_from_json(const nlohmann::json& j) {
    PhaseSpec p;
    p.optimizer = j.value("optimizer", p.optimizer);
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.batch_size = j.value("batch_size", p.batch_size);
    p.epochs = j.value("epochs", p.epochs);
    return p;
}

nlohmann::json phase_to_json(const PhaseSpec& p) {
    return {{"optimizer", p.optimizer},
            {"learning_rate", p.learning_rate},
            {"batch_size", p.batch_size},
            {"epochs", p.epochs}};
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        cfg.dataset.kind = d.value("kind", cfg.dataset.kind);
        cfg.dataset.n_train = d.value("n_train", cfg.dataset.n_train);
        cfg.dataset.n_test = d.value("n_test", cfg.dataset.n_test);
        cfg.dataset.noise_std = d.value("noise_std", cfg.dataset.noise_std);
        cfg.dataset.d = d.value("d", cfg.dataset.d);
        cfg.dataset.num_classes = d.value("num_classes", cfg.dataset.num_classes);
        cfg.dataset.img_h = d.value("img_h", cfg.dataset.img_h);
        cfg.dataset.img_w = d.value("img_w", cfg.dataset.img_w);
        cfg.dataset.images_path = d.value("images_path", cfg.dataset.images_path);
        cfg.dataset.labels_path = d.value("labels_path", cfg.dataset.labels_path);
        cfg.dataset.test_images_path =
            d.value("test_images_path", cfg.dataset.test_images_path);
        cfg.dataset.test_labels_path =
            d.value("test_labels_path", cfg.dataset.test_labels_path);
        cfg.dataset.csv_path = d.value("csv_path", cfg.dataset.csv_path);
        cfg.dataset.test_csv_path = d.value("test_csv_path", cfg.dataset.test_csv_path);
        cfg.dataset.binary_class_a = d.value("binary_class_a", cfg.dataset.binary_class_a);
        cfg.dataset.binary_class_b = d.value("binary_class_b", cfg.dataset.binary_class_b);
        cfg.dataset.per_class = d.value("per_class", cfg.dataset.per_class);
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        cfg.model.kind = m.value("kind", cfg.model.kind);
        cfg.model.hidden = m.value("hidden", cfg.model.hidden);
        cfg.model.img_c = m.value("img_c", cfg.model.img_c);
    }
    if (j.contains("attack")) {
        const auto& a = j["attack"];
        cfg.attack.kind = a.value("kind", cfg.attack.kind);
        cfg.attack.fraction = a.value("fraction", cfg.attack.fraction);
        cfg.attack.alpha = a.value("alpha", cfg.attack.alpha);
        cfg.attack.count = a.value("count", cfg.attack.count);
        cfg.attack.base_class = a.value("base_class", cfg.attack.base_class);
        cfg.attack.overlay_class = a.value("overlay_class", cfg.attack.overlay_class);
        cfg.attack.patch_side = a.value("patch_side", cfg.attack.patch_side);
        cfg.attack.target_label = a.value("target_label", cfg.attack.target_label);
        cfg.attack.modes = a.value("modes", cfg.attack.modes);
        cfg.attack.targets = a.value("targets", cfg.attack.targets);
        cfg.attack.candidates = a.value("candidates", cfg.attack.candidates);
        cfg.attack.target_class = a.value("target_class", cfg.attack.target_class);
        cfg.attack.max_poisons = a.value("max_poisons", cfg.attack.max_poisons);
        cfg.attack.craft.max_iters = a.value("craft_max_iters", cfg.attack.craft.max_iters);
        cfg.attack.craft.proximity = a.value("craft_proximity", cfg.attack.craft.proximity);
        cfg.attack.craft.step_size = a.value("craft_step_size", cfg.attack.craft.step_size);
        cfg.attack.craft.beta = a.value("craft_beta", cfg.attack.craft.beta);
        cfg.attack.eval_subsample = a.value("eval_subsample", cfg.attack.eval_subsample);
    }
    if (j.contains("pretrain")) cfg.pretrain = phase_from_json(j["pretrain"]);
    if (j.contains("retrain") && !j["retrain"].is_null())
        cfg.retrain = phase_from_json(j["retrain"]);
    if (j.contains("dp") && !j["dp"].is_null()) {
        optkit::DpConfig dp;
        if (j["dp"].contains("clip_norm") && !j["dp"]["clip_norm"].is_null())
            dp.clip_norm = j["dp"]["clip_norm"].get<double>();
        dp.noise_std = j["dp"].value("noise_std", 0.0);
        dp.noise_per_example = j["dp"].value("noise_per_example", false);
        cfg.dp = dp;
    }
    cfg.dp_placement = j.value("dp_placement", cfg.dp_placement);
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        cfg.sweep_clip_norms = s.value("clip_norms", cfg.sweep_clip_norms);
        cfg.sweep_sigmas = s.value("sigmas", cfg.sweep_sigmas);
        cfg.sweep_intensities = s.value("intensities", cfg.sweep_intensities);
    }
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.preset = j.value("preset", cfg.preset);
    cfg.validate();
    return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["dataset"] = {{"kind", cfg.dataset.kind},
                    {"n_train", cfg.dataset.n_train},
                    {"n_test", cfg.dataset.n_test},
                    {"noise_std", cfg.dataset.noise_std},
                    {"d", cfg.dataset.d},
                    {"num_classes", cfg.dataset.num_classes},
                    {"img_h", cfg.dataset.img_h},
                    {"img_w", cfg.dataset.img_w},
                    {"images_path", cfg.dataset.images_path},
                    {"labels_path", cfg.dataset.labels_path},
                    {"test_images_path", cfg.dataset.test_images_path},
                    {"test_labels_path", cfg.dataset.test_labels_path},
                    {"csv_path", cfg.dataset.csv_path},
                    {"test_csv_path", cfg.dataset.test_csv_path},
                    {"binary_class_a", cfg.dataset.binary_class_a},
                    {"binary_class_b", cfg.dataset.binary_class_b},
                    {"per_class", cfg.dataset.per_class}};
    j["model"] = {{"kind", cfg.model.kind},
                  {"hidden", cfg.model.hidden},
                  {"img_c", cfg.model.img_c}};
    j["attack"] = {{"kind", cfg.attack.kind},
                   {"fraction", cfg.attack.fraction},
                   {"alpha", cfg.attack.alpha},
                   {"count", cfg.attack.count},
                   {"base_class", cfg.attack.base_class},
                   {"overlay_class", cfg.attack.overlay_class},
                   {"patch_side", cfg.attack.patch_side},
                   {"target_label", cfg.attack.target_label},
                   {"modes", cfg.attack.modes},
                   {"targets", cfg.attack.targets},
                   {"candidates", cfg.attack.candidates},
                   {"target_class", cfg.attack.target_class},
                   {"max_poisons", cfg.attack.max_poisons},
                   {"craft_max_iters", cfg.attack.craft.max_iters},
                   {"craft_proximity", cfg.attack.craft.proximity},
                   {"craft_step_size", cfg.attack.craft.step_size},
                   {"craft_beta", cfg.attack.craft.beta},
                   {"eval_subsample", cfg.attack.eval_subsample}};
    j["pretrain"] = phase_to_json(cfg.pretrain);
    j["retrain"] = cfg.retrain ? phase_to_json(*cfg.retrain) : nlohmann::json();
    if (cfg.dp) {
        j["dp"] = {{"noise_std", cfg.dp->noise_std},
                   {"noise_per_example", cfg.dp->noise_per_example}};
        if (cfg.dp->clip_norm) j["dp"]["clip_norm"] = *cfg.dp->clip_norm;
    } else {
        j["dp"] = nlohmann::json();
    }
    j["dp_placement"] = cfg.dp_placement;
    j["sweep"] = {{"clip_norms", cfg.sweep_clip_norms},
                  {"sigmas", cfg.sweep_sigmas},
                  {"intensities", cfg.sweep_intensities}};
    j["out"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    j["preset"] = cfg.preset;
    return j;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    return config_from_json(j);
}

void apply_preset(ExperimentConfig& cfg) {
    if (cfg.preset != "desk") return;
    // Desk scale bounds the targeted protocol so it stays minutes, not hours.
    cfg.attack.targets = std::min<std::size_t>(cfg.attack.targets, 25);
    cfg.attack.candidates = std::min<std::size_t>(cfg.attack.candidates, 25);
    if (cfg.retrain) cfg.retrain->epochs = std::min(cfg.retrain->epochs, 15);
    if (cfg.attack.eval_subsample == 0) cfg.attack.eval_subsample = 2000;
}

std::string config_hash(const ExperimentConfig& cfg) {
    // nlohmann::json stores object keys sorted, so dump() is canonical.
    std::string s = config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::pair<datakit::Dataset, datakit::Dataset> build_dataset(const ExperimentConfig& cfg) {
    const DatasetSpec& d = cfg.dataset;
    std::pair<datakit::Dataset, datakit::Dataset> out;
    if (d.kind == "two_moons") {
        out = datakit::two_moons(d.n_train, d.n_test, d.noise_std, cfg.seed);
    } else if (d.kind == "purchase_like") {
        out = datakit::purchase_like(d.n_train, d.n_test, d.d, d.num_classes, cfg.seed);
    } else if (d.kind == "synthetic_images") {
        out = datakit::synthetic_images(d.n_train, d.n_test, d.img_h, d.img_w,
                                        d.num_classes, cfg.seed, d.noise_std);
    } else if (d.kind == "idx") {
        out.first = datakit::load_idx(d.images_path, d.labels_path);
        out.second = datakit::load_idx(d.test_images_path, d.test_labels_path);
    } else if (d.kind == "csv") {
        out.first = datakit::load_csv(d.csv_path, d.num_classes);
        out.second = datakit::load_csv(d.test_csv_path, d.num_classes);
    } else {
        throw config_error("dataset.kind: unknown value '" + d.kind + "'");
    }
    if (d.binary_class_a >= 0 && d.binary_class_b >= 0 && d.per_class > 0) {
        out.first = datakit::binary_subset(out.first, d.binary_class_a,
                                           d.binary_class_b, d.per_class);
        // Test split keeps every available sample of the two classes.
        std::size_t avail = out.second.size();
        std::size_t cnt_a = 0, cnt_b = 0;
        for (std::size_t i = 0; i < avail; ++i) {
            if (out.second.labels[i] == d.binary_class_a) ++cnt_a;
            if (out.second.labels[i] == d.binary_class_b) ++cnt_b;
        }
        out.second = datakit::binary_subset(out.second, d.binary_class_a,
                                            d.binary_class_b, std::min(cnt_a, cnt_b));
    }
    return out;
}

datakit::Dataset craft_indiscriminate_poisons(const ExperimentConfig& cfg,
                                              const datakit::Dataset& train) {
    numkit::Rng rng(cfg.seed ^ 0xa77accULL);
    const AttackSpec& a = cfg.attack;
    if (a.kind == "label_flip") return attackkit::flip_labels(train, a.fraction, rng);
    if (a.kind == "watermark") {
        std::size_t count = a.count > 0
                                ? a.count
                                : static_cast<std::size_t>(a.fraction * train.size());
        return attackkit::watermark_poisons(train, a.base_class, a.overlay_class,
                                            count, a.alpha, rng);
    }
    if (a.kind == "patch")
        return attackkit::patch_poisons(train, a.fraction, a.patch_side,
                                        cfg.dataset.img_h, cfg.dataset.img_w,
                                        a.target_label, rng);
    if (a.kind == "concentrated")
        return attackkit::concentrated_poisons(train, a.fraction, a.modes, rng);
    throw config_error("attack.kind: no indiscriminate poisons for '" + a.kind + "'");
}

optkit::TrainConfig phase_to_train_config(const ExperimentConfig& cfg,
                                          const PhaseSpec& phase, bool is_retrain) {
    optkit::TrainConfig t;
    if (phase.optimizer == "sgd")
        t.optimizer = optkit::OptimizerKind::SGD;
    else if (phase.optimizer == "adam")
        t.optimizer = optkit::OptimizerKind::Adam;
    else
        throw config_error("optimizer: unknown value '" + phase.optimizer + "'");
    t.learning_rate = phase.learning_rate;
    t.batch_size = phase.batch_size;
    t.epochs = phase.epochs;
    t.seed = cfg.seed + (is_retrain ? 1 : 0);
    bool dp_here = cfg.dp_placement == "both" ||
                   (is_retrain ? cfg.dp_placement == "retrain"
                               : cfg.dp_placement == "pretrain");
    if (dp_here) t.dp = cfg.dp;
    return t;
}

namespace {

modelkit::Model build_model(const ExperimentConfig& cfg, const datakit::Dataset& train) {
    modelkit::Model m;
    if (cfg.model.kind == "lr")
        m = modelkit::make_lr(static_cast<int>(train.dim()), train.num_classes);
    else if (cfg.model.kind == "mlp")
        m = modelkit::make_mlp(static_cast<int>(train.dim()), train.num_classes,
                               cfg.model.hidden);
    else
        m = modelkit::make_cnn(static_cast<int>(cfg.dataset.img_h),
                               static_cast<int>(cfg.dataset.img_w), cfg.model.img_c,
                               train.num_classes);
    numkit::Rng init_rng(cfg.seed ^ 0x1417ULL);
    modelkit::init_params(m, init_rng);
    return m;
}

void write_telemetry_jsonl(const std::vector<EpochRecord>& recs,
                           const std::string& path) {
    std::ofstream out(path);
    for (const auto& r : recs) {
        nlohmann::json j = {{"epoch", r.epoch},
                            {"clean_norm", r.clean_norm},
                            {"poison_norm", r.poison_norm},
                            {"ratio", r.ratio},
                            {"cosine", r.cosine},
                            {"train_acc_clean", r.train_acc_clean},
                            {"train_acc_poison", r.train_acc_poison}};
        out << j.dump() << "\n";
    }
}

optkit::EpochHook record_hook(std::vector<EpochRecord>& recs) {
    return [&recs](const optkit::EpochTelemetry& t, const modelkit::Model&) {
        EpochRecord r;
        r.epoch = t.epoch;
        r.valid = t.grad_stats_valid;
        r.clean_norm = t.clean_norm;
        r.poison_norm = t.poison_norm;
        r.ratio = t.magnitude_ratio;
        r.cosine = t.cosine;
        r.train_acc_clean = t.train_acc_clean;
        r.train_acc_poison = t.train_acc_poison;
        recs.push_back(r);
    };
}

}  // namespace

nlohmann::json RunReport::to_json() const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["clean_acc"] = clean_acc;
    j["poisoned_acc"] = poisoned_acc;
    j["rad"] = rad;
    j["wall_seconds"] = wall_seconds;
    if (success_rate) j["success_rate"] = *success_rate;
    if (mean_poisons) j["mean_poisons"] = *mean_poisons;
    j["attack_reports"] = nlohmann::json::array();
    for (const auto& r : attack_reports) {
        nlohmann::json a = {{"target_id", r.target_id},
                            {"success", r.success},
                            {"poisons_used", r.poisons_used},
                            {"rad_at_success", r.rad_at_success}};
        if (r.success_epoch) a["success_epoch"] = *r.success_epoch;
        j["attack_reports"].push_back(a);
    }
    return j;
}

RunReport run(const ExperimentConfig& cfg0) {
    ExperimentConfig cfg = cfg0;
    cfg.validate();
    apply_preset(cfg);
    auto t0 = std::chrono::steady_clock::now();

    RunReport rep;
    rep.config_hash = config_hash(cfg0);

    auto [train_ds, test_ds] = build_dataset(cfg);
    modelkit::Model init = build_model(cfg, train_ds);

    bool targeted =
        cfg.attack.kind == "targeted_one_shot" || cfg.attack.kind == "targeted_multi";

    optkit::TrainConfig pre_cfg = phase_to_train_config(cfg, cfg.pretrain, false);

    if (targeted) {
        modelkit::Model pretrained =
            optkit::train(init, datakit::as_clean(train_ds), pre_cfg);
        rep.clean_acc = modelkit::accuracy(pretrained, test_ds);

        attackkit::TargetedProtocol proto;
        proto.train_clean = train_ds;
        proto.test = test_ds;
        proto.target_ids = attackkit::pick_targets(pretrained, test_ds,
                                                   cfg.attack.targets, cfg.seed ^ 0x7a9ULL,
                                                   cfg.attack.target_class);
        proto.candidate_pool = cfg.attack.candidates;
        proto.craft = cfg.attack.craft;
        proto.retrain_cfg = phase_to_train_config(cfg, *cfg.retrain, true);
        proto.clean_test_acc = 0.0;  // computed on the eval subset inside
        proto.eval_subsample = cfg.attack.eval_subsample;
        proto.seed = cfg.seed;

        rep.attack_reports =
            cfg.attack.kind == "targeted_one_shot"
                ? attackkit::run_one_shot(pretrained, proto)
                : attackkit::run_multi_poison(pretrained, proto, cfg.attack.max_poisons);
        if (!rep.attack_reports.empty()) {
            auto s = metrikit::success_summary(rep.attack_reports);
            rep.success_rate = s.success_rate;
            rep.mean_poisons = s.mean_poisons_over_successes;
        }
        rep.poisoned_acc = rep.clean_acc;  // overall accuracy is preserved by design
        rep.rad = 0.0;
    } else {
        datakit::Dataset poisons;
        bool has_poisons = cfg.attack.kind != "none" && cfg.attack.fraction > 0.0;
        if (cfg.attack.kind == "watermark" && cfg.attack.count > 0) has_poisons = true;
        if (has_poisons) poisons = craft_indiscriminate_poisons(cfg, train_ds);

        // Clean baseline and poisoned run share the initial parameters.
        modelkit::Model clean_model;
        std::optional<optkit::TrainConfig> re_cfg;
        if (cfg.retrain) re_cfg = phase_to_train_config(cfg, *cfg.retrain, true);

        clean_model = optkit::train(init, datakit::as_clean(train_ds), pre_cfg);
        if (re_cfg)
            clean_model =
                optkit::retrain(clean_model, datakit::as_clean(train_ds), *re_cfg);
        rep.clean_acc = modelkit::accuracy(clean_model, test_ds);

        if (!has_poisons) {
            rep.poisoned_acc = rep.clean_acc;
            rep.rad = 0.0;
        } else {
            datakit::PoisonedDataset merged =
                datakit::merge_with_poisons(train_ds, poisons, cfg.seed ^ 0x5caffULL);
            modelkit::Model poisoned;
            auto hook = record_hook(rep.telemetry);
            if (re_cfg) {
                // Retrain scenario: pretrain on clean, blend poisons on retrain.
                modelkit::Model base =
                    optkit::train(init, datakit::as_clean(train_ds), pre_cfg);
                poisoned = optkit::retrain(base, merged, *re_cfg, hook);
            } else {
                poisoned = optkit::train(init, merged, pre_cfg, hook);
            }
            rep.poisoned_acc = modelkit::accuracy(poisoned, test_ds);
            rep.rad = metrikit::rad(rep.clean_acc, rep.poisoned_acc);
        }
    }

    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // One directory per run: config copy, report, telemetry.
    fs::path dir = fs::path(cfg.out_dir) / ("run-" + rep.config_hash);
    fs::create_directories(dir);
    std::ofstream((dir / "config.json").string()) << config_to_json(cfg0).dump(2) << "\n";
    std::ofstream((dir / "report.json").string()) << rep.to_json().dump(2) << "\n";
    write_telemetry_jsonl(rep.telemetry, (dir / "telemetry.jsonl").string());
    return rep;
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.sweep_clip_norms.empty() && cfg.sweep_sigmas.empty())
        throw std::invalid_argument("sweep: empty grid");
    std::vector<double> clips = cfg.sweep_clip_norms;
    if (clips.empty()) clips.push_back(cfg.dp && cfg.dp->clip_norm ? *cfg.dp->clip_norm : 0.0);
    std::vector<double> sigmas = cfg.sweep_sigmas;
    if (sigmas.empty()) sigmas.push_back(cfg.dp ? cfg.dp->noise_std : 0.0);
    std::vector<double> intensities = cfg.sweep_intensities;
    if (intensities.empty()) intensities.push_back(cfg.attack.fraction);

    std::vector<SweepRow> rows;
    for (double c : clips)
        for (double s : sigmas)
            for (double f : intensities) {
                SweepRow row;
                row.clip_norm = c;
                row.sigma = s;
                row.intensity = f;
                ExperimentConfig cell = cfg;
                optkit::DpConfig dp;
                if (c > 0.0) dp.clip_norm = c;
                dp.noise_std = s;
                if (c > 0.0 || s > 0.0) {
                    cell.dp = dp;
                    if (cell.dp_placement == "none") cell.dp_placement = "pretrain";
                } else {
                    cell.dp.reset();
                    cell.dp_placement = "none";
                }
                cell.attack.fraction = f;
                cell.sweep_clip_norms.clear();
                cell.sweep_sigmas.clear();
                cell.sweep_intensities.clear();
                try {
                    row.report = run(cell);
                } catch (const std::exception& e) {
                    row.failed = true;
                    row.error = e.what();
                }
                rows.push_back(std::move(row));
            }

    fs::create_directories(cfg.out_dir);
    std::ofstream out((fs::path(cfg.out_dir) / "sweep.csv").string());
    out << "clip_norm,sigma,intensity,clean_acc,poisoned_acc,rad,success_rate,status\n";
    out.precision(12);
    for (const auto& r : rows) {
        out << r.clip_norm << ',' << r.sigma << ',' << r.intensity << ',';
        if (r.failed) {
            out << ",,,,failed\n";
        } else {
            out << r.report.clean_acc << ',' << r.report.poisoned_acc << ','
                << r.report.rad << ',';
            if (r.report.success_rate) out << *r.report.success_rate;
            out << ",ok\n";
        }
    }
    return rows;
}

std::vector<ScenarioRow> scenario_distinct(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.attack.kind != "targeted_one_shot" && cfg.attack.kind != "targeted_multi")
        throw config_error("scenario: requires a targeted attack config");
    if (!cfg.dp) throw config_error("scenario: requires dp parameters");

    std::vector<ScenarioRow> rows;
    for (const char* placement : {"retrain", "pretrain"}) {
        ExperimentConfig c = cfg;
        c.dp_placement = placement;
        RunReport rep = run(c);
        ScenarioRow row;
        row.base_model = std::string(placement) == "retrain" ? "Vanilla" : "DP";
        row.retrain_mode = std::string(placement) == "retrain" ? "w. DP" : "Vanilla";
        row.success_rate = rep.success_rate.value_or(0.0);
        row.mean_poisons = rep.mean_poisons;
        rows.push_back(row);
    }

    fs::create_directories(cfg.out_dir);
    std::ofstream out((fs::path(cfg.out_dir) / "scenario.csv").string());
    out << "Base Model,Re-train,Success Rate,# Poisons\n";
    for (const auto& r : rows) {
        out << r.base_model << ',' << r.retrain_mode << ',' << r.success_rate << ',';
        if (r.mean_poisons) out << *r.mean_poisons;
        out << "\n";
    }
    return rows;
}

void analyze(const ExperimentConfig& cfg0) {
    ExperimentConfig cfg = cfg0;
    cfg.validate();
    apply_preset(cfg);
    fs::create_directories(cfg.out_dir);
    auto [train_ds, test_ds] = build_dataset(cfg);

    bool has_poisons = cfg.attack.kind != "none" && cfg.attack.kind != "targeted_one_shot" &&
                       cfg.attack.kind != "targeted_multi" &&
                       (cfg.attack.fraction > 0.0 || cfg.attack.count > 0);
    datakit::PoisonedDataset merged;
    if (has_poisons) {
        datakit::Dataset poisons = craft_indiscriminate_poisons(cfg, train_ds);
        merged = datakit::merge_with_poisons(train_ds, poisons, cfg.seed ^ 0x5caffULL);
    } else {
        merged = datakit::as_clean(train_ds);
    }

    // PCA projection + KMeans clustering over the (possibly poisoned) set.
    metrikit::Pca2d pca = metrikit::pca_2d(merged.base.inputs);
    numkit::Tensor proj({merged.base.size(), 2}, pca.projected);
    metrikit::KMeansResult km = metrikit::kmeans(proj, 4, cfg.seed);
    {
        std::ofstream out((fs::path(cfg.out_dir) / "pca_kmeans.csv").string());
        out << "x,y,label,is_poison,cluster\n";
        out.precision(12);
        for (std::size_t i = 0; i < merged.base.size(); ++i)
            out << pca.projected[i * 2] << ',' << pca.projected[i * 2 + 1] << ','
                << merged.base.labels[i] << ',' << int(merged.poison_mask[i]) << ','
                << km.assignments[i] << "\n";
    }

    // Boundary grid for 2-D inputs.
    if (train_ds.dim() == 2) {
        optkit::TrainConfig pre_cfg = phase_to_train_config(cfg, cfg.pretrain, false);
        modelkit::Model m = build_model(cfg, train_ds);
        m = optkit::train(m, merged, pre_cfg);
        double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
        for (std::size_t i = 0; i < train_ds.size(); ++i) {
            auto r = train_ds.inputs.row(i);
            x_min = std::min(x_min, r[0]);
            x_max = std::max(x_max, r[0]);
            y_min = std::min(y_min, r[1]);
            y_max = std::max(y_max, r[1]);
        }
        metrikit::BoundaryGrid g = metrikit::boundary_grid(
            m, {x_min - 0.5, x_max + 0.5, y_min - 0.5, y_max + 0.5}, 100);
        metrikit::save_boundary_csv(g, (fs::path(cfg.out_dir) / "boundary.csv").string());
    }
}

}  // namespace labcli
