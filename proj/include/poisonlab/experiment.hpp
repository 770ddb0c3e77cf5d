#ifndef POISONLAB_EXPERIMENT_HPP
#define POISONLAB_EXPERIMENT_HPP

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "poisonlab/attackkit.hpp"
#include "poisonlab/datakit.hpp"
#include "poisonlab/metrikit.hpp"
#include "poisonlab/modelkit.hpp"
#include "poisonlab/optkit.hpp"

namespace labcli {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DatasetSpec {
    std::string kind = "two_moons";  // two_moons | purchase_like | synthetic_images | idx | csv
    std::size_t n_train = 700, n_test = 300;
    double noise_std = 0.1;          // two_moons jitter / synthetic image noise
    std::size_t d = 100;             // purchase_like feature count
    int num_classes = 2;
    std::size_t img_h = 28, img_w = 28;
    std::string images_path, labels_path, test_images_path, test_labels_path;
    std::string csv_path, test_csv_path;
    // Optional binary restriction applied after loading/generation.
    int binary_class_a = -1, binary_class_b = -1;
    std::size_t per_class = 0;
};

struct ModelSpec {
    std::string kind = "lr";  // lr | mlp | cnn
    int hidden = 256;
    int img_c = 1;
};

struct AttackSpec {
    std::string kind = "none";  // none | label_flip | watermark | patch | concentrated
                                // | targeted_one_shot | targeted_multi
    double fraction = 0.0;      // indiscriminate intensity (#poison / #train)
    double alpha = 1.0;         // watermark blend
    std::size_t count = 0;      // watermark poison count
    int base_class = 0, overlay_class = 1;
    int patch_side = 14;
    int target_label = 1;
    int modes = 3;
    // Targeted protocol knobs.
    std::size_t targets = 20, candidates = 20;
    int target_class = -1;
    int max_poisons = 1;
    attackkit::CraftConfig craft;
    std::size_t eval_subsample = 0;
};

struct PhaseSpec {
    std::string optimizer = "sgd";  // sgd | adam
    double learning_rate = 0.01;
    int batch_size = 32;
    int epochs = 10;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    ModelSpec model;
    AttackSpec attack;
    PhaseSpec pretrain;
    std::optional<PhaseSpec> retrain;
    std::optional<optkit::DpConfig> dp;
    std::string dp_placement = "none";  // none | pretrain | retrain | both
    std::vector<double> sweep_clip_norms;
    std::vector<double> sweep_sigmas;
    std::vector<double> sweep_intensities;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    std::string preset = "desk";  // desk | paper

    void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);
// Desk presets bound target/candidate counts and epochs; paper presets keep
// the configured values.
void apply_preset(ExperimentConfig& cfg);

// FNV-1a over the canonical (sorted-key, no-whitespace) serialization.
std::string config_hash(const ExperimentConfig& cfg);

struct EpochRecord {
    int epoch;
    bool valid;
    double clean_norm, poison_norm, ratio, cosine;
    double train_acc_clean, train_acc_poison;
};

struct RunReport {
    std::string config_hash;
    double clean_acc = 0.0;
    double poisoned_acc = 0.0;
    double rad = 0.0;
    std::vector<EpochRecord> telemetry;
    std::vector<attackkit::AttackReport> attack_reports;
    std::optional<double> success_rate;
    std::optional<double> mean_poisons;
    double wall_seconds = 0.0;

    nlohmann::json to_json() const;
};

// Build data -> craft poisons -> clean baseline (shared init) -> poisoned
// run -> emit report files under out_dir/run-<hash>/.
RunReport run(const ExperimentConfig& cfg);

struct SweepRow {
    double clip_norm;  // <= 0 encodes "none"
    double sigma;
    double intensity;
    bool failed = false;
    std::string error;
    RunReport report;
};

// Cartesian product over (clip, sigma[, intensity]); failed cells are
// marked and do not abort the sweep. Also writes out_dir/sweep.csv.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg);

struct ScenarioRow {
    std::string base_model;
    std::string retrain_mode;
    double success_rate;
    std::optional<double> mean_poisons;
};

// The two phase-wise arrangements (vanilla base + DP retrain, DP base +
// vanilla retrain) on identical seeds; writes out_dir/scenario.csv.
std::vector<ScenarioRow> scenario_distinct(const ExperimentConfig& cfg);

// PCA + KMeans over the poisoned training set (and a boundary grid for 2-D
// models); writes CSVs under out_dir.
void analyze(const ExperimentConfig& cfg);

// Shared builders, exposed for tests.
std::pair<datakit::Dataset, datakit::Dataset> build_dataset(const ExperimentConfig& cfg);
datakit::Dataset craft_indiscriminate_poisons(const ExperimentConfig& cfg,
                                              const datakit::Dataset& train);
optkit::TrainConfig phase_to_train_config(const ExperimentConfig& cfg,
                                          const PhaseSpec& phase, bool is_retrain);

}  // namespace labcli

#endif
