#ifndef POISONLAB_OPTKIT_HPP
#define POISONLAB_OPTKIT_HPP

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "poisonlab/datakit.hpp"
#include "poisonlab/modelkit.hpp"
#include "poisonlab/numkit.hpp"

namespace optkit {

// Gradient-shaping parameters. (clip_norm = none, noise_std = 0) reduces the
// optimizer to its vanilla counterpart exactly.
struct DpConfig {
    std::optional<double> clip_norm;  // C
    double noise_std = 0.0;           // sigma
    // When true, an independent noise vector is added to each clipped
    // per-example gradient instead of one vector on the batch mean.
    bool noise_per_example = false;

    void validate() const;
    bool is_vanilla() const { return !clip_norm.has_value() && noise_std == 0.0; }
};

enum class OptimizerKind { SGD, Adam };

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::SGD;
    std::optional<DpConfig> dp;
    double learning_rate = 0.01;
    int batch_size = 1;
    int epochs = 1;
    std::uint64_t seed = 0;
    // Dropout active during training steps (CNN only).
    bool dropout = true;

    void validate() const;
};

struct AdamState {
    std::vector<double> m, v;
    long step = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// Clip each gradient to norm C, average, add Gaussian noise (std sigma).
std::vector<double> shape_batch_gradient(
    std::span<const std::vector<double>> per_example_grads, const DpConfig& dp,
    numkit::Rng& rng);

void sgd_step(std::vector<double>& params, std::span<const double> shaped_grad,
              double lr);

void adam_step(AdamState& state, std::vector<double>& params,
               std::span<const double> shaped_grad, double lr);

// Per-epoch telemetry handed to training hooks. Gradient stats compare the
// raw (pre-clip, pre-noise) epoch-mean poison and clean gradients.
struct EpochTelemetry {
    int epoch = 0;
    bool grad_stats_valid = false;  // false when either partition is empty
    double clean_norm = 0.0;
    double poison_norm = 0.0;
    double magnitude_ratio = 0.0;
    double cosine = 0.0;
    bool cosine_degenerate = false;  // a zero mean vector; cosine reported as 0
    double shaped_mean_norm = 0.0;   // mean norm of shaped batch gradients
    double train_acc_clean = 0.0;
    double train_acc_poison = 0.0;   // 0 when no poisons
};

using EpochHook = std::function<void(const EpochTelemetry&, const modelkit::Model&)>;

// Epoch-driven mini-batch training from the model's current parameters.
// Deterministic in (initial params, dataset, cfg). Batch order is a seeded
// permutation per epoch; the last short batch is kept.
modelkit::Model train(const modelkit::Model& m, const datakit::PoisonedDataset& ds,
                      const TrainConfig& cfg, const EpochHook& hook = nullptr);

// Same loop from the given (pretrained) parameters; Adam moments start fresh.
modelkit::Model retrain(const modelkit::Model& m, const datakit::PoisonedDataset& ds,
                        const TrainConfig& cfg, const EpochHook& hook = nullptr);

}  // namespace optkit

#endif
