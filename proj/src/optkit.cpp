#include "poisonlab/optkit.hpp"

#include <cmath>
#include <numeric>

namespace optkit {

void DpConfig::validate() const {
    if (clip_norm.has_value() && *clip_norm <= 0.0)
        throw std::invalid_argument("DpConfig: clip_norm must be positive");
    if (noise_std < 0.0)
        throw std::invalid_argument("DpConfig: noise_std must be non-negative");
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: lr <= 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size < 1");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs < 1");
    if (dp) dp->validate();
}

std::vector<double> shape_batch_gradient(
    std::span<const std::vector<double>> per_example_grads, const DpConfig& dp,
    numkit::Rng& rng) {
    dp.validate();
    if (per_example_grads.empty())
        throw std::invalid_argument("shape_batch_gradient: empty batch");
    std::size_t n = per_example_grads[0].size();
    std::vector<double> mean(n, 0.0);
    for (const auto& g : per_example_grads) {
        if (g.size() != n)
            throw std::invalid_argument("shape_batch_gradient: length mismatch");
        double scale = 1.0;
        if (dp.clip_norm) {
            double norm = numkit::l2_norm(g);
            double f = norm / *dp.clip_norm;
            if (f > 1.0) scale = 1.0 / f;
        }
        if (dp.noise_per_example && dp.noise_std > 0.0) {
            std::vector<double> noise = numkit::gaussian_noise(rng, n, dp.noise_std);
            for (std::size_t i = 0; i < n; ++i) mean[i] += g[i] * scale + noise[i];
        } else {
            for (std::size_t i = 0; i < n; ++i) mean[i] += g[i] * scale;
        }
    }
    double inv = 1.0 / static_cast<double>(per_example_grads.size());
    for (double& x : mean) x *= inv;
    if (!dp.noise_per_example && dp.noise_std > 0.0) {
        std::vector<double> noise = numkit::gaussian_noise(rng, n, dp.noise_std);
        for (std::size_t i = 0; i < n; ++i) mean[i] += noise[i];
    }
    return mean;
}

void sgd_step(std::vector<double>& params, std::span<const double> shaped_grad,
              double lr) {
    if (params.size() != shaped_grad.size())
        throw std::invalid_argument("sgd_step: length mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * shaped_grad[i];
}

void adam_step(AdamState& state, std::vector<double>& params,
               std::span<const double> shaped_grad, double lr) {
    if (params.size() != shaped_grad.size() || state.m.size() != params.size())
        throw std::invalid_argument("adam_step: length mismatch");
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = shaped_grad[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

namespace {

double partition_accuracy(const modelkit::Model& m, const datakit::PoisonedDataset& ds,
                          bool poisons) {
    std::size_t correct = 0, total = 0;
    for (std::size_t i = 0; i < ds.base.size(); ++i) {
        if ((ds.poison_mask[i] != 0) != poisons) continue;
        ++total;
        if (modelkit::predict(m, ds.base.inputs.row(i)) == ds.base.labels[i]) ++correct;
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

modelkit::Model train(const modelkit::Model& m, const datakit::PoisonedDataset& ds,
                      const TrainConfig& cfg, const EpochHook& hook) {
    cfg.validate();
    ds.base.validate();
    if (ds.poison_mask.size() != ds.base.size())
        throw std::invalid_argument("train: poison mask length mismatch");
    if (static_cast<int>(ds.base.dim()) != m.input_dim)
        throw std::invalid_argument("train: dataset/model dimension mismatch");

    modelkit::Model model = m;
    DpConfig dp = cfg.dp.value_or(DpConfig{});

    numkit::Rng master(cfg.seed);
    numkit::Rng perm_rng = master.split(1);
    numkit::Rng noise_rng = master.split(2);
    numkit::Rng dropout_rng = master.split(3);

    AdamState adam(model.params.size());

    std::size_t n = ds.base.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    // Pooled per-example gradient buffers, reused every batch.
    std::vector<std::vector<double>> batch_grads(
        std::min(n, static_cast<std::size_t>(cfg.batch_size)));
    std::vector<double> clean_sum(model.params.size());
    std::vector<double> poison_sum(model.params.size());

    modelkit::EvalMode train_mode{cfg.dropout, &dropout_rng};

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        perm_rng.shuffle(order);
        std::fill(clean_sum.begin(), clean_sum.end(), 0.0);
        std::fill(poison_sum.begin(), poison_sum.end(), 0.0);
        std::size_t clean_count = 0, poison_count = 0;
        double shaped_norm_sum = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < n; start += std::size_t(cfg.batch_size)) {
            std::size_t stop = std::min(n, start + std::size_t(cfg.batch_size));
            for (std::size_t bi = start; bi < stop; ++bi) {
                std::size_t i = order[bi];
                std::vector<double>& g = batch_grads[bi - start];
                modelkit::per_example_grad(model, ds.base.inputs.row(i),
                                           ds.base.labels[i], train_mode, g);
                if (ds.poison_mask[i]) {
                    ++poison_count;
                    for (std::size_t j = 0; j < g.size(); ++j) poison_sum[j] += g[j];
                } else {
                    ++clean_count;
                    for (std::size_t j = 0; j < g.size(); ++j) clean_sum[j] += g[j];
                }
            }
            std::vector<double> shaped = shape_batch_gradient(
                std::span<const std::vector<double>>(batch_grads.data(), stop - start),
                dp, noise_rng);
            shaped_norm_sum += numkit::l2_norm(shaped);
            ++batches;
            if (cfg.optimizer == OptimizerKind::SGD)
                sgd_step(model.params, shaped, cfg.learning_rate);
            else
                adam_step(adam, model.params, shaped, cfg.learning_rate);
        }

        if (hook) {
            EpochTelemetry t;
            t.epoch = epoch;
            t.shaped_mean_norm = shaped_norm_sum / static_cast<double>(batches);
            if (clean_count > 0 && poison_count > 0) {
                t.grad_stats_valid = true;
                std::vector<double> cm(clean_sum), pm(poison_sum);
                for (double& v : cm) v /= static_cast<double>(clean_count);
                for (double& v : pm) v /= static_cast<double>(poison_count);
                t.clean_norm = numkit::l2_norm(cm);
                t.poison_norm = numkit::l2_norm(pm);
                t.magnitude_ratio =
                    t.clean_norm == 0.0 ? 0.0 : t.poison_norm / t.clean_norm;
                if (t.clean_norm == 0.0 || t.poison_norm == 0.0) {
                    t.cosine = 0.0;
                    t.cosine_degenerate = true;
                } else {
                    t.cosine = numkit::cosine_similarity(pm, cm);
                }
            }
            t.train_acc_clean = partition_accuracy(model, ds, false);
            t.train_acc_poison = partition_accuracy(model, ds, true);
            hook(t, model);
        }
    }
    return model;
}

modelkit::Model retrain(const modelkit::Model& m, const datakit::PoisonedDataset& ds,
                        const TrainConfig& cfg, const EpochHook& hook) {
    // Same loop; Adam moments are constructed fresh inside train().
    return train(m, ds, cfg, hook);
}

}  // namespace optkit
