#ifndef POISONLAB_ATTACKKIT_HPP
#define POISONLAB_ATTACKKIT_HPP

#include <optional>
#include <vector>

#include "poisonlab/attack_report.hpp"
#include "poisonlab/datakit.hpp"
#include "poisonlab/modelkit.hpp"
#include "poisonlab/optkit.hpp"

namespace attackkit {

// Feature-collision crafting budget and constraints.
struct CraftConfig {
    int max_iters = 10000;
    double proximity = 3.5;   // l2 bound in feature space
    double step_size = 0.1;
    double beta = 0.1;        // input-fidelity weight
    std::uint64_t seed = 0;

    void validate() const;
};

// --- Indiscriminate crafters -------------------------------------------

// Random label flips on floor(fraction * N) clean samples; inputs untouched.
datakit::Dataset flip_labels(const datakit::Dataset& ds, double fraction,
                             numkit::Rng& rng);

// Clean-label interpolation poisons: (1-alpha)*base + alpha*overlay pixels,
// labeled with the base class.
datakit::Dataset watermark_poisons(const datakit::Dataset& ds, int base_class,
                                   int overlay_class, std::size_t count,
                                   double alpha, numkit::Rng& rng);

// Top-left white square patch, labels set to target_label.
datakit::Dataset patch_poisons(const datakit::Dataset& ds, double fraction,
                               int patch_side, std::size_t img_h, std::size_t img_w,
                               int target_label, numkit::Rng& rng);

// Duplicate a handful of flipped-label exemplars near the opposite class.
// Stands in for the min-max optimization attack, whose poisons degenerate
// to a few distinct points in practice.
datakit::Dataset concentrated_poisons(const datakit::Dataset& ds, double fraction,
                                      int modes, numkit::Rng& rng);

// --- Targeted crafting -------------------------------------------------

struct CandidateList {
    std::vector<std::size_t> indices;  // ascending feature distance to target
    bool truncated = false;            // fewer than k candidates existed
};

// k candidate-class samples from `pool` closest to the target in the
// penultimate representation space.
CandidateList select_candidates(const modelkit::Model& m,
                                const datakit::Dataset& pool,
                                std::span<const double> target_input,
                                int candidate_class, std::size_t k);

// Proximal-gradient descent on 0.5*||phi(p)-phi(t)||^2 + (beta/2)*||p-b||^2
// with backtracking halving and [0,1] clamping. Returns the poison labeled
// with the base class, or nullopt if the proximity bound is never met.
struct CraftedPoison {
    std::vector<double> input;
    int label = 0;             // base class (clean-label)
    double feature_distance = 0.0;
    int iterations = 0;
};

std::optional<CraftedPoison> craft_feature_collision(
    const modelkit::Model& m, std::span<const double> target_input,
    std::span<const double> base_input, int base_label, const CraftConfig& cfg);

// --- Targeted attack protocols -----------------------------------------

struct TargetedProtocol {
    datakit::Dataset train_clean;
    datakit::Dataset test;
    std::vector<std::size_t> target_ids;  // indices into test
    int candidate_class = -1;             // -1: per-target most-confused other class
    std::size_t candidate_pool = 100;
    CraftConfig craft;
    optkit::TrainConfig retrain_cfg;
    double rad_threshold = 0.05;
    double clean_test_acc = 0.0;          // pretrained model's test accuracy
    std::size_t eval_subsample = 0;       // 0: full test set each epoch
    std::uint64_t seed = 0;
};

// Targets = test samples the model currently classifies correctly.
std::vector<std::size_t> pick_targets(const modelkit::Model& m,
                                      const datakit::Dataset& test,
                                      std::size_t count, std::uint64_t seed,
                                      int restrict_class = -1);

// One crafted poison per candidate, fresh retrain each; success at the
// first epoch where the target is misclassified while RAD stays under
// threshold. Stops at the first succeeding candidate.
std::vector<AttackReport> run_one_shot(const modelkit::Model& pretrained,
                                       const TargetedProtocol& proto);

// Grow the poison set one candidate at a time, retraining after each
// addition from the pretrained checkpoint.
std::vector<AttackReport> run_multi_poison(const modelkit::Model& pretrained,
                                           const TargetedProtocol& proto,
                                           int max_poisons);

}  // namespace attackkit

#endif
