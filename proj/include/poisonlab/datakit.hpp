#ifndef POISONLAB_DATAKIT_HPP
#define POISONLAB_DATAKIT_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "poisonlab/numkit.hpp"

namespace datakit {

struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Dataset {
    numkit::Tensor inputs;       // N x d
    std::vector<int> labels;     // class indices, length N
    int num_classes = 0;
    std::string name;

    std::size_t size() const { return inputs.rows(); }
    std::size_t dim() const { return inputs.cols(); }
    void validate() const;
};

struct PoisonedDataset {
    Dataset base;
    std::vector<std::uint8_t> poison_mask;  // length N

    std::size_t poison_count() const;
    std::size_t clean_count() const { return base.size() - poison_count(); }
    // #poisons / #clean.
    double intensity() const;
};

// Wraps a dataset as fully clean (mask all false).
PoisonedDataset as_clean(Dataset ds);

// IDX binary format (big-endian, magic 0x803 images / 0x801 labels),
// pixel bytes scaled to [0,1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);
void save_idx(const Dataset& ds, std::size_t img_h, std::size_t img_w,
              const std::string& images_path, const std::string& labels_path);

// Two interleaved half-circles with Gaussian jitter; balanced classes.
std::pair<Dataset, Dataset> two_moons(std::size_t n_train, std::size_t n_test,
                                      double noise_std, std::uint64_t seed);

// Binary feature vectors: per-class prototype patterns with bit flips.
std::pair<Dataset, Dataset> purchase_like(std::size_t n_train, std::size_t n_test,
                                          std::size_t d, int num_classes,
                                          std::uint64_t seed,
                                          double flip_prob = 0.1);

// Synthetic grayscale image classes: smooth per-class prototype patterns
// with per-sample intensity scaling, a few shared smooth style components
// (low-rank within-class variation, as in real image data) and mild pixel
// noise; values in [0,1]. Objects sit on a circular support with an exactly
// black background, like centered-object benchmarks. Stands in for image
// benchmarks when no IDX files are on disk.
std::pair<Dataset, Dataset> synthetic_images(std::size_t n_train, std::size_t n_test,
                                             std::size_t img_h, std::size_t img_w,
                                             int num_classes, std::uint64_t seed,
                                             double noise_std = 0.18,
                                             double pattern_scale = 0.5);

// Relabels class_a -> 0, class_b -> 1, keeping the first per_class samples
// of each in dataset order.
Dataset binary_subset(const Dataset& ds, int class_a, int class_b,
                      std::size_t per_class);

// Concatenates and applies one seeded permutation jointly to rows and mask.
PoisonedDataset merge_with_poisons(const Dataset& clean, const Dataset& poisons,
                                   std::uint64_t shuffle_seed = 0);

// Headered CSV, first column label.
void save_csv(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path, int num_classes, std::string name = "csv");

}  // namespace datakit

#endif
