#ifndef POISONLAB_METRIKIT_HPP
#define POISONLAB_METRIKIT_HPP

#include <optional>
#include <string>
#include <vector>

#include "poisonlab/attack_report.hpp"
#include "poisonlab/datakit.hpp"
#include "poisonlab/modelkit.hpp"
#include "poisonlab/numkit.hpp"

namespace metrikit {

struct undefined_stats : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Epoch-level comparison of the mean poison gradient against the mean clean
// gradient: magnitude ratio and cosine between the two mean vectors.
struct GradStats {
    int epoch = 0;
    double clean_mean_norm = 0.0;
    double poison_mean_norm = 0.0;
    double magnitude_ratio = 0.0;
    double cosine = 0.0;
    bool cosine_degenerate = false;  // some mean vector was exactly zero
};

GradStats epoch_gradient_stats(std::span<const double> clean_sum,
                               std::size_t clean_count,
                               std::span<const double> poison_sum,
                               std::size_t poison_count);

// Relative accuracy drop (clean - poisoned) / clean.
double rad(double clean_acc, double poisoned_acc);

struct SuccessSummary {
    double success_rate = 0.0;
    std::optional<double> mean_poisons_over_successes;
};

SuccessSummary success_summary(std::span<const attackkit::AttackReport> reports);

struct BoundaryBounds {
    double x_min, x_max, y_min, y_max;
};

struct BoundaryGrid {
    BoundaryBounds bounds{};
    int resolution = 0;
    std::vector<int> predicted;      // resolution x resolution, row-major
    std::vector<double> confidence;  // max softmax probability
    double x_at(int col) const;
    double y_at(int row) const;
};

// Evaluates the model (dropout off) on a resolution x resolution lattice.
BoundaryGrid boundary_grid(const modelkit::Model& m, const BoundaryBounds& bounds,
                           int resolution);

void save_boundary_csv(const BoundaryGrid& g, const std::string& path);

struct Pca2d {
    std::vector<double> projected;     // N x 2, row-major
    std::vector<double> components;    // 2 x d, row-major, orthonormal
    std::vector<double> mean;          // length d
    double var1 = 0.0, var2 = 0.0;     // variance captured per component
    std::vector<double> project(std::span<const double> x) const;
};

// Top-2 principal directions by power iteration with deflation. Sign fixed
// so each component's largest-magnitude coordinate is positive.
Pca2d pca_2d(const numkit::Tensor& X);

struct KMeansResult {
    std::vector<int> assignments;
    std::vector<double> centroids;  // k x 2
    double inertia = 0.0;
};

// Lloyd's algorithm, greedy farthest-point seeding from a seeded start.
KMeansResult kmeans(const numkit::Tensor& X, int k, std::uint64_t seed,
                    int max_iters = 300);

// Accuracy over the clean and poison partitions separately; poisons are
// scored against their poison labels.
std::pair<double, double> split_accuracy(const modelkit::Model& m,
                                         const datakit::PoisonedDataset& ds);

void save_points_csv(const numkit::Tensor& points_n2,
                     const std::vector<int>& labels, const std::string& path);

}  // namespace metrikit

#endif
