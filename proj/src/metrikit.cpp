#include "poisonlab/metrikit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace metrikit {

GradStats epoch_gradient_stats(std::span<const double> clean_sum,
                               std::size_t clean_count,
                               std::span<const double> poison_sum,
                               std::size_t poison_count) {
    if (clean_count == 0 || poison_count == 0)
        throw undefined_stats("epoch_gradient_stats: empty partition");
    if (clean_sum.size() != poison_sum.size())
        throw std::invalid_argument("epoch_gradient_stats: length mismatch");
    std::vector<double> cm(clean_sum.begin(), clean_sum.end());
    std::vector<double> pm(poison_sum.begin(), poison_sum.end());
    for (double& v : cm) v /= static_cast<double>(clean_count);
    for (double& v : pm) v /= static_cast<double>(poison_count);
    GradStats s;
    s.clean_mean_norm = numkit::l2_norm(cm);
    s.poison_mean_norm = numkit::l2_norm(pm);
    s.magnitude_ratio =
        s.clean_mean_norm == 0.0 ? 0.0 : s.poison_mean_norm / s.clean_mean_norm;
    if (s.clean_mean_norm == 0.0 || s.poison_mean_norm == 0.0) {
        s.cosine = 0.0;
        s.cosine_degenerate = true;
    } else {
        s.cosine = numkit::cosine_similarity(pm, cm);
    }
    return s;
}

double rad(double clean_acc, double poisoned_acc) {
    if (clean_acc <= 0.0) throw std::invalid_argument("rad: clean accuracy must be > 0");
    return (clean_acc - poisoned_acc) / clean_acc;
}

SuccessSummary success_summary(std::span<const attackkit::AttackReport> reports) {
    if (reports.empty()) throw std::invalid_argument("success_summary: empty list");
    std::size_t successes = 0;
    double poison_sum = 0.0;
    for (const auto& r : reports) {
        if (r.success) {
            ++successes;
            poison_sum += r.poisons_used;
        }
    }
    SuccessSummary s;
    s.success_rate = static_cast<double>(successes) / static_cast<double>(reports.size());
    if (successes > 0)
        s.mean_poisons_over_successes = poison_sum / static_cast<double>(successes);
    return s;
}

double BoundaryGrid::x_at(int col) const {
    if (resolution == 1) return bounds.x_min;
    return bounds.x_min + (bounds.x_max - bounds.x_min) * col / (resolution - 1);
}

double BoundaryGrid::y_at(int row) const {
    if (resolution == 1) return bounds.y_min;
    return bounds.y_min + (bounds.y_max - bounds.y_min) * row / (resolution - 1);
}

BoundaryGrid boundary_grid(const modelkit::Model& m, const BoundaryBounds& bounds,
                           int resolution) {
    if (m.input_dim != 2)
        throw std::invalid_argument("boundary_grid: model input must be 2-D");
    if (resolution < 2) throw std::invalid_argument("boundary_grid: resolution < 2");
    BoundaryGrid g;
    g.bounds = bounds;
    g.resolution = resolution;
    g.predicted.resize(std::size_t(resolution) * resolution);
    g.confidence.resize(std::size_t(resolution) * resolution);
    for (int r = 0; r < resolution; ++r)
        for (int c = 0; c < resolution; ++c) {
            double pt[2] = {g.x_at(c), g.y_at(r)};
            std::vector<double> logits = modelkit::forward(m, {pt, 2});
            std::vector<double> p = numkit::softmax(logits);
            int best = 0;
            for (int k = 1; k < m.num_classes; ++k)
                if (p[k] > p[best]) best = k;
            g.predicted[std::size_t(r) * resolution + c] = best;
            g.confidence[std::size_t(r) * resolution + c] = p[best];
        }
    return g;
}

void save_boundary_csv(const BoundaryGrid& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_boundary_csv: cannot open " + path);
    out << "x,y,predicted,confidence\n";
    out.precision(17);
    for (int r = 0; r < g.resolution; ++r)
        for (int c = 0; c < g.resolution; ++c)
            out << g.x_at(c) << ',' << g.y_at(r) << ','
                << g.predicted[std::size_t(r) * g.resolution + c] << ','
                << g.confidence[std::size_t(r) * g.resolution + c] << "\n";
}

namespace {

// Largest eigenvector of the (implicit) covariance of centered X, optionally
// deflated against a prior unit component.
std::vector<double> power_iterate(const numkit::Tensor& X,
                                  const std::vector<double>& mean,
                                  const std::vector<double>* deflate,
                                  double& eigenvalue) {
    std::size_t n = X.rows(), d = X.cols();
    std::vector<double> v(d, 0.0);
    // Deterministic start spread across all coordinates.
    for (std::size_t j = 0; j < d; ++j) v[j] = 1.0 / std::sqrt(static_cast<double>(d));
    if (deflate) {
        double proj = numkit::dot(v, *deflate);
        for (std::size_t j = 0; j < d; ++j) v[j] -= proj * (*deflate)[j];
    }
    std::vector<double> next(d);
    eigenvalue = 0.0;
    for (int iter = 0; iter < 1000; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        // next = Cov * v = (1/n) sum_i (x_i - mean) <x_i - mean, v>
        for (std::size_t i = 0; i < n; ++i) {
            auto row = X.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += (row[j] - mean[j]) * v[j];
            for (std::size_t j = 0; j < d; ++j) next[j] += (row[j] - mean[j]) * s;
        }
        for (double& x : next) x /= static_cast<double>(n);
        if (deflate) {
            double proj = numkit::dot(next, *deflate);
            for (std::size_t j = 0; j < d; ++j) next[j] -= proj * (*deflate)[j];
        }
        double norm = 0.0;
        for (double x : next) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-300) {
            eigenvalue = 0.0;
            // Degenerate direction: return any unit vector orthogonal to deflate.
            return v;
        }
        double diff = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            next[j] /= norm;
            diff += std::abs(next[j] - v[j]);
        }
        eigenvalue = norm;
        std::swap(v, next);
        if (diff < 1e-12) break;
    }
    return v;
}

void fix_sign(std::vector<double>& v) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < v.size(); ++j)
        if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
    if (v[arg] < 0)
        for (double& x : v) x = -x;
}

}  // namespace

std::vector<double> Pca2d::project(std::span<const double> x) const {
    std::size_t d = mean.size();
    if (x.size() != d) throw std::invalid_argument("Pca2d::project: dim mismatch");
    std::vector<double> out(2, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double c = x[j] - mean[j];
        out[0] += c * components[j];
        out[1] += c * components[d + j];
    }
    return out;
}

Pca2d pca_2d(const numkit::Tensor& X) {
    std::size_t n = X.rows(), d = X.cols();
    if (n < 2) throw std::invalid_argument("pca_2d: need at least 2 samples");
    Pca2d out;
    out.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = X.row(i);
        for (std::size_t j = 0; j < d; ++j) out.mean[j] += row[j];
    }
    for (double& v : out.mean) v /= static_cast<double>(n);

    double total_var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto row = X.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            double c = row[j] - out.mean[j];
            total_var += c * c;
        }
    }
    if (total_var == 0.0) throw std::runtime_error("pca_2d: rank-0 data");

    std::vector<double> c1 = power_iterate(X, out.mean, nullptr, out.var1);
    fix_sign(c1);
    std::vector<double> c2 = power_iterate(X, out.mean, &c1, out.var2);
    fix_sign(c2);

    out.components.resize(2 * d);
    std::copy(c1.begin(), c1.end(), out.components.begin());
    std::copy(c2.begin(), c2.end(), out.components.begin() + static_cast<std::ptrdiff_t>(d));

    out.projected.resize(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> p = out.project(X.row(i));
        out.projected[i * 2] = p[0];
        out.projected[i * 2 + 1] = p[1];
    }
    return out;
}

KMeansResult kmeans(const numkit::Tensor& X, int k, std::uint64_t seed,
                    int max_iters) {
    std::size_t n = X.rows();
    if (X.cols() != 2) throw std::invalid_argument("kmeans: expects N x 2 data");
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("kmeans: k must be in [1, N]");

    numkit::Rng rng(seed);
    KMeansResult res;
    res.centroids.resize(std::size_t(k) * 2);

    // Greedy farthest-point seeding from a random start.
    std::vector<std::size_t> seeds;
    seeds.push_back(static_cast<std::size_t>(rng.next_below(n)));
    std::vector<double> min_d2(n, std::numeric_limits<double>::max());
    auto dist2 = [&](std::size_t i, std::size_t j) {
        double dx = X.values[i * 2] - X.values[j * 2];
        double dy = X.values[i * 2 + 1] - X.values[j * 2 + 1];
        return dx * dx + dy * dy;
    };
    while (seeds.size() < static_cast<std::size_t>(k)) {
        std::size_t last = seeds.back();
        std::size_t far = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            min_d2[i] = std::min(min_d2[i], dist2(i, last));
            if (min_d2[i] > best) {
                best = min_d2[i];
                far = i;
            }
        }
        seeds.push_back(far);
    }
    for (int c = 0; c < k; ++c) {
        res.centroids[std::size_t(c) * 2] = X.values[seeds[c] * 2];
        res.centroids[std::size_t(c) * 2 + 1] = X.values[seeds[c] * 2 + 1];
    }

    res.assignments.assign(n, -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best_c = 0;
            double best_d = std::numeric_limits<double>::max();
            for (int c = 0; c < k; ++c) {
                double dx = X.values[i * 2] - res.centroids[std::size_t(c) * 2];
                double dy = X.values[i * 2 + 1] - res.centroids[std::size_t(c) * 2 + 1];
                double d2 = dx * dx + dy * dy;
                if (d2 < best_d) {
                    best_d = d2;
                    best_c = c;
                }
            }
            if (res.assignments[i] != best_c) {
                res.assignments[i] = best_c;
                changed = true;
            }
        }
        std::vector<double> sums(std::size_t(k) * 2, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            int c = res.assignments[i];
            sums[std::size_t(c) * 2] += X.values[i * 2];
            sums[std::size_t(c) * 2 + 1] += X.values[i * 2 + 1];
            ++counts[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) continue;  // keep empty centroid in place
            res.centroids[std::size_t(c) * 2] =
                sums[std::size_t(c) * 2] / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            res.centroids[std::size_t(c) * 2 + 1] =
                sums[std::size_t(c) * 2 + 1] / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        }
        if (!changed) break;
    }

    res.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        int c = res.assignments[i];
        double dx = X.values[i * 2] - res.centroids[std::size_t(c) * 2];
        double dy = X.values[i * 2 + 1] - res.centroids[std::size_t(c) * 2 + 1];
        res.inertia += dx * dx + dy * dy;
    }
    return res;
}

std::pair<double, double> split_accuracy(const modelkit::Model& m,
                                         const datakit::PoisonedDataset& ds) {
    std::size_t cc = 0, ct = 0, pc = 0, pt = 0;
    for (std::size_t i = 0; i < ds.base.size(); ++i) {
        bool correct =
            modelkit::predict(m, ds.base.inputs.row(i)) == ds.base.labels[i];
        if (ds.poison_mask[i]) {
            ++pt;
            if (correct) ++pc;
        } else {
            ++ct;
            if (correct) ++cc;
        }
    }
    if (ct == 0 || pt == 0)
        throw std::invalid_argument("split_accuracy: empty partition");
    return {static_cast<double>(cc) / static_cast<double>(ct),
            static_cast<double>(pc) / static_cast<double>(pt)};
}

void save_points_csv(const numkit::Tensor& points_n2,
                     const std::vector<int>& labels, const std::string& path) {
    if (points_n2.cols() != 2)
        throw std::invalid_argument("save_points_csv: expects N x 2");
    if (labels.size() != points_n2.rows())
        throw std::invalid_argument("save_points_csv: label count mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_points_csv: cannot open " + path);
    out << "x,y,label\n";
    out.precision(17);
    for (std::size_t i = 0; i < points_n2.rows(); ++i)
        out << points_n2.values[i * 2] << ',' << points_n2.values[i * 2 + 1] << ','
            << labels[i] << "\n";
}

}  // namespace metrikit
