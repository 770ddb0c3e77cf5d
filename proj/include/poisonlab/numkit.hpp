#ifndef POISONLAB_NUMKIT_HPP
#define POISONLAB_NUMKIT_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace numkit {

// Thrown when cosine similarity is requested for a zero vector. Callers
// decide whether this is fatal or maps to a degenerate-stats flag.
struct undefined_similarity : std::domain_error {
    using std::domain_error::domain_error;
};

// Dense row-major tensor of 64-bit reals.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape_, std::vector<double> values_);

    std::size_t size() const { return values.size(); }
    // Row view for a 2-D tensor.
    std::span<const double> row(std::size_t i) const;
    std::span<double> row(std::size_t i);
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const;
};

// Deterministic 64-bit generator: SplitMix64 seeding a xorshift64* stream,
// Gaussian draws via Box-Muller. Bit-stable across platforms; single-owner,
// never shared between threads (split seeded streams instead).
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    // Uniform in [0, 1).
    double next_double();
    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n);
    // Standard normal draw (Box-Muller, second value cached).
    double next_gaussian();
    // Derive an independent stream for (purpose, index) without disturbing
    // this stream's state beyond one draw.
    Rng split(std::uint64_t stream_id);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

double l2_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// n draws from Normal(0, sigma^2). sigma == 0 returns exact zeros without
// advancing the stream, so noise(sigma) == sigma * noise(1) for equal seeds.
std::vector<double> gaussian_noise(Rng& rng, std::size_t n, double sigma);

std::vector<double> softmax(std::span<const double> logits);

struct LossGrad {
    double loss;
    std::vector<double> dlogits;
};

// Max-shifted softmax cross-entropy; dlogits = softmax(logits) - onehot(label).
LossGrad softmax_cross_entropy(std::span<const double> logits, std::size_t label);

}  // namespace numkit

#endif
