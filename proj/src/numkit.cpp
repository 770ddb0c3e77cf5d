#include "poisonlab/numkit.hpp"

#include <cmath>
#include <numeric>

namespace numkit {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> values_)
    : shape(std::move(shape_)), values(std::move(values_)) {
    std::size_t expect = 1;
    for (std::size_t s : shape) {
        if (s == 0) throw std::invalid_argument("Tensor: zero dimension");
        expect *= s;
    }
    if (shape.empty()) expect = 0;
    if (values.size() != expect)
        throw std::invalid_argument("Tensor: shape/value count mismatch");
}

std::size_t Tensor::cols() const {
    if (shape.size() != 2) throw std::invalid_argument("Tensor: not 2-D");
    return shape[1];
}

std::span<const double> Tensor::row(std::size_t i) const {
    std::size_t d = cols();
    if (i >= shape[0]) throw std::invalid_argument("Tensor: row out of range");
    return {values.data() + i * d, d};
}

std::span<double> Tensor::row(std::size_t i) {
    std::size_t d = cols();
    if (i >= shape[0]) throw std::invalid_argument("Tensor: row out of range");
    return {values.data() + i * d, d};
}

Rng::Rng(std::uint64_t seed) {
    // SplitMix64 scrambles the seed so nearby seeds give unrelated streams.
    std::uint64_t s = seed;
    state_ = splitmix64(s);
    if (state_ == 0) state_ = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t Rng::next_u64() {
    // xorshift64*
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dULL;
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::next_below: n == 0");
    // Rejection sampling for an unbiased result.
    std::uint64_t limit = ~0ULL - (~0ULL % n);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

double Rng::next_gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = next_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Rng Rng::split(std::uint64_t stream_id) {
    return Rng(next_u64() ^ (stream_id * 0x9e3779b97f4a7c15ULL));
}

double l2_norm(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("l2_norm: empty vector");
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine_similarity: length mismatch");
    double na = l2_norm(a);
    double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0)
        throw undefined_similarity("cosine_similarity: zero vector");
    double c = dot(a, b) / (na * nb);
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

std::vector<double> gaussian_noise(Rng& rng, std::size_t n, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("gaussian_noise: negative sigma");
    std::vector<double> out(n, 0.0);
    if (sigma == 0.0) return out;
    for (std::size_t i = 0; i < n; ++i) out[i] = sigma * rng.next_gaussian();
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
    double mx = logits[0];
    for (double z : logits) mx = std::max(mx, z);
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

LossGrad softmax_cross_entropy(std::span<const double> logits, std::size_t label) {
    if (label >= logits.size())
        throw std::invalid_argument("softmax_cross_entropy: label out of range");
    double mx = logits[0];
    for (double z : logits) mx = std::max(mx, z);
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - mx);
    double log_sum = std::log(sum);
    LossGrad out;
    out.loss = log_sum - (logits[label] - mx);
    out.dlogits.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
        out.dlogits[i] = std::exp(logits[i] - mx) / sum - (i == label ? 1.0 : 0.0);
    return out;
}

}  // namespace numkit
