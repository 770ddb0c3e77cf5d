#include "poisonlab/modelkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace modelkit {

namespace {

struct CnnDims {
    int c, h, w;
    int h1, w1, h2, w2, ph, pw;
    int n1, n2, npool;  // element counts per stage
};

CnnDims cnn_dims(const Model& m) {
    CnnDims d;
    d.c = m.img_c;
    d.h = m.img_h;
    d.w = m.img_w;
    d.h1 = m.conv1_h();
    d.w1 = m.conv1_w();
    d.h2 = m.conv2_h();
    d.w2 = m.conv2_w();
    d.ph = m.pool_h();
    d.pw = m.pool_w();
    d.n1 = kCnnConv1Channels * d.h1 * d.w1;
    d.n2 = kCnnConv2Channels * d.h2 * d.w2;
    d.npool = kCnnConv2Channels * d.ph * d.pw;
    return d;
}

struct CnnOffsets {
    std::size_t k1, b1, k2, b2, w3, b3, w4, b4, total;
};

CnnOffsets cnn_offsets(const Model& m) {
    CnnDims d = cnn_dims(m);
    CnnOffsets o;
    o.k1 = 0;
    o.b1 = o.k1 + std::size_t(kCnnConv1Channels) * d.c * 9;
    o.k2 = o.b1 + kCnnConv1Channels;
    o.b2 = o.k2 + std::size_t(kCnnConv2Channels) * kCnnConv1Channels * 9;
    o.w3 = o.b2 + kCnnConv2Channels;
    o.b3 = o.w3 + std::size_t(kCnnFcWidth) * d.npool;
    o.w4 = o.b3 + kCnnFcWidth;
    o.b4 = o.w4 + std::size_t(m.num_classes) * kCnnFcWidth;
    o.total = o.b4 + m.num_classes;
    return o;
}

std::size_t param_count(const Model& m) {
    switch (m.kind) {
        case ModelKind::LR:
            return std::size_t(m.num_classes) * m.input_dim + m.num_classes;
        case ModelKind::MLP:
            return std::size_t(m.hidden) * m.input_dim + m.hidden +
                   std::size_t(m.num_classes) * m.hidden + m.num_classes;
        case ModelKind::CNN:
            return cnn_offsets(m).total;
    }
    throw std::logic_error("param_count: bad kind");
}

void check_input(const Model& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.input_dim)
        throw std::invalid_argument("model: input dimension mismatch");
}

// --- MLP ---------------------------------------------------------------

struct MlpCache {
    std::vector<double> z1, h, logits;
};

MlpCache mlp_forward(const Model& m, std::span<const double> x) {
    int d = m.input_dim, H = m.hidden, C = m.num_classes;
    const double* W1 = m.params.data();
    const double* b1 = W1 + std::size_t(H) * d;
    const double* W2 = b1 + H;
    const double* b2 = W2 + std::size_t(C) * H;
    MlpCache cc;
    cc.z1.resize(H);
    cc.h.resize(H);
    for (int i = 0; i < H; ++i) {
        double s = b1[i];
        const double* row = W1 + std::size_t(i) * d;
        for (int j = 0; j < d; ++j) s += row[j] * x[j];
        cc.z1[i] = s;
        cc.h[i] = s > 0 ? s : 0.0;
    }
    cc.logits.resize(C);
    for (int k = 0; k < C; ++k) {
        double s = b2[k];
        const double* row = W2 + std::size_t(k) * H;
        for (int i = 0; i < H; ++i) s += row[i] * cc.h[i];
        cc.logits[k] = s;
    }
    return cc;
}

// Fills grad (when non-null) and dx (when non-null) from dlogits.
void mlp_backward(const Model& m, std::span<const double> x, const MlpCache& cc,
                  const std::vector<double>& dlogits, std::vector<double>* grad,
                  std::vector<double>* dx) {
    int d = m.input_dim, H = m.hidden, C = m.num_classes;
    const double* W1 = m.params.data();
    const double* W2 = W1 + std::size_t(H) * d + H;

    std::vector<double> dz1(H, 0.0);
    for (int k = 0; k < C; ++k) {
        const double* row = W2 + std::size_t(k) * H;
        for (int i = 0; i < H; ++i) dz1[i] += row[i] * dlogits[k];
    }
    for (int i = 0; i < H; ++i)
        if (cc.z1[i] <= 0) dz1[i] = 0.0;

    if (grad) {
        grad->assign(m.params.size(), 0.0);
        double* gW1 = grad->data();
        double* gb1 = gW1 + std::size_t(H) * d;
        double* gW2 = gb1 + H;
        double* gb2 = gW2 + std::size_t(C) * H;
        for (int i = 0; i < H; ++i) {
            double* row = gW1 + std::size_t(i) * d;
            for (int j = 0; j < d; ++j) row[j] = dz1[i] * x[j];
            gb1[i] = dz1[i];
        }
        for (int k = 0; k < C; ++k) {
            double* row = gW2 + std::size_t(k) * H;
            for (int i = 0; i < H; ++i) row[i] = dlogits[k] * cc.h[i];
            gb2[k] = dlogits[k];
        }
    }
    if (dx) {
        dx->assign(d, 0.0);
        for (int i = 0; i < H; ++i) {
            if (dz1[i] == 0.0) continue;
            const double* row = W1 + std::size_t(i) * d;
            for (int j = 0; j < d; ++j) (*dx)[j] += row[j] * dz1[i];
        }
    }
}

// Backprop from the hidden layer (dh given) for feature-match objectives.
void mlp_backward_from_hidden(const Model& m, const MlpCache& cc,
                              const std::vector<double>& dh,
                              std::vector<double>* dx) {
    int d = m.input_dim, H = m.hidden;
    const double* W1 = m.params.data();
    dx->assign(d, 0.0);
    for (int i = 0; i < H; ++i) {
        if (cc.z1[i] <= 0 || dh[i] == 0.0) continue;
        const double* row = W1 + std::size_t(i) * d;
        for (int j = 0; j < d; ++j) (*dx)[j] += row[j] * dh[i];
    }
}

// --- CNN ---------------------------------------------------------------

struct CnnCache {
    std::vector<double> z1;        // pre-ReLU conv1 [16][h1][w1]
    std::vector<double> z2;        // pre-ReLU conv2 [32][h2][w2]
    std::vector<double> pooled;    // post-pool, pre-dropout [32][ph][pw]
    std::vector<int> pool_arg;     // flat index into z2 per pooled cell
    std::vector<double> drop;      // multiplicative mask (1/(1-p) kept, 0 dropped)
    std::vector<double> z3, h3, logits;
};

CnnCache cnn_forward(const Model& m, std::span<const double> x, EvalMode mode) {
    CnnDims dd = cnn_dims(m);
    CnnOffsets o = cnn_offsets(m);
    const double* P = m.params.data();
    CnnCache cc;

    cc.z1.assign(dd.n1, 0.0);
    for (int f = 0; f < kCnnConv1Channels; ++f) {
        for (int r = 0; r < dd.h1; ++r)
            for (int c = 0; c < dd.w1; ++c) {
                double s = P[o.b1 + f];
                for (int ch = 0; ch < dd.c; ++ch) {
                    const double* ker = P + o.k1 + (std::size_t(f) * dd.c + ch) * 9;
                    const double* img = x.data() + std::size_t(ch) * dd.h * dd.w;
                    for (int dr = 0; dr < 3; ++dr)
                        for (int dc = 0; dc < 3; ++dc)
                            s += ker[dr * 3 + dc] * img[(r + dr) * dd.w + (c + dc)];
                }
                cc.z1[(std::size_t(f) * dd.h1 + r) * dd.w1 + c] = s;
            }
    }

    cc.z2.assign(dd.n2, 0.0);
    for (int f = 0; f < kCnnConv2Channels; ++f) {
        for (int r = 0; r < dd.h2; ++r)
            for (int c = 0; c < dd.w2; ++c) {
                double s = P[o.b2 + f];
                for (int ch = 0; ch < kCnnConv1Channels; ++ch) {
                    const double* ker =
                        P + o.k2 + (std::size_t(f) * kCnnConv1Channels + ch) * 9;
                    const double* a1 = cc.z1.data() + std::size_t(ch) * dd.h1 * dd.w1;
                    for (int dr = 0; dr < 3; ++dr)
                        for (int dc = 0; dc < 3; ++dc) {
                            double v = a1[(r + dr) * dd.w1 + (c + dc)];
                            if (v > 0) s += ker[dr * 3 + dc] * v;
                        }
                }
                cc.z2[(std::size_t(f) * dd.h2 + r) * dd.w2 + c] = s;
            }
    }

    cc.pooled.assign(dd.npool, 0.0);
    cc.pool_arg.assign(dd.npool, 0);
    for (int f = 0; f < kCnnConv2Channels; ++f)
        for (int r = 0; r < dd.ph; ++r)
            for (int c = 0; c < dd.pw; ++c) {
                double best = -1e300;
                int arg = 0;
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) {
                        int idx = (f * dd.h2 + 2 * r + i) * dd.w2 + 2 * c + j;
                        double v = cc.z2[idx] > 0 ? cc.z2[idx] : 0.0;
                        if (v > best) {
                            best = v;
                            arg = idx;
                        }
                    }
                int pi = (f * dd.ph + r) * dd.pw + c;
                cc.pooled[pi] = best;
                cc.pool_arg[pi] = arg;
            }

    cc.drop.assign(dd.npool, 1.0);
    if (mode.train_mode && mode.rng != nullptr) {
        double keep = 1.0 - kDropoutRate;
        for (int i = 0; i < dd.npool; ++i)
            cc.drop[i] = mode.rng->next_double() < keep ? 1.0 / keep : 0.0;
    }

    cc.z3.assign(kCnnFcWidth, 0.0);
    cc.h3.assign(kCnnFcWidth, 0.0);
    for (int i = 0; i < kCnnFcWidth; ++i) {
        double s = P[o.b3 + i];
        const double* row = P + o.w3 + std::size_t(i) * dd.npool;
        for (int j = 0; j < dd.npool; ++j) s += row[j] * cc.pooled[j] * cc.drop[j];
        cc.z3[i] = s;
        cc.h3[i] = s > 0 ? s : 0.0;
    }
    cc.logits.assign(m.num_classes, 0.0);
    for (int k = 0; k < m.num_classes; ++k) {
        double s = P[o.b4 + k];
        const double* row = P + o.w4 + std::size_t(k) * kCnnFcWidth;
        for (int i = 0; i < kCnnFcWidth; ++i) s += row[i] * cc.h3[i];
        cc.logits[k] = s;
    }
    return cc;
}

// Backward from dh3 (gradient at the post-ReLU FC-64 layer) down to the
// input; adds logits-layer terms first when dlogits is non-null.
void cnn_backward(const Model& m, std::span<const double> x, const CnnCache& cc,
                  const std::vector<double>* dlogits,
                  std::vector<double> dh3, std::vector<double>* grad,
                  std::vector<double>* dx) {
    CnnDims dd = cnn_dims(m);
    CnnOffsets o = cnn_offsets(m);
    const double* P = m.params.data();
    double* G = nullptr;
    if (grad) {
        grad->assign(m.params.size(), 0.0);
        G = grad->data();
    }

    if (dlogits) {
        for (int k = 0; k < m.num_classes; ++k) {
            double dk = (*dlogits)[k];
            if (G) {
                double* row = G + o.w4 + std::size_t(k) * kCnnFcWidth;
                for (int i = 0; i < kCnnFcWidth; ++i) row[i] += dk * cc.h3[i];
                G[o.b4 + k] += dk;
            }
            const double* row = P + o.w4 + std::size_t(k) * kCnnFcWidth;
            for (int i = 0; i < kCnnFcWidth; ++i) dh3[i] += row[i] * dk;
        }
    }

    std::vector<double> dz3(kCnnFcWidth, 0.0);
    for (int i = 0; i < kCnnFcWidth; ++i)
        dz3[i] = cc.z3[i] > 0 ? dh3[i] : 0.0;

    std::vector<double> dpool(dd.npool, 0.0);
    for (int i = 0; i < kCnnFcWidth; ++i) {
        if (dz3[i] == 0.0) continue;
        const double* row = P + o.w3 + std::size_t(i) * dd.npool;
        if (G) {
            double* grow = G + o.w3 + std::size_t(i) * dd.npool;
            for (int j = 0; j < dd.npool; ++j)
                grow[j] += dz3[i] * cc.pooled[j] * cc.drop[j];
            G[o.b3 + i] += dz3[i];
        }
        for (int j = 0; j < dd.npool; ++j) dpool[j] += row[j] * dz3[i] * cc.drop[j];
    }

    // Unpool through the recorded argmax, then through conv2's ReLU.
    std::vector<double> dz2(dd.n2, 0.0);
    for (int pi = 0; pi < dd.npool; ++pi) {
        int idx = cc.pool_arg[pi];
        if (cc.z2[idx] > 0) dz2[idx] += dpool[pi];
    }

    std::vector<double> da1(dd.n1, 0.0);
    for (int f = 0; f < kCnnConv2Channels; ++f)
        for (int r = 0; r < dd.h2; ++r)
            for (int c = 0; c < dd.w2; ++c) {
                double g = dz2[(std::size_t(f) * dd.h2 + r) * dd.w2 + c];
                if (g == 0.0) continue;
                if (G) G[o.b2 + f] += g;
                for (int ch = 0; ch < kCnnConv1Channels; ++ch) {
                    const double* ker =
                        P + o.k2 + (std::size_t(f) * kCnnConv1Channels + ch) * 9;
                    const double* a1base = cc.z1.data() + std::size_t(ch) * dd.h1 * dd.w1;
                    double* da1base = da1.data() + std::size_t(ch) * dd.h1 * dd.w1;
                    double* gker =
                        G ? G + o.k2 + (std::size_t(f) * kCnnConv1Channels + ch) * 9
                          : nullptr;
                    for (int dr = 0; dr < 3; ++dr)
                        for (int dc = 0; dc < 3; ++dc) {
                            int ai = (r + dr) * dd.w1 + (c + dc);
                            double a = a1base[ai] > 0 ? a1base[ai] : 0.0;
                            if (gker) gker[dr * 3 + dc] += g * a;
                            da1base[ai] += g * ker[dr * 3 + dc];
                        }
                }
            }

    if (dx) dx->assign(m.input_dim, 0.0);
    for (int f = 0; f < kCnnConv1Channels; ++f)
        for (int r = 0; r < dd.h1; ++r)
            for (int c = 0; c < dd.w1; ++c) {
                std::size_t zi = (std::size_t(f) * dd.h1 + r) * dd.w1 + c;
                if (cc.z1[zi] <= 0) continue;
                double g = da1[zi];
                if (g == 0.0) continue;
                if (G) G[o.b1 + f] += g;
                for (int ch = 0; ch < dd.c; ++ch) {
                    const double* ker = P + o.k1 + (std::size_t(f) * dd.c + ch) * 9;
                    const double* img = x.data() + std::size_t(ch) * dd.h * dd.w;
                    double* gker =
                        G ? G + o.k1 + (std::size_t(f) * dd.c + ch) * 9 : nullptr;
                    for (int dr = 0; dr < 3; ++dr)
                        for (int dc = 0; dc < 3; ++dc) {
                            int xi = (r + dr) * dd.w + (c + dc);
                            if (gker) gker[dr * 3 + dc] += g * img[xi];
                            if (dx)
                                (*dx)[std::size_t(ch) * dd.h * dd.w + xi] +=
                                    g * ker[dr * 3 + dc];
                        }
                }
            }
}

}  // namespace

int Model::penultimate_dim() const {
    switch (kind) {
        case ModelKind::LR: return input_dim;
        case ModelKind::MLP: return hidden;
        case ModelKind::CNN: return kCnnFcWidth;
    }
    throw std::logic_error("penultimate_dim: bad kind");
}

Model make_lr(int input_dim, int num_classes) {
    if (input_dim < 1 || num_classes < 2)
        throw std::invalid_argument("make_lr: bad dimensions");
    Model m;
    m.kind = ModelKind::LR;
    m.input_dim = input_dim;
    m.num_classes = num_classes;
    m.params.assign(param_count(m), 0.0);
    return m;
}

Model make_mlp(int input_dim, int num_classes, int hidden) {
    if (input_dim < 1 || num_classes < 2 || hidden < 1)
        throw std::invalid_argument("make_mlp: bad dimensions");
    Model m;
    m.kind = ModelKind::MLP;
    m.input_dim = input_dim;
    m.num_classes = num_classes;
    m.hidden = hidden;
    m.params.assign(param_count(m), 0.0);
    return m;
}

Model make_cnn(int img_h, int img_w, int img_c, int num_classes) {
    if (img_h < 8 || img_w < 8 || img_c < 1 || num_classes < 2)
        throw std::invalid_argument("make_cnn: image too small or bad classes");
    Model m;
    m.kind = ModelKind::CNN;
    m.img_h = img_h;
    m.img_w = img_w;
    m.img_c = img_c;
    m.input_dim = img_h * img_w * img_c;
    m.num_classes = num_classes;
    m.params.assign(param_count(m), 0.0);
    return m;
}

namespace {

void fill_uniform(std::span<double> w, int fan_in, int fan_out, numkit::Rng& rng) {
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : w) v = (2.0 * rng.next_double() - 1.0) * limit;
}

}  // namespace

void init_params(Model& m, numkit::Rng& rng) {
    double* P = m.params.data();
    switch (m.kind) {
        case ModelKind::LR:
            fill_uniform({P, std::size_t(m.num_classes) * m.input_dim}, m.input_dim,
                         m.num_classes, rng);
            break;
        case ModelKind::MLP: {
            std::size_t w1 = std::size_t(m.hidden) * m.input_dim;
            fill_uniform({P, w1}, m.input_dim, m.hidden, rng);
            std::size_t w2 = std::size_t(m.num_classes) * m.hidden;
            fill_uniform({P + w1 + m.hidden, w2}, m.hidden, m.num_classes, rng);
            break;
        }
        case ModelKind::CNN: {
            CnnOffsets o = cnn_offsets(m);
            CnnDims d = cnn_dims(m);
            fill_uniform({P + o.k1, o.b1 - o.k1}, d.c * 9, kCnnConv1Channels * 9, rng);
            fill_uniform({P + o.k2, o.b2 - o.k2}, kCnnConv1Channels * 9,
                         kCnnConv2Channels * 9, rng);
            fill_uniform({P + o.w3, o.b3 - o.w3}, d.npool, kCnnFcWidth, rng);
            fill_uniform({P + o.w4, o.b4 - o.w4}, kCnnFcWidth, m.num_classes, rng);
            break;
        }
    }
}

std::vector<double> forward(const Model& m, std::span<const double> x, EvalMode mode) {
    check_input(m, x);
    switch (m.kind) {
        case ModelKind::LR: {
            const double* W = m.params.data();
            const double* b = W + std::size_t(m.num_classes) * m.input_dim;
            std::vector<double> logits(m.num_classes);
            for (int k = 0; k < m.num_classes; ++k) {
                double s = b[k];
                const double* row = W + std::size_t(k) * m.input_dim;
                for (int j = 0; j < m.input_dim; ++j) s += row[j] * x[j];
                logits[k] = s;
            }
            return logits;
        }
        case ModelKind::MLP:
            return mlp_forward(m, x).logits;
        case ModelKind::CNN:
            return cnn_forward(m, x, mode).logits;
    }
    throw std::logic_error("forward: bad kind");
}

double per_example_grad(const Model& m, std::span<const double> x, int y,
                        EvalMode mode, std::vector<double>& grad_out) {
    check_input(m, x);
    if (y < 0 || y >= m.num_classes)
        throw std::invalid_argument("per_example_grad: label out of range");
    switch (m.kind) {
        case ModelKind::LR: {
            std::vector<double> logits = forward(m, x);
            auto lg = numkit::softmax_cross_entropy(logits, std::size_t(y));
            grad_out.assign(m.params.size(), 0.0);
            double* gW = grad_out.data();
            double* gb = gW + std::size_t(m.num_classes) * m.input_dim;
            for (int k = 0; k < m.num_classes; ++k) {
                double* row = gW + std::size_t(k) * m.input_dim;
                for (int j = 0; j < m.input_dim; ++j) row[j] = lg.dlogits[k] * x[j];
                gb[k] = lg.dlogits[k];
            }
            return lg.loss;
        }
        case ModelKind::MLP: {
            MlpCache cc = mlp_forward(m, x);
            auto lg = numkit::softmax_cross_entropy(cc.logits, std::size_t(y));
            mlp_backward(m, x, cc, lg.dlogits, &grad_out, nullptr);
            return lg.loss;
        }
        case ModelKind::CNN: {
            CnnCache cc = cnn_forward(m, x, mode);
            auto lg = numkit::softmax_cross_entropy(cc.logits, std::size_t(y));
            cnn_backward(m, x, cc, &lg.dlogits,
                         std::vector<double>(kCnnFcWidth, 0.0), &grad_out, nullptr);
            return lg.loss;
        }
    }
    throw std::logic_error("per_example_grad: bad kind");
}

ExampleGrad per_example_grad(const Model& m, std::span<const double> x, int y,
                             EvalMode mode) {
    ExampleGrad out;
    out.loss = per_example_grad(m, x, y, mode, out.grad);
    return out;
}

std::vector<double> penultimate_features(const Model& m, std::span<const double> x) {
    check_input(m, x);
    switch (m.kind) {
        case ModelKind::LR:
            return {x.begin(), x.end()};
        case ModelKind::MLP:
            return mlp_forward(m, x).h;
        case ModelKind::CNN:
            return cnn_forward(m, x, {}).h3;
    }
    throw std::logic_error("penultimate_features: bad kind");
}

std::vector<double> input_grad(const Model& m, std::span<const double> x,
                               std::span<const double> target_features) {
    check_input(m, x);
    if (static_cast<int>(target_features.size()) != m.penultimate_dim())
        throw std::invalid_argument("input_grad: target feature dimension mismatch");
    switch (m.kind) {
        case ModelKind::LR: {
            std::vector<double> g(x.size());
            for (std::size_t j = 0; j < x.size(); ++j) g[j] = x[j] - target_features[j];
            return g;
        }
        case ModelKind::MLP: {
            MlpCache cc = mlp_forward(m, x);
            std::vector<double> dh(m.hidden);
            for (int i = 0; i < m.hidden; ++i) dh[i] = cc.h[i] - target_features[i];
            std::vector<double> dx;
            mlp_backward_from_hidden(m, cc, dh, &dx);
            return dx;
        }
        case ModelKind::CNN: {
            CnnCache cc = cnn_forward(m, x, {});
            std::vector<double> dh3(kCnnFcWidth);
            for (int i = 0; i < kCnnFcWidth; ++i) dh3[i] = cc.h3[i] - target_features[i];
            std::vector<double> dx;
            cnn_backward(m, x, cc, nullptr, std::move(dh3), nullptr, &dx);
            return dx;
        }
    }
    throw std::logic_error("input_grad: bad kind");
}

int predict(const Model& m, std::span<const double> x) {
    std::vector<double> logits = forward(m, x);
    int best = 0;
    for (int k = 1; k < m.num_classes; ++k)
        if (logits[k] > logits[best]) best = k;  // ties toward lowest index
    return best;
}

double accuracy(const Model& m, const datakit::Dataset& ds) {
    if (ds.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (predict(m, ds.inputs.row(i)) == ds.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

void save_model(const Model& m, const std::string& path) {
    nlohmann::json j;
    j["version"] = 1;
    j["kind"] = m.kind == ModelKind::LR ? "lr" : m.kind == ModelKind::MLP ? "mlp" : "cnn";
    j["input_dim"] = m.input_dim;
    j["num_classes"] = m.num_classes;
    j["hidden"] = m.hidden;
    j["img_h"] = m.img_h;
    j["img_w"] = m.img_w;
    j["img_c"] = m.img_c;
    j["params"] = m.params;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_model: cannot open " + path);
    out << j.dump();
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    std::string kind = j.at("kind");
    Model m;
    if (kind == "lr")
        m = make_lr(j.at("input_dim"), j.at("num_classes"));
    else if (kind == "mlp")
        m = make_mlp(j.at("input_dim"), j.at("num_classes"), j.at("hidden"));
    else if (kind == "cnn")
        m = make_cnn(j.at("img_h"), j.at("img_w"), j.at("img_c"), j.at("num_classes"));
    else
        throw std::runtime_error("load_model: unknown kind " + kind);
    std::vector<double> params = j.at("params");
    if (params.size() != m.params.size())
        throw std::runtime_error("load_model: parameter count mismatch");
    m.params = std::move(params);
    return m;
}

}  // namespace modelkit
