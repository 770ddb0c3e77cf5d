#ifndef POISONLAB_MODELKIT_HPP
#define POISONLAB_MODELKIT_HPP

#include <span>
#include <string>
#include <vector>

#include "poisonlab/datakit.hpp"
#include "poisonlab/numkit.hpp"

namespace modelkit {

enum class ModelKind { LR, MLP, CNN };

// Dropout is active only in train mode and only when an rng is supplied.
struct EvalMode {
    bool train_mode = false;
    numkit::Rng* rng = nullptr;
};

// Parameterized classifier with a flat parameter vector. Layouts:
//   LR:  W[classes x d], b[classes]
//   MLP: W1[hidden x d], b1, W2[classes x hidden], b2 (ReLU hidden)
//   CNN: conv 3x3x16 (ReLU), conv 3x3x32 (ReLU), maxpool 2x2,
//        dropout 0.5 (train only), FC 64 (ReLU), FC classes
struct Model {
    ModelKind kind = ModelKind::LR;
    int input_dim = 0;
    int num_classes = 0;
    int hidden = 0;            // MLP hidden width
    int img_h = 0, img_w = 0, img_c = 0;  // CNN input layout
    std::vector<double> params;

    // CNN derived dims (valid conv, stride 1).
    int conv1_h() const { return img_h - 2; }
    int conv1_w() const { return img_w - 2; }
    int conv2_h() const { return conv1_h() - 2; }
    int conv2_w() const { return conv1_w() - 2; }
    int pool_h() const { return conv2_h() / 2; }
    int pool_w() const { return conv2_w() / 2; }
    int penultimate_dim() const;
};

constexpr int kCnnConv1Channels = 16;
constexpr int kCnnConv2Channels = 32;
constexpr int kCnnFcWidth = 64;
constexpr double kDropoutRate = 0.5;

Model make_lr(int input_dim, int num_classes);
Model make_mlp(int input_dim, int num_classes, int hidden = 256);
Model make_cnn(int img_h, int img_w, int img_c, int num_classes);

// Per-layer uniform init in +-sqrt(6/(fan_in+fan_out)), biases zero.
void init_params(Model& m, numkit::Rng& rng);

std::vector<double> forward(const Model& m, std::span<const double> x,
                            EvalMode mode = {});

struct ExampleGrad {
    double loss;
    std::vector<double> grad;  // aligned with params
};

// Analytic gradient of softmax cross-entropy w.r.t. every parameter,
// for a single example.
ExampleGrad per_example_grad(const Model& m, std::span<const double> x, int y,
                             EvalMode mode = {});

// Same gradient written into grad_out (capacity reused across calls, which
// keeps tight training loops free of per-example allocations). Returns loss.
double per_example_grad(const Model& m, std::span<const double> x, int y,
                        EvalMode mode, std::vector<double>& grad_out);

// Last hidden activations (dropout off). LR falls back to the input itself.
std::vector<double> penultimate_features(const Model& m, std::span<const double> x);

// Gradient w.r.t. x of 0.5 * ||phi(x) - target_features||^2 (dropout off).
std::vector<double> input_grad(const Model& m, std::span<const double> x,
                               std::span<const double> target_features);

int predict(const Model& m, std::span<const double> x);

double accuracy(const Model& m, const datakit::Dataset& ds);

// Checkpoint round trip (JSON blob, exact doubles).
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

}  // namespace modelkit

#endif
