#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace pitchtrack {
namespace nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Per-feature affine map fitted so the training min/max land on -1/+1.
// Values outside the training range extrapolate linearly. Constant
// features map to 0.
struct NormalizationSpec {
  Vector min;
  Vector max;

  bool empty() const { return min.size() == 0; }
  Vector apply(const Vector& x) const;
  Matrix apply(const Matrix& x) const;  // rows are examples
  Vector invert(const Vector& x) const;
};

NormalizationSpec fit_normalization(const Matrix& x_train);

// Feedforward network: tanh hidden layers, sigmoid output (single unit).
struct Network {
  std::vector<int> layer_sizes;   // e.g. {176, 100, 14, 1}
  std::vector<Matrix> weights;    // weights[l]: sizes[l] x sizes[l+1]
  std::vector<Vector> biases;     // biases[l]: sizes[l+1]
  NormalizationSpec norm;         // applied inside infer when present
  std::string layout_tag;         // feature-layout version of the producer

  int num_layers() const { return static_cast<int>(weights.size()); }
  int num_hidden() const { return num_layers() - 1; }
  int input_size() const { return layer_sizes.front(); }
};

// Symmetric uniform init scaled by fan-in, fully determined by the seed.
Network make_network(const std::vector<int>& layer_sizes, std::uint64_t seed);

struct TrainConfig {
  int max_epochs = 400;
  int patience = 20;            // allowed consecutive failed validation epochs
  std::uint64_t seed = 1;
  enum class Optimizer { kScg, kGradientDescent };
  Optimizer optimizer = Optimizer::kScg;
  double gradient_floor = 1e-10;  // stop when the gradient norm drops below
  bool verbose = false;
};

struct TrainLog {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1;
  double best_val_loss = 0.0;
};

// Full-batch training with the cross-entropy cost and early validation
// stopping; the parameters of the best validation epoch are kept.
// Targets may be soft (in [0, 1]). Inputs are used as-is; fit and apply
// a NormalizationSpec beforehand when the feature scales call for it.
TrainLog train(Network& net, const Matrix& x, const Vector& y,
               const Matrix& val_x, const Vector& val_y, const TrainConfig& cfg);

// Mean cross-entropy of the network on a dataset (no normalization applied).
double evaluate_loss(const Network& net, const Matrix& x, const Vector& y);

// Single-example inference. hidden_activations returns the requested tanh
// layer, counted from the input (1 = first hidden layer).
double infer(const Network& net, const Vector& x);
double infer_prelogit(const Network& net, const Vector& x);
Vector hidden_activations(const Network& net, const Vector& x, int layer);

// One forward pass exposing everything downstream consumers tap.
struct ForwardResult {
  std::vector<Vector> hidden;  // tanh activations per hidden layer
  double prelogit = 0.0;
  double output = 0.0;         // sigmoid(prelogit)
};
ForwardResult forward(const Network& net, const Vector& x);

// Gradient of the mean cross-entropy, flattened in parameter order; used
// by training and by the finite-difference checks.
double loss_and_gradient(const Network& net, const Matrix& x, const Vector& y,
                         Vector& gradient);
Vector pack_parameters(const Network& net);
void unpack_parameters(Network& net, const Vector& theta);

// Versioned model container (layer sizes, parameters, normalization,
// feature-layout tag). Loading rejects unknown versions.
void save_model(const std::string& path, const Network& net);
Network load_model(const std::string& path);

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace nn
}  // namespace pitchtrack
