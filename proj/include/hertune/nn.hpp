#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hertune::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation {
  kRelu,
  kIdentity,
  kTanh,  // symmetric bounded sigmoid, outputs in (-1, 1)
};

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// First/second moment accumulators for every parameter, mirroring the
// network's layer shapes.
struct AdamState {
  std::vector<Matrix> weight_m, weight_v;
  std::vector<Vector> bias_m, bias_v;
  std::int64_t step = 0;
};

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Dense feedforward network. weights[i] has shape
// (layer_sizes[i+1] x layer_sizes[i]); biases[i] has length layer_sizes[i+1].
struct Mlp {
  std::vector<int> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Activation hidden_activation = Activation::kRelu;
  Activation output_activation = Activation::kIdentity;
  AdamState adam;

  Mlp() = default;
  // Zero-initialized parameters and optimizer state.
  Mlp(std::vector<int> sizes, Activation hidden, Activation output);

  std::size_t num_layers() const { return weights.size(); }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  std::size_t parameter_count() const;

  // Throws ContractViolation if any parameter or moment shape disagrees
  // with layer_sizes.
  void check_shapes() const;
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
void initialize_uniform(Mlp& net, std::uint64_t seed);

struct GradientSet {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static GradientSet zeros_like(const Mlp& net);
  bool all_finite() const;
};

// Activations recorded by forward_batch. Columns are samples.
struct Tape {
  std::vector<Matrix> inputs;        // input to layer i
  std::vector<Matrix> preactivation; // W_i x + b_i
  Matrix output;
};

Matrix forward_batch(const Mlp& net, const Matrix& inputs, Tape* tape = nullptr);

struct BackwardResult {
  GradientSet grads;
  Matrix input_grad;
};

// Reverse-mode gradient of sum over samples of (output . output_grad).
BackwardResult backward_batch(const Mlp& net, const Tape& tape, const Matrix& output_grad);

Vector forward(const Mlp& net, std::span<const double> input);
GradientSet backward(const Mlp& net, std::span<const double> input,
                     std::span<const double> output_grad);

// One bias-corrected Adam update; increments adam.step by one.
void adam_step(Mlp& net, const GradientSet& grads, double learning_rate,
               const AdamSettings& settings = {});

// Text checkpoint; see docs/checkpoint_format.md.
void save_checkpoint(const Mlp& net, std::ostream& out);
Mlp load_checkpoint(std::istream& in);
void save_checkpoint(const Mlp& net, const std::string& path);
Mlp load_checkpoint(const std::string& path);

}  // namespace hertune::nn
