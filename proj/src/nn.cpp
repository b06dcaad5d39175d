#include "hertune/nn.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "hertune/error.hpp"

namespace hertune::nn {

namespace {

Matrix apply_activation(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::kRelu:
      return z.cwiseMax(0.0);
    case Activation::kIdentity:
      return z;
    case Activation::kTanh:
      return z.array().tanh().matrix();
  }
  return z;
}

// Multiplies the upstream gradient by the activation derivative, in place.
void apply_activation_grad(Activation a, const Matrix& z, const Matrix& activated,
                           Matrix& grad) {
  switch (a) {
    case Activation::kRelu:
      grad = (z.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::kIdentity:
      break;
    case Activation::kTanh:
      grad.array() *= 1.0 - activated.array().square();
      break;
  }
}

void check_finite_matrix(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw NumericalError("non-finite gradient in " + what);
}

template <typename T>
void adam_update(T& param, T& m, T& v, const T& g, double lr, double correction1, double correction2,
                 const AdamSettings& s) {
  m = s.beta1 * m + (1.0 - s.beta1) * g;
  v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
  param.array() -= lr * (m.array() / correction1) /
                   ((v.array() / correction2).sqrt() + s.epsilon);
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kIdentity:
      return "identity";
    case Activation::kTanh:
      return "tanh";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  throw ContractViolation("unknown activation '" + name + "'");
}

Mlp::Mlp(std::vector<int> sizes, Activation hidden, Activation output)
    : layer_sizes(std::move(sizes)), hidden_activation(hidden), output_activation(output) {
  require(layer_sizes.size() >= 2, "an MLP needs at least an input and an output width");
  for (int s : layer_sizes) require(s > 0, "layer widths must be positive");
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const int rows = layer_sizes[i + 1];
    const int cols = layer_sizes[i];
    weights.push_back(Matrix::Zero(rows, cols));
    biases.push_back(Vector::Zero(rows));
    adam.weight_m.push_back(Matrix::Zero(rows, cols));
    adam.weight_v.push_back(Matrix::Zero(rows, cols));
    adam.bias_m.push_back(Vector::Zero(rows));
    adam.bias_v.push_back(Vector::Zero(rows));
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) n += weights[i].size() + biases[i].size();
  return n;
}

void Mlp::check_shapes() const {
  require(layer_sizes.size() >= 2, "an MLP needs at least an input and an output width");
  const std::size_t layers = layer_sizes.size() - 1;
  require(weights.size() == layers && biases.size() == layers, "layer count mismatch");
  require(adam.weight_m.size() == layers && adam.weight_v.size() == layers &&
              adam.bias_m.size() == layers && adam.bias_v.size() == layers,
          "optimizer state layer count mismatch");
  for (std::size_t i = 0; i < layers; ++i) {
    const auto rows = layer_sizes[i + 1];
    const auto cols = layer_sizes[i];
    auto ok = [&](const Matrix& m) { return m.rows() == rows && m.cols() == cols; };
    require(ok(weights[i]) && ok(adam.weight_m[i]) && ok(adam.weight_v[i]),
            fmt::format("weight shape mismatch at layer {}", i));
    require(biases[i].size() == rows && adam.bias_m[i].size() == rows &&
                adam.bias_v[i].size() == rows,
            fmt::format("bias shape mismatch at layer {}", i));
  }
}

void initialize_uniform(Mlp& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(net.layer_sizes[i]));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index c = 0; c < net.weights[i].cols(); ++c)
      for (Eigen::Index r = 0; r < net.weights[i].rows(); ++r) net.weights[i](r, c) = dist(rng);
    for (Eigen::Index r = 0; r < net.biases[i].size(); ++r) net.biases[i](r) = dist(rng);
  }
}

GradientSet GradientSet::zeros_like(const Mlp& net) {
  GradientSet g;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    g.weights.push_back(Matrix::Zero(net.weights[i].rows(), net.weights[i].cols()));
    g.biases.push_back(Vector::Zero(net.biases[i].size()));
  }
  return g;
}

bool GradientSet::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

Matrix forward_batch(const Mlp& net, const Matrix& inputs, Tape* tape) {
  require(inputs.rows() == net.input_size(),
          fmt::format("input width {} does not match network input {}", inputs.rows(),
                      net.input_size()));
  if (tape) {
    tape->inputs.clear();
    tape->preactivation.clear();
  }
  Matrix x = inputs;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    Matrix z = net.weights[i] * x;
    z.colwise() += net.biases[i];
    const bool last = i + 1 == net.num_layers();
    Matrix y = apply_activation(last ? net.output_activation : net.hidden_activation, z);
    if (tape) {
      tape->inputs.push_back(std::move(x));
      tape->preactivation.push_back(std::move(z));
    }
    x = std::move(y);
  }
  if (tape) tape->output = x;
  return x;
}

BackwardResult backward_batch(const Mlp& net, const Tape& tape, const Matrix& output_grad) {
  require(tape.inputs.size() == net.num_layers(), "tape does not belong to this network");
  require(output_grad.rows() == net.output_size() && output_grad.cols() == tape.output.cols(),
          fmt::format("output gradient shape {}x{} does not match network output {}x{}",
                      output_grad.rows(), output_grad.cols(), net.output_size(),
                      tape.output.cols()));
  BackwardResult result;
  result.grads.weights.resize(net.num_layers());
  result.grads.biases.resize(net.num_layers());

  Matrix grad = output_grad;
  for (std::size_t k = net.num_layers(); k-- > 0;) {
    const bool last = k + 1 == net.num_layers();
    const Matrix& activated = last ? tape.output : tape.inputs[k + 1];
    apply_activation_grad(last ? net.output_activation : net.hidden_activation,
                          tape.preactivation[k], activated, grad);
    result.grads.weights[k] = grad * tape.inputs[k].transpose();
    result.grads.biases[k] = grad.rowwise().sum();
    grad = net.weights[k].transpose() * grad;
  }
  result.input_grad = std::move(grad);
  return result;
}

Vector forward(const Mlp& net, std::span<const double> input) {
  require(static_cast<int>(input.size()) == net.input_size(),
          fmt::format("input length {} does not match network input {}", input.size(),
                      net.input_size()));
  Matrix x = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  return forward_batch(net, x).col(0);
}

GradientSet backward(const Mlp& net, std::span<const double> input,
                     std::span<const double> output_grad) {
  require(static_cast<int>(input.size()) == net.input_size(),
          fmt::format("input length {} does not match network input {}", input.size(),
                      net.input_size()));
  require(static_cast<int>(output_grad.size()) == net.output_size(),
          fmt::format("output gradient length {} does not match network output {}",
                      output_grad.size(), net.output_size()));
  Tape tape;
  Matrix x = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  forward_batch(net, x, &tape);
  Matrix g =
      Eigen::Map<const Vector>(output_grad.data(), static_cast<Eigen::Index>(output_grad.size()));
  return backward_batch(net, tape, g).grads;
}

void adam_step(Mlp& net, const GradientSet& grads, double learning_rate,
               const AdamSettings& settings) {
  require(grads.weights.size() == net.num_layers() && grads.biases.size() == net.num_layers(),
          "gradient layer count does not match network");
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    require(grads.weights[i].rows() == net.weights[i].rows() &&
                grads.weights[i].cols() == net.weights[i].cols() &&
                grads.biases[i].size() == net.biases[i].size(),
            fmt::format("gradient shape mismatch at layer {}", i));
    check_finite_matrix(grads.weights[i], fmt::format("weights of layer {}", i));
    check_finite_matrix(grads.biases[i], fmt::format("biases of layer {}", i));
  }
  const std::int64_t t = ++net.adam.step;
  const double c1 = 1.0 - std::pow(settings.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(settings.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    adam_update(net.weights[i], net.adam.weight_m[i], net.adam.weight_v[i], grads.weights[i],
                learning_rate, c1, c2, settings);
    adam_update(net.biases[i], net.adam.bias_m[i], net.adam.bias_v[i], grads.biases[i],
                learning_rate, c1, c2, settings);
  }
}

// Checkpoint I/O. Values are written as C99 hex floats so a save/load
// round trip is bit exact.

namespace {

constexpr const char* kMagic = "hertune-mlp";
constexpr int kFormatVersion = 1;

template <typename M>
void write_block(std::ostream& out, const std::string& tag, std::size_t layer, const M& m) {
  fmt::print(out, "{} {} {} {}\n", tag, layer, m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      fmt::print(out, "{}{:a}", c == 0 ? "" : " ", m(r, c));
    out << '\n';
  }
}

std::string expect_token(std::istream& in, const std::string& what) {
  std::string token;
  if (!(in >> token)) throw ContractViolation("checkpoint truncated while reading " + what);
  return token;
}

void expect_literal(std::istream& in, const std::string& literal) {
  const auto token = expect_token(in, literal);
  if (token != literal)
    throw ContractViolation("checkpoint: expected '" + literal + "', found '" + token + "'");
}

long read_integer(std::istream& in, const std::string& what) {
  const auto token = expect_token(in, what);
  char* end = nullptr;
  const long v = std::strtol(token.c_str(), &end, 10);
  if (*end != '\0') throw ContractViolation("checkpoint: bad integer for " + what);
  return v;
}

double read_real(std::istream& in) {
  const auto token = expect_token(in, "value");
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (*end != '\0') throw ContractViolation("checkpoint: bad real '" + token + "'");
  return v;
}

template <typename M>
void read_block(std::istream& in, const std::string& tag, std::size_t layer, M& m) {
  expect_literal(in, tag);
  if (read_integer(in, tag) != static_cast<long>(layer) ||
      read_integer(in, tag) != static_cast<long>(m.rows()) ||
      read_integer(in, tag) != static_cast<long>(m.cols()))
    throw ContractViolation(fmt::format("checkpoint: {} block for layer {} has wrong shape", tag,
                                        layer));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_real(in);
}

}  // namespace

void save_checkpoint(const Mlp& net, std::ostream& out) {
  net.check_shapes();
  fmt::print(out, "{} {}\n", kMagic, kFormatVersion);
  fmt::print(out, "layer_sizes {}", net.layer_sizes.size());
  for (int s : net.layer_sizes) fmt::print(out, " {}", s);
  out << '\n';
  fmt::print(out, "hidden_activation {}\n", to_string(net.hidden_activation));
  fmt::print(out, "output_activation {}\n", to_string(net.output_activation));
  fmt::print(out, "adam_step {}\n", net.adam.step);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    write_block(out, "weight", i, net.weights[i]);
    write_block(out, "bias", i, net.biases[i]);
    write_block(out, "weight_m", i, net.adam.weight_m[i]);
    write_block(out, "weight_v", i, net.adam.weight_v[i]);
    write_block(out, "bias_m", i, net.adam.bias_m[i]);
    write_block(out, "bias_v", i, net.adam.bias_v[i]);
  }
  fmt::print(out, "end\n");
}

Mlp load_checkpoint(std::istream& in) {
  expect_literal(in, kMagic);
  const long version = read_integer(in, "format version");
  if (version != kFormatVersion)
    throw ContractViolation(fmt::format("unsupported checkpoint version {}", version));
  expect_literal(in, "layer_sizes");
  const long count = read_integer(in, "layer count");
  if (count < 2 || count > 1024) throw ContractViolation("checkpoint: bad layer count");
  std::vector<int> sizes;
  for (long i = 0; i < count; ++i) sizes.push_back(static_cast<int>(read_integer(in, "width")));
  expect_literal(in, "hidden_activation");
  const auto hidden = activation_from_string(expect_token(in, "hidden activation"));
  expect_literal(in, "output_activation");
  const auto output = activation_from_string(expect_token(in, "output activation"));
  Mlp net(sizes, hidden, output);
  expect_literal(in, "adam_step");
  net.adam.step = read_integer(in, "adam step");
  if (net.adam.step < 0) throw ContractViolation("checkpoint: negative optimizer step");
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    read_block(in, "weight", i, net.weights[i]);
    read_block(in, "bias", i, net.biases[i]);
    read_block(in, "weight_m", i, net.adam.weight_m[i]);
    read_block(in, "weight_v", i, net.adam.weight_v[i]);
    read_block(in, "bias_m", i, net.adam.bias_m[i]);
    read_block(in, "bias_v", i, net.adam.bias_v[i]);
  }
  expect_literal(in, "end");
  return net;
}

void save_checkpoint(const Mlp& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  save_checkpoint(net, out);
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Mlp load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return load_checkpoint(in);
}

}  // namespace hertune::nn
