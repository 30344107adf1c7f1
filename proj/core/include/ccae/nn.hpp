#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace ccae {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint8_t { Linear = 0, Relu = 1, Tanh = 2 };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view text);

/// y = act(x W^T + b). Weights are (out x in).
struct DenseLayer {
  Matrix weights;
  Vector bias;
  Activation activation = Activation::Linear;

  Eigen::Index in_width() const { return weights.cols(); }
  Eigen::Index out_width() const { return weights.rows(); }
};

/// Autoencoder. The last encoder layer produces the bottleneck representation
/// and is linear; the decoder maps it back to the input width.
struct Network {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;

  Eigen::Index input_width() const { return encoder.front().in_width(); }
  Eigen::Index bottleneck_width() const { return encoder.back().out_width(); }
  std::size_t parameter_count() const;

  /// Throws std::invalid_argument on incompatible layer shapes.
  void validate() const;
};

/// Glorot-uniform weights, zero biases. `widths` runs input -> bottleneck ->
/// output, e.g. {32, 500, 100, 50, 20, 2, 20, 50, 100, 500, 32}; the bottleneck
/// is the first minimum. Hidden layers use `hidden`; the bottleneck and output
/// layers are linear.
Network init_network(std::span<const std::size_t> widths, Activation hidden, std::uint64_t seed);

/// Symmetric widths for the given hidden stack: {D, h..., D', reversed h..., D}.
std::vector<std::size_t> autoencoder_widths(std::size_t input, std::span<const std::size_t> hidden,
                                            std::size_t bottleneck);

struct ForwardCache {
  // For each layer (encoder then decoder): its input and its pre-activation.
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre_activations;
};

struct ForwardResult {
  Matrix reconstruction;
  Matrix bottleneck;
  ForwardCache cache;
};

/// Rows of `batch` are datapoints. Throws on width mismatch or NaN input.
ForwardResult forward(const Network& net, const Matrix& batch);

/// Encoder only; `cache` (optional) receives the encoder layers' state.
Matrix encode(const Network& net, const Matrix& batch, ForwardCache* cache = nullptr);

struct LayerGradient {
  Matrix weights;
  Vector bias;
};

struct Gradients {
  std::vector<LayerGradient> encoder;
  std::vector<LayerGradient> decoder;

  static Gradients zeros_like(const Network& net);
  Gradients& operator+=(const Gradients& other);
};

struct LossAndGradients {
  double loss = 0.0;
  Gradients gradients;
};

/// Mean over the batch of ||x - f_d(f_e(x))||^2 and its parameter gradients.
/// `external_bottleneck_grads` (B x D') is added to the bottleneck's upstream
/// gradient, so it reaches the encoder only.
LossAndGradients loss_and_gradients(const Network& net, const Matrix& batch,
                                    const Matrix* external_bottleneck_grads = nullptr);

/// Encoder gradients of sum_n <g_n, f_e(x_n)> for bottleneck gradients g
/// (rows aligned with `batch`). Decoder gradients are zero.
Gradients encoder_gradients(const Network& net, const Matrix& batch,
                            const Matrix& bottleneck_grads);

// --- optimizers -----------------------------------------------------------

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

void sgd_update(std::span<double> params, std::span<const double> grads, double lr);

/// One bias-corrected Adam update; `step` is 1-based.
void adam_update(std::span<double> params, std::span<const double> grads,
                 std::span<double> first_moment, std::span<double> second_moment,
                 std::uint64_t step, const OptimizerConfig& config);

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  std::uint64_t step = 0;
  Gradients first_moment;
  Gradients second_moment;

  static OptimizerState create(const Network& net, OptimizerKind kind);
};

/// Throws std::invalid_argument when `state` was created for another
/// optimizer kind or network shape.
void optimizer_step(Network& net, const Gradients& grads, OptimizerState& state,
                    const OptimizerConfig& config);

}  // namespace ccae
