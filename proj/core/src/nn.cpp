#include "ccae/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ccae/random.hpp"

namespace ccae {

namespace {

Matrix activate(const Matrix& z, Activation a) {
  switch (a) {
    case Activation::Linear:
      return z;
    case Activation::Relu:
      return z.cwiseMax(0.0);
    case Activation::Tanh:
      return z.array().tanh().matrix();
  }
  throw std::logic_error("unknown activation");
}

// dL/dz given dL/da and the pre-activation z.
Matrix activation_backward(const Matrix& upstream, const Matrix& z, Activation a) {
  switch (a) {
    case Activation::Linear:
      return upstream;
    case Activation::Relu:
      return (z.array() > 0.0).select(upstream.array(), 0.0).matrix();
    case Activation::Tanh:
      return (upstream.array() * (1.0 - z.array().tanh().square())).matrix();
  }
  throw std::logic_error("unknown activation");
}

Matrix layer_forward(const DenseLayer& layer, const Matrix& input, Matrix* pre_activation) {
  Matrix z = input * layer.weights.transpose();
  z.rowwise() += layer.bias.transpose();
  Matrix out = activate(z, layer.activation);
  if (pre_activation != nullptr) *pre_activation = std::move(z);
  return out;
}

// Backpropagates through `layer`; returns dL/d(input).
Matrix layer_backward(const DenseLayer& layer, const Matrix& input, const Matrix& z,
                      const Matrix& upstream, LayerGradient& grad) {
  const Matrix dz = activation_backward(upstream, z, layer.activation);
  grad.weights.noalias() += dz.transpose() * input;
  grad.bias.noalias() += dz.colwise().sum().transpose();
  return dz * layer.weights;
}

void check_batch(const Network& net, const Matrix& batch) {
  if (batch.cols() != net.input_width())
    throw std::invalid_argument("batch width " + std::to_string(batch.cols()) +
                                " does not match network input width " +
                                std::to_string(net.input_width()));
  if (!batch.allFinite()) throw std::invalid_argument("batch contains NaN or Inf");
}

template <typename T>
std::span<double> as_span(T& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
template <typename T>
std::span<const double> as_cspan(const T& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::Linear:
      return "linear";
    case Activation::Relu:
      return "relu";
    case Activation::Tanh:
      return "tanh";
  }
  return "?";
}

Activation parse_activation(std::string_view text) {
  if (text == "linear") return Activation::Linear;
  if (text == "relu") return Activation::Relu;
  if (text == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation: " + std::string(text));
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto* stack : {&encoder, &decoder})
    for (const auto& l : *stack) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

void Network::validate() const {
  if (encoder.empty() || decoder.empty())
    throw std::invalid_argument("network needs at least one encoder and one decoder layer");
  Eigen::Index width = encoder.front().in_width();
  auto check = [&](const DenseLayer& l, const char* where) {
    if (l.in_width() != width || l.bias.size() != l.out_width())
      throw std::invalid_argument(std::string("incompatible layer shapes in ") + where);
    width = l.out_width();
  };
  for (const auto& l : encoder) check(l, "encoder");
  for (const auto& l : decoder) check(l, "decoder");
  if (width != input_width())
    throw std::invalid_argument("decoder output width must equal encoder input width");
}

std::vector<std::size_t> autoencoder_widths(std::size_t input, std::span<const std::size_t> hidden,
                                            std::size_t bottleneck) {
  std::vector<std::size_t> widths{input};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(bottleneck);
  widths.insert(widths.end(), hidden.rbegin(), hidden.rend());
  widths.push_back(input);
  return widths;
}

Network init_network(std::span<const std::size_t> widths, Activation hidden, std::uint64_t seed) {
  if (widths.size() < 3) throw std::invalid_argument("init_network: need at least 3 widths");
  if (std::find(widths.begin(), widths.end(), std::size_t{0}) != widths.end())
    throw std::invalid_argument("init_network: widths must be positive");
  if (widths.front() != widths.back())
    throw std::invalid_argument("init_network: output width must equal input width");
  const auto bottleneck =
      static_cast<std::size_t>(std::min_element(widths.begin(), widths.end()) - widths.begin());
  if (bottleneck == 0 || bottleneck == widths.size() - 1 || widths[bottleneck] >= widths.front())
    throw std::invalid_argument("init_network: bottleneck must be narrower than the input");

  Rng rng(seed);
  Network net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(widths[l]);
    const auto fan_out = static_cast<Eigen::Index>(widths[l + 1]);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer;
    layer.weights.resize(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r)
      for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = rng.uniform(-bound, bound);
    layer.bias = Vector::Zero(fan_out);
    const bool is_output = (l + 1 == bottleneck) || (l + 2 == widths.size());
    layer.activation = is_output ? Activation::Linear : hidden;
    (l < bottleneck ? net.encoder : net.decoder).push_back(std::move(layer));
  }
  return net;
}

Matrix encode(const Network& net, const Matrix& batch, ForwardCache* cache) {
  check_batch(net, batch);
  Matrix x = batch;
  for (const auto& layer : net.encoder) {
    if (cache != nullptr) {
      cache->inputs.push_back(x);
      cache->pre_activations.emplace_back();
      x = layer_forward(layer, x, &cache->pre_activations.back());
    } else {
      x = layer_forward(layer, x, nullptr);
    }
  }
  return x;
}

ForwardResult forward(const Network& net, const Matrix& batch) {
  ForwardResult result;
  result.bottleneck = encode(net, batch, &result.cache);
  Matrix x = result.bottleneck;
  for (const auto& layer : net.decoder) {
    result.cache.inputs.push_back(x);
    result.cache.pre_activations.emplace_back();
    x = layer_forward(layer, x, &result.cache.pre_activations.back());
  }
  result.reconstruction = std::move(x);
  return result;
}

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  auto fill = [](const std::vector<DenseLayer>& layers, std::vector<LayerGradient>& out) {
    for (const auto& l : layers)
      out.push_back({Matrix::Zero(l.weights.rows(), l.weights.cols()), Vector::Zero(l.bias.size())});
  };
  fill(net.encoder, g.encoder);
  fill(net.decoder, g.decoder);
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.encoder.size() != encoder.size() || other.decoder.size() != decoder.size())
    throw std::invalid_argument("gradient shapes differ");
  for (std::size_t l = 0; l < encoder.size(); ++l) {
    encoder[l].weights += other.encoder[l].weights;
    encoder[l].bias += other.encoder[l].bias;
  }
  for (std::size_t l = 0; l < decoder.size(); ++l) {
    decoder[l].weights += other.decoder[l].weights;
    decoder[l].bias += other.decoder[l].bias;
  }
  return *this;
}

namespace {

void encoder_backward(const Network& net, const ForwardCache& cache, Matrix upstream,
                      Gradients& grads) {
  for (std::size_t l = net.encoder.size(); l-- > 0;) {
    upstream = layer_backward(net.encoder[l], cache.inputs[l], cache.pre_activations[l], upstream,
                              grads.encoder[l]);
  }
}

}  // namespace

LossAndGradients loss_and_gradients(const Network& net, const Matrix& batch,
                                    const Matrix* external_bottleneck_grads) {
  if (external_bottleneck_grads != nullptr &&
      (external_bottleneck_grads->rows() != batch.rows() ||
       external_bottleneck_grads->cols() != net.bottleneck_width()))
    throw std::invalid_argument("external bottleneck gradients do not match the batch");

  const ForwardResult fw = forward(net, batch);
  const double b = static_cast<double>(batch.rows());
  const Matrix residual = fw.reconstruction - batch;

  LossAndGradients out;
  out.loss = residual.squaredNorm() / b;
  out.gradients = Gradients::zeros_like(net);

  Matrix upstream = (2.0 / b) * residual;
  const std::size_t offset = net.encoder.size();
  for (std::size_t l = net.decoder.size(); l-- > 0;) {
    upstream = layer_backward(net.decoder[l], fw.cache.inputs[offset + l],
                              fw.cache.pre_activations[offset + l], upstream,
                              out.gradients.decoder[l]);
  }
  if (external_bottleneck_grads != nullptr) upstream += *external_bottleneck_grads;
  encoder_backward(net, fw.cache, std::move(upstream), out.gradients);
  return out;
}

Gradients encoder_gradients(const Network& net, const Matrix& batch,
                            const Matrix& bottleneck_grads) {
  if (bottleneck_grads.rows() != batch.rows() || bottleneck_grads.cols() != net.bottleneck_width())
    throw std::invalid_argument("bottleneck gradients do not match the batch");
  ForwardCache cache;
  encode(net, batch, &cache);
  Gradients grads = Gradients::zeros_like(net);
  encoder_backward(net, cache, bottleneck_grads, grads);
  return grads;
}

void sgd_update(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != grads.size()) throw std::invalid_argument("sgd_update: size mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) params[k] -= lr * grads[k];
}

void adam_update(std::span<double> params, std::span<const double> grads,
                 std::span<double> first_moment, std::span<double> second_moment,
                 std::uint64_t step, const OptimizerConfig& config) {
  if (params.size() != grads.size() || params.size() != first_moment.size() ||
      params.size() != second_moment.size())
    throw std::invalid_argument("adam_update: size mismatch");
  if (step == 0) throw std::invalid_argument("adam_update: step is 1-based");
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    first_moment[k] = config.beta1 * first_moment[k] + (1.0 - config.beta1) * grads[k];
    second_moment[k] = config.beta2 * second_moment[k] + (1.0 - config.beta2) * grads[k] * grads[k];
    const double m_hat = first_moment[k] / correction1;
    const double v_hat = second_moment[k] / correction2;
    params[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

OptimizerState OptimizerState::create(const Network& net, OptimizerKind kind) {
  OptimizerState s;
  s.kind = kind;
  if (kind == OptimizerKind::Adam) {
    s.first_moment = Gradients::zeros_like(net);
    s.second_moment = Gradients::zeros_like(net);
  }
  return s;
}

void optimizer_step(Network& net, const Gradients& grads, OptimizerState& state,
                    const OptimizerConfig& config) {
  if (state.kind != config.kind)
    throw std::invalid_argument("optimizer state does not match the configured optimizer");
  if (grads.encoder.size() != net.encoder.size() || grads.decoder.size() != net.decoder.size())
    throw std::invalid_argument("gradient shapes differ from the network");
  ++state.step;
  auto update = [&](std::vector<DenseLayer>& layers, const std::vector<LayerGradient>& g,
                    std::vector<LayerGradient>* m, std::vector<LayerGradient>* v) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (config.kind == OptimizerKind::Sgd) {
        sgd_update(as_span(layers[l].weights), as_cspan(g[l].weights), config.learning_rate);
        sgd_update(as_span(layers[l].bias), as_cspan(g[l].bias), config.learning_rate);
      } else {
        adam_update(as_span(layers[l].weights), as_cspan(g[l].weights), as_span((*m)[l].weights),
                    as_span((*v)[l].weights), state.step, config);
        adam_update(as_span(layers[l].bias), as_cspan(g[l].bias), as_span((*m)[l].bias),
                    as_span((*v)[l].bias), state.step, config);
      }
    }
  };
  if (config.kind == OptimizerKind::Adam &&
      (state.first_moment.encoder.size() != net.encoder.size() ||
       state.first_moment.decoder.size() != net.decoder.size()))
    throw std::invalid_argument("Adam state was created for another network");
  update(net.encoder, grads.encoder, &state.first_moment.encoder, &state.second_moment.encoder);
  update(net.decoder, grads.decoder, &state.first_moment.decoder, &state.second_moment.decoder);
}

}  // namespace ccae
