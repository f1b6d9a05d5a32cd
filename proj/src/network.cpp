#include "pcm/network.hpp"

#include <cmath>
#include <random>
#include <string>

#include "pcm/error.hpp"
#include "pcm/rng.hpp"

namespace pcm {
namespace {

std::string layer_name(const Network& net, std::size_t k) {
  const bool has_kernel = net.mode == Mode::kPreMask;
  if (has_kernel && k == 0) return "layer 0 (input kernel)";
  const std::size_t h = has_kernel ? k - 1 : k;
  if (h < net.hidden.size()) {
    return "layer " + std::to_string(k) + " (hidden " + std::to_string(h) + ")";
  }
  return "layer " + std::to_string(k) + " (output)";
}

// Layers in evaluation order.
std::vector<const DenseLayer*> layer_sequence(const Network& net) {
  std::vector<const DenseLayer*> seq;
  seq.reserve(net.hidden.size() + 2);
  if (net.mode == Mode::kPreMask) seq.push_back(&*net.input_kernel);
  for (const auto& layer : net.hidden) seq.push_back(&layer);
  seq.push_back(&net.output);
  return seq;
}

void apply_activation(Matrix& z, const Activation& act) {
  if (act.kind == Activation::Kind::kLeakyRelu) {
    const double slope = act.slope;
    z = z.unaryExpr([slope](double v) { return leaky_relu(v, slope); });
  }
}

void check_batch(const Network& net, const Matrix& batch) {
  if (static_cast<std::size_t>(batch.cols()) != net.input_dim()) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                     std::to_string(net.input_dim()));
  }
}

Matrix masked_input(const Network& net, const Matrix& batch) {
  Matrix a = batch;
  const auto& bits = net.mask->bits;
  for (Index j = 0; j < a.cols(); ++j) {
    if (!bits[static_cast<std::size_t>(j)]) a.col(j).setZero();
  }
  return a;
}

// Runs the layer stack, keeping every layer's input and pre-activation when
// `trace` is given. Returns the final (N x 1) activation.
struct Trace {
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre;
};

Matrix run_layers(const Network& net, const Matrix& batch, Trace* trace) {
  check_batch(net, batch);
  Matrix a = net.mode == Mode::kMask ? masked_input(net, batch) : batch;
  const auto seq = layer_sequence(net);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const DenseLayer& layer = *seq[k];
    Matrix z = a * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    if (trace) {
      trace->inputs.push_back(std::move(a));
      trace->pre.push_back(z);
    }
    apply_activation(z, layer.activation);
    if (!z.allFinite()) throw NumericError("non-finite activation at " + layer_name(net, k));
    a = std::move(z);
  }
  return a;
}

void check_targets(const Matrix& batch, const Vector& targets) {
  if (batch.rows() != targets.size()) {
    throw ShapeError("batch has " + std::to_string(batch.rows()) + " rows but " +
                     std::to_string(targets.size()) + " targets");
  }
  if (batch.rows() == 0) throw ShapeError("empty batch");
}

void glorot_fill(DenseLayer& layer, Rng& rng) {
  const double fan = static_cast<double>(layer.weights.rows() + layer.weights.cols());
  const double limit = std::sqrt(6.0 / fan);
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = dist(rng);
  layer.bias.setZero();
}

DenseLayer make_layer(std::size_t in, std::size_t out, Activation act) {
  DenseLayer layer;
  layer.weights = Matrix::Zero(static_cast<Index>(out), static_cast<Index>(in));
  layer.bias = Vector::Zero(static_cast<Index>(out));
  layer.activation = act;
  return layer;
}

void validate_layer(const DenseLayer& layer, const std::string& name) {
  if (layer.bias.size() != layer.weights.rows()) {
    throw ShapeError(name + ": bias length does not match weight rows");
  }
  if (layer.activation.kind == Activation::Kind::kLeakyRelu &&
      !(layer.activation.slope > 0.0 && layer.activation.slope < 1.0)) {
    throw UsageError(name + ": leaky slope must lie in (0, 1)");
  }
  if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
    throw NumericError(name + ": non-finite parameter");
  }
}

}  // namespace

Activation Activation::leaky(double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw UsageError("leaky slope must lie in (0, 1)");
  return Activation{Kind::kLeakyRelu, slope};
}

std::string to_string(Mode mode) { return mode == Mode::kPreMask ? "premask" : "mask"; }

std::size_t Network::input_dim() const {
  if (!hidden.empty()) return static_cast<std::size_t>(hidden.front().inputs());
  return static_cast<std::size_t>(output.inputs());
}

std::size_t Network::parameter_count() const {
  std::size_t n = output.parameter_count();
  if (input_kernel) n += input_kernel->parameter_count();
  for (const auto& layer : hidden) n += layer.parameter_count();
  return n;
}

void Network::validate() const {
  const std::size_t d = input_dim();
  if (mode == Mode::kPreMask) {
    if (!input_kernel || mask) throw UsageError("pre-mask network needs an input kernel and no mask");
    if (input_kernel->weights.rows() != input_kernel->weights.cols() ||
        static_cast<std::size_t>(input_kernel->weights.rows()) != d) {
      throw ShapeError("input kernel must be square d x d");
    }
    if (input_kernel->activation.kind != Activation::Kind::kLinear) {
      throw UsageError("input kernel must be linear");
    }
  } else {
    if (input_kernel || !mask) throw UsageError("mask network needs a mask and no input kernel");
    if (mask->size() != d) throw ShapeError("mask length does not match input dimension");
  }
  if (output.outputs() != 1) throw ShapeError("output layer must have a single unit");
  if (output.activation.kind != Activation::Kind::kLinear) throw UsageError("output layer must be linear");

  Index prev = static_cast<Index>(d);
  const auto seq = layer_sequence(*this);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const std::string name = layer_name(*this, k);
    validate_layer(*seq[k], name);
    if (seq[k]->inputs() != prev) throw ShapeError(name + ": input width does not chain");
    prev = seq[k]->outputs();
  }
}

std::vector<std::span<double>> Network::parameter_blocks() {
  std::vector<std::span<double>> blocks;
  auto add = [&blocks](DenseLayer& layer) {
    blocks.emplace_back(layer.weights.data(), static_cast<std::size_t>(layer.weights.size()));
    blocks.emplace_back(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  };
  if (input_kernel) add(*input_kernel);
  for (auto& layer : hidden) add(layer);
  add(output);
  return blocks;
}

std::vector<std::span<const double>> Network::parameter_blocks() const {
  auto blocks = const_cast<Network*>(this)->parameter_blocks();
  return {blocks.begin(), blocks.end()};
}

Architecture Architecture::reference_default(std::size_t inputs) {
  return Architecture{inputs, std::vector<std::size_t>(9, 256), 0.3};
}

void Architecture::validate() const {
  if (inputs == 0) throw UsageError("architecture needs at least one input");
  for (std::size_t w : hidden_widths) {
    if (w == 0) throw UsageError("hidden layer width must be >= 1");
  }
  if (!(negative_slope > 0.0 && negative_slope < 1.0)) {
    throw UsageError("leaky slope must lie in (0, 1)");
  }
}

Architecture architecture_of(const Network& net) {
  Architecture arch;
  arch.inputs = net.input_dim();
  for (const auto& layer : net.hidden) {
    arch.hidden_widths.push_back(static_cast<std::size_t>(layer.outputs()));
    if (layer.activation.kind == Activation::Kind::kLeakyRelu) arch.negative_slope = layer.activation.slope;
  }
  return arch;
}

namespace {

Network make_network(const Architecture& arch, std::uint64_t seed, bool with_kernel) {
  arch.validate();
  Rng rng(derive_seed(seed, stream::kInit));
  Network net;
  net.mode = with_kernel ? Mode::kPreMask : Mode::kMask;
  if (with_kernel) {
    net.input_kernel = make_layer(arch.inputs, arch.inputs, Activation::linear());
    glorot_fill(*net.input_kernel, rng);
  }
  std::size_t prev = arch.inputs;
  for (std::size_t w : arch.hidden_widths) {
    net.hidden.push_back(make_layer(prev, w, Activation::leaky(arch.negative_slope)));
    glorot_fill(net.hidden.back(), rng);
    prev = w;
  }
  net.output = make_layer(prev, 1, Activation::linear());
  glorot_fill(net.output, rng);
  return net;
}

}  // namespace

Network make_premask_network(const Architecture& arch, std::uint64_t seed) {
  return make_network(arch, seed, true);
}

Network make_mask_network(const Architecture& arch, const BinaryMask& mask, std::uint64_t seed) {
  if (mask.size() != arch.inputs) throw ShapeError("mask length does not match input dimension");
  Network net = make_network(arch, seed, false);
  net.mask = mask;
  return net;
}

Network to_mask_network(const Network& premask, BinaryMask mask) {
  if (premask.mode != Mode::kPreMask) throw UsageError("warm start requires a pre-mask network");
  if (mask.size() != premask.input_dim()) throw ShapeError("mask length does not match input dimension");
  Network net;
  net.mode = Mode::kMask;
  net.mask = std::move(mask);
  net.hidden = premask.hidden;
  net.output = premask.output;
  return net;
}

Vector forward(const Network& net, const Matrix& batch) {
  Matrix out = run_layers(net, batch, nullptr);
  return out.col(0);
}

Vector predict(const Network& net, const Matrix& inputs, std::size_t chunk) {
  if (chunk == 0) throw UsageError("evaluation batch size must be >= 1");
  check_batch(net, inputs);
  Vector out(inputs.rows());
  const auto step = static_cast<Index>(chunk);
  for (Index start = 0; start < inputs.rows(); start += step) {
    const Index n = std::min(step, inputs.rows() - start);
    out.segment(start, n) = forward(net, inputs.middleRows(start, n));
  }
  return out;
}

double input_kernel_penalty(const Network& net, double lambda) {
  if (!net.input_kernel) return 0.0;
  const double d = static_cast<double>(net.input_kernel->weights.rows());
  return lambda * net.input_kernel->weights.cwiseAbs().sum() / (d * d);
}

LossBreakdown loss_premask(const Network& net, const Matrix& batch, const Vector& targets,
                           double lambda) {
  if (net.mode != Mode::kPreMask) throw UsageError("pre-mask loss requires a pre-mask network");
  if (lambda < 0.0) throw UsageError("lambda must be >= 0");
  check_targets(batch, targets);
  LossBreakdown out;
  out.mse = (forward(net, batch) - targets).squaredNorm() / static_cast<double>(targets.size());
  out.l1_penalty = input_kernel_penalty(net, lambda);
  out.total = out.mse + out.l1_penalty;
  return out;
}

LossBreakdown loss_mask(const Network& net, const Matrix& batch, const Vector& targets) {
  if (net.mode != Mode::kMask) throw UsageError("mask loss requires a mask network");
  check_targets(batch, targets);
  LossBreakdown out;
  out.mse = (forward(net, batch) - targets).squaredNorm() / static_cast<double>(targets.size());
  out.total = out.mse;
  return out;
}

LossBreakdown loss(const Network& net, const Matrix& batch, const Vector& targets, double lambda) {
  if (net.mode == Mode::kPreMask) return loss_premask(net, batch, targets, lambda);
  if (lambda != 0.0) throw UsageError("lambda must be 0 for a mask network");
  return loss_mask(net, batch, targets);
}

Gradients Gradients::zeros_like(const Network& net) {
  auto zeros = [](const DenseLayer& layer) {
    return LayerGradient{Matrix::Zero(layer.weights.rows(), layer.weights.cols()),
                         Vector::Zero(layer.bias.size())};
  };
  Gradients g;
  if (net.input_kernel) g.input_kernel = zeros(*net.input_kernel);
  for (const auto& layer : net.hidden) g.hidden.push_back(zeros(layer));
  g.output = zeros(net.output);
  return g;
}

std::vector<std::span<const double>> Gradients::blocks() const {
  std::vector<std::span<const double>> out;
  auto add = [&out](const LayerGradient& g) {
    out.emplace_back(g.weights.data(), static_cast<std::size_t>(g.weights.size()));
    out.emplace_back(g.bias.data(), static_cast<std::size_t>(g.bias.size()));
  };
  if (input_kernel) add(*input_kernel);
  for (const auto& g : hidden) add(g);
  add(output);
  return out;
}

BackwardResult backward(const Network& net, const Matrix& batch, const Vector& targets,
                        double lambda) {
  if (lambda < 0.0) throw UsageError("lambda must be >= 0");
  if (net.mode == Mode::kMask && lambda != 0.0) throw UsageError("lambda must be 0 for a mask network");
  check_targets(batch, targets);

  Trace trace;
  const Matrix out = run_layers(net, batch, &trace);
  const double n = static_cast<double>(targets.size());
  const Vector residual = out.col(0) - targets;

  BackwardResult result;
  result.loss.mse = residual.squaredNorm() / n;
  result.loss.l1_penalty = input_kernel_penalty(net, lambda);
  result.loss.total = result.loss.mse + result.loss.l1_penalty;

  const auto seq = layer_sequence(net);
  std::vector<LayerGradient> grads(seq.size());
  Matrix delta = (2.0 / n) * residual;  // dL/d(output activation), N x 1
  for (std::size_t k = seq.size(); k-- > 0;) {
    const DenseLayer& layer = *seq[k];
    if (layer.activation.kind == Activation::Kind::kLeakyRelu) {
      const double slope = layer.activation.slope;
      delta.array() *= trace.pre[k].array().unaryExpr(
          [slope](double v) { return v >= 0.0 ? 1.0 : slope; });
    }
    grads[k].weights = delta.transpose() * trace.inputs[k];
    grads[k].bias = delta.colwise().sum().transpose();
    if (k > 0) delta = delta * layer.weights;
  }

  std::size_t k = 0;
  if (net.mode == Mode::kPreMask) {
    result.gradients.input_kernel = std::move(grads[k++]);
    if (lambda > 0.0) {
      const auto& w = net.input_kernel->weights;
      const double d = static_cast<double>(w.rows());
      const double scale = lambda / (d * d);
      result.gradients.input_kernel->weights += w.unaryExpr([scale](double v) {
        return v > 0.0 ? scale : (v < 0.0 ? -scale : 0.0);
      });
    }
  }
  for (std::size_t h = 0; h < net.hidden.size(); ++h) result.gradients.hidden.push_back(std::move(grads[k++]));
  result.gradients.output = std::move(grads[k]);
  return result;
}

}  // namespace pcm
