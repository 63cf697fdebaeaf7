#include "edm/neural.hpp"

#include <cmath>
#include <random>
#include <string>

#include "edm/errors.hpp"

namespace edm {
namespace {

struct ForwardCache {
  std::vector<Matrix> inputs;  // input of each layer, rows are samples
  std::vector<Matrix> pre;     // pre-activation of each layer
};

bool activates(std::size_t layer, std::size_t count, bool relu_last) {
  return layer + 1 < count || relu_last;
}

Matrix forward_impl(const MlpParams& net, const Matrix& x, bool relu_last, ForwardCache* cache) {
  if (static_cast<std::size_t>(x.cols()) != net.input_dim()) {
    throw InputError("input has " + std::to_string(x.cols()) + " features, network expects " +
                     std::to_string(net.input_dim()));
  }
  const auto& layers = net.layers();
  Matrix a = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = a * layers[l].weights.transpose();
    z.rowwise() += layers[l].bias.transpose();
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->pre.push_back(z);
    }
    a = activates(l, layers.size(), relu_last) ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return a;
}

// Backpropagates d(loss)/d(output) through the network, writing the
// parameter gradient into `flat` and optionally d(loss)/d(input).
void backward_impl(const MlpParams& net, const ForwardCache& cache, Matrix delta, bool relu_last,
                   Eigen::Ref<Vector> flat, Matrix* d_input) {
  const auto& layers = net.layers();
  std::vector<std::size_t> offsets(layers.size());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offsets[l] = offset;
    offset += static_cast<std::size_t>(layers[l].weights.size() + layers[l].bias.size());
  }

  for (std::size_t l = layers.size(); l-- > 0;) {
    if (activates(l, layers.size(), relu_last)) {
      delta = delta.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
    }
    const Matrix d_w = delta.transpose() * cache.inputs[l];
    const Vector d_b = delta.colwise().sum().transpose();
    auto pos = static_cast<Eigen::Index>(offsets[l]);
    for (Eigen::Index r = 0; r < d_w.rows(); ++r) {
      for (Eigen::Index c = 0; c < d_w.cols(); ++c) flat(pos++) = d_w(r, c);
    }
    for (Eigen::Index r = 0; r < d_b.size(); ++r) flat(pos++) = d_b(r);
    if (l > 0 || d_input) delta = delta * layers[l].weights;
  }
  if (d_input) *d_input = std::move(delta);
}

void check_labels(const std::vector<int>& labels, std::size_t rows, std::size_t classes,
                  const char* which) {
  if (labels.size() != rows) {
    throw InputError(std::string(which) + " count does not match the number of rows");
  }
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] < 0 || static_cast<std::size_t>(labels[j]) >= classes) {
      throw InputError(std::string(which) + " of sample " + std::to_string(j) +
                       " is outside [0, " + std::to_string(classes) + ")");
    }
  }
}

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string("non-finite ") + what, 0);
}

// Per-row cross-entropy and its gradient w.r.t. the logits (softmax - onehot).
std::pair<Vector, Matrix> softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  Vector losses(logits.rows());
  Matrix grad(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double peak = logits.row(r).maxCoeff();
    const Eigen::RowVectorXd shifted = logits.row(r).array() - peak;
    const Eigen::RowVectorXd e = shifted.array().exp();
    const double total = e.sum();
    const int y = labels[static_cast<std::size_t>(r)];
    losses(r) = std::log(total) - shifted(y);
    grad.row(r) = e / total;
    grad(r, y) -= 1.0;
  }
  return {std::move(losses), std::move(grad)};
}

}  // namespace

MlpParams::MlpParams(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw InputError("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weights.rows() == 0 || layer.weights.cols() == 0) {
      throw InputError("layer " + std::to_string(l) + " has an empty weight matrix");
    }
    if (layer.bias.size() != layer.weights.rows()) {
      throw InputError("layer " + std::to_string(l) + " bias length does not match its outputs");
    }
    if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows()) {
      throw InputError("layer " + std::to_string(l) + " input size does not match layer " +
                       std::to_string(l - 1) + " output size");
    }
  }
}

MlpParams MlpParams::glorot(std::span<const std::size_t> sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw InputError("network sizes need an input and an output width");
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(sizes[l]);
    const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) w(r, c) = dist(rng);
    }
    layers.push_back(DenseLayer{std::move(w), Vector::Zero(out)});
  }
  return MlpParams(std::move(layers));
}

MlpParams MlpParams::zeros(std::span<const std::size_t> sizes) {
  if (sizes.size() < 2) throw InputError("network sizes need an input and an output width");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(sizes[l]);
    const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
    layers.push_back(DenseLayer{Matrix::Zero(out, in), Vector::Zero(out)});
  }
  return MlpParams(std::move(layers));
}

std::size_t MlpParams::input_dim() const noexcept {
  return static_cast<std::size_t>(layers_.front().weights.cols());
}

std::size_t MlpParams::output_dim() const noexcept {
  return static_cast<std::size_t>(layers_.back().weights.rows());
}

std::size_t MlpParams::num_params() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  }
  return n;
}

Vector MlpParams::flatten() const {
  Vector flat(static_cast<Eigen::Index>(num_params()));
  Eigen::Index pos = 0;
  for (const auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) flat(pos++) = layer.weights(r, c);
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) flat(pos++) = layer.bias(r);
  }
  return flat;
}

void MlpParams::assign(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != num_params()) {
    throw InputError("flat parameter vector has length " + std::to_string(flat.size()) +
                     ", network has " + std::to_string(num_params()));
  }
  Eigen::Index pos = 0;
  for (auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = flat(pos++);
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = flat(pos++);
  }
}

MlpParams MlpParams::with_params(const Vector& flat) const {
  MlpParams copy = *this;
  copy.assign(flat);
  return copy;
}

ClassLossSpec ClassLossSpec::uniform(std::size_t num_classes) {
  return ClassLossSpec{std::vector<double>(num_classes, 1.0)};
}

TwoHeadMlp::TwoHeadMlp(MlpParams trunk, MlpParams head0, MlpParams head1)
    : trunk_(std::move(trunk)), head0_(std::move(head0)), head1_(std::move(head1)) {
  if (head0_.input_dim() != trunk_.output_dim() || head1_.input_dim() != trunk_.output_dim()) {
    throw InputError("head input size must equal the trunk output size");
  }
}

TwoHeadMlp TwoHeadMlp::glorot(std::span<const std::size_t> trunk_sizes, std::size_t num_classes,
                              std::uint64_t seed) {
  if (trunk_sizes.size() < 2) throw InputError("trunk sizes need an input and an output width");
  const std::size_t head_sizes[] = {trunk_sizes.back(), num_classes};
  std::seed_seq seq{seed, std::uint64_t{0x5eed}};
  std::uint64_t seeds[3];
  seq.generate(seeds, seeds + 3);
  return TwoHeadMlp(MlpParams::glorot(trunk_sizes, seeds[0]), MlpParams::glorot(head_sizes, seeds[1]),
                    MlpParams::glorot(head_sizes, seeds[2]));
}

std::size_t TwoHeadMlp::num_params() const noexcept {
  return trunk_.num_params() + head0_.num_params() + head1_.num_params();
}

Vector TwoHeadMlp::flatten() const {
  Vector flat(static_cast<Eigen::Index>(num_params()));
  const auto t = static_cast<Eigen::Index>(trunk_.num_params());
  const auto h0 = static_cast<Eigen::Index>(head0_.num_params());
  const auto h1 = static_cast<Eigen::Index>(head1_.num_params());
  flat.segment(0, t) = trunk_.flatten();
  flat.segment(t, h0) = head0_.flatten();
  flat.segment(t + h0, h1) = head1_.flatten();
  return flat;
}

void TwoHeadMlp::assign(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != num_params()) {
    throw InputError("flat parameter vector length does not match the two-head network");
  }
  const auto t = static_cast<Eigen::Index>(trunk_.num_params());
  const auto h0 = static_cast<Eigen::Index>(head0_.num_params());
  const auto h1 = static_cast<Eigen::Index>(head1_.num_params());
  trunk_.assign(flat.segment(0, t));
  head0_.assign(flat.segment(t, h0));
  head1_.assign(flat.segment(t + h0, h1));
}

Matrix TwoHeadMlp::logits(const Matrix& features, std::size_t task) const {
  const Matrix hidden = forward_impl(trunk_, features, true, nullptr);
  return forward_impl(head(task), hidden, false, nullptr);
}

Vector forward(const MlpParams& net, const Vector& x) {
  return forward_impl(net, x.transpose(), false, nullptr).row(0).transpose();
}

Matrix forward_batch(const MlpParams& net, const Matrix& features) {
  return forward_impl(net, features, false, nullptr);
}

double cross_entropy(const Vector& logits, int label) {
  if (label < 0 || label >= logits.size()) throw InputError("label out of range");
  const double peak = logits.maxCoeff();
  const double lse = std::log((logits.array() - peak).exp().sum());
  return lse - (logits(label) - peak);
}

ClassLosses per_class_losses(const MlpParams& net, const LabeledBatch& batch,
                             const ClassLossSpec& spec) {
  const std::size_t classes = spec.num_classes();
  if (batch.size() == 0) throw InputError("per_class_losses needs a non-empty batch");
  if (classes == 0) throw InputError("class loss spec has no classes");
  if (net.output_dim() < classes) throw InputError("network has fewer outputs than classes");
  check_labels(batch.labels, static_cast<std::size_t>(batch.features.rows()), classes, "label");

  ForwardCache cache;
  const Matrix logits = forward_impl(net, batch.features, false, &cache);
  check_finite(logits, "logits");
  auto [sample_loss, d_logits] = softmax_cross_entropy(logits, batch.labels);

  ClassLosses out;
  out.losses.assign(classes, 0.0);
  out.gradients.assign(classes, Vector::Zero(static_cast<Eigen::Index>(net.num_params())));
  for (std::size_t c = 0; c < classes; ++c) {
    Matrix masked = Matrix::Zero(d_logits.rows(), d_logits.cols());
    bool any = false;
    for (Eigen::Index r = 0; r < d_logits.rows(); ++r) {
      if (batch.labels[static_cast<std::size_t>(r)] == static_cast<int>(c)) {
        masked.row(r) = d_logits.row(r);
        out.losses[c] += sample_loss(r);
        any = true;
      }
    }
    if (any) backward_impl(net, cache, std::move(masked), false, out.gradients[c], nullptr);
    if (!std::isfinite(out.losses[c]) || !out.gradients[c].allFinite()) {
      throw NumericalError("non-finite loss or gradient for class " + std::to_string(c), 0);
    }
  }
  return out;
}

Vector weighted_total_gradient(std::span<const Vector> per_class, const ClassLossSpec& spec) {
  if (per_class.size() != spec.num_classes()) {
    throw InputError("weighted_total_gradient: " + std::to_string(per_class.size()) +
                     " gradients for " + std::to_string(spec.num_classes()) + " class weights");
  }
  if (per_class.empty()) throw InputError("weighted_total_gradient: no gradients");
  Vector total = Vector::Zero(per_class.front().size());
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    if (per_class[c].size() != total.size()) {
      throw InputError("weighted_total_gradient: gradient lengths differ");
    }
    total += spec.class_weights[c] * per_class[c];
  }
  return total;
}

TwoTaskGradients two_task_gradients(const TwoHeadMlp& net, const LabeledBatch& batch,
                                    std::span<const double, 2> task_scales) {
  const auto rows = static_cast<std::size_t>(batch.features.rows());
  if (rows == 0) throw InputError("two_task_gradients needs a non-empty batch");
  check_labels(batch.labels, rows, net.head(0).output_dim(), "task-1 label");
  check_labels(batch.labels2, rows, net.head(1).output_dim(), "task-2 label");

  ForwardCache trunk_cache;
  const Matrix hidden = forward_impl(net.trunk(), batch.features, true, &trunk_cache);

  TwoTaskGradients out;
  for (std::size_t t = 0; t < 2; ++t) {
    const auto& labels = t == 0 ? batch.labels : batch.labels2;
    ForwardCache head_cache;
    const Matrix logits = forward_impl(net.head(t), hidden, false, &head_cache);
    check_finite(logits, "logits");
    auto [sample_loss, d_logits] = softmax_cross_entropy(logits, labels);
    const double mean = 1.0 / static_cast<double>(rows);
    out.losses[t] = mean * sample_loss.sum();
    d_logits *= mean;

    out.head[t] = Vector::Zero(static_cast<Eigen::Index>(net.head(t).num_params()));
    out.shared[t] = Vector::Zero(static_cast<Eigen::Index>(net.trunk().num_params()));
    Matrix d_hidden;
    backward_impl(net.head(t), head_cache, std::move(d_logits), false, out.head[t], &d_hidden);
    backward_impl(net.trunk(), trunk_cache, std::move(d_hidden), true, out.shared[t], nullptr);
    // scale last so a scaled task gradient is exactly kappa times the plain one
    out.losses[t] *= task_scales[t];
    out.head[t] *= task_scales[t];
    out.shared[t] *= task_scales[t];
    if (!std::isfinite(out.losses[t]) || !out.head[t].allFinite() || !out.shared[t].allFinite()) {
      throw NumericalError("non-finite loss or gradient for task " + std::to_string(t), 0);
    }
  }
  return out;
}

TwoTaskGradients two_task_gradients(const TwoHeadMlp& net, const LabeledBatch& batch) {
  const double ones[2] = {1.0, 1.0};
  return two_task_gradients(net, batch, std::span<const double, 2>(ones));
}

int predict_class(const Vector& logits) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < logits.size(); ++i) {
    if (logits(i) > logits(best)) best = i;
  }
  return static_cast<int>(best);
}

}  // namespace edm
