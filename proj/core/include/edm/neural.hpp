#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "edm/minnorm.hpp"

namespace edm {

/// Fully connected layer z = W x + b, W is d_out x d_in.
struct DenseLayer {
  Matrix weights;
  Vector bias;
};

/// Feedforward network: affine layers with ReLU between them and a linear
/// output layer.
///
/// Flat parameter layout, used by every gradient in this module: layer by
/// layer; within a layer the weight matrix row-major, then the bias.
class MlpParams {
 public:
  /// Throws InputError if the layer list is empty, a bias length differs
  /// from its layer's output size, or consecutive shapes do not chain.
  explicit MlpParams(std::vector<DenseLayer> layers);

  /// Uniform weights in +-sqrt(6 / (d_in + d_out)), zero biases.
  /// `sizes` lists the widths from input to output (at least two entries).
  static MlpParams glorot(std::span<const std::size_t> sizes, std::uint64_t seed);
  static MlpParams zeros(std::span<const std::size_t> sizes);

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::size_t input_dim() const noexcept;
  std::size_t output_dim() const noexcept;
  std::size_t num_params() const noexcept;

  Vector flatten() const;
  /// Overwrites every parameter from a flat vector in the layout above.
  void assign(const Vector& flat);
  /// Copy of this network's shape with parameters taken from `flat`.
  MlpParams with_params(const Vector& flat) const;

 private:
  std::vector<DenseLayer> layers_;
};

/// Rows of `features` are samples; `labels` (and `labels2` for two-task
/// data) give one class per row.
struct LabeledBatch {
  Matrix features;
  std::vector<int> labels;
  std::vector<int> labels2;

  std::size_t size() const noexcept { return labels.size(); }
};

/// Per-class loss multipliers (mu for the minority class in the binary
/// case). The number of classes is class_weights.size().
struct ClassLossSpec {
  std::vector<double> class_weights;

  static ClassLossSpec uniform(std::size_t num_classes);
  std::size_t num_classes() const noexcept { return class_weights.size(); }
};

/// Network with a shared trunk followed by ReLU and one linear head per task.
///
/// Flat layout: trunk parameters, then head 0, then head 1.
class TwoHeadMlp {
 public:
  /// Throws InputError unless both heads take the trunk's output.
  TwoHeadMlp(MlpParams trunk, MlpParams head0, MlpParams head1);

  /// trunk sizes {in, h1, ..., hk}; each head is a single hk -> num_classes layer.
  static TwoHeadMlp glorot(std::span<const std::size_t> trunk_sizes, std::size_t num_classes,
                           std::uint64_t seed);

  const MlpParams& trunk() const noexcept { return trunk_; }
  const MlpParams& head(std::size_t task) const { return task == 0 ? head0_ : head1_; }
  MlpParams& trunk() noexcept { return trunk_; }
  MlpParams& head(std::size_t task) { return task == 0 ? head0_ : head1_; }

  std::size_t num_params() const noexcept;
  /// [0, shared_size()) of the flat vector belongs to the trunk.
  std::size_t shared_size() const noexcept { return trunk_.num_params(); }

  Vector flatten() const;
  void assign(const Vector& flat);

  /// Logits of one task for every row of `features`.
  Matrix logits(const Matrix& features, std::size_t task) const;

 private:
  MlpParams trunk_;
  MlpParams head0_;
  MlpParams head1_;
};

/// Logits for one feature vector. Throws InputError on a dimension mismatch.
Vector forward(const MlpParams& net, const Vector& x);

/// Logits for every row of `features`.
Matrix forward_batch(const MlpParams& net, const Matrix& features);

/// -log softmax(logits)[label], evaluated with the max subtracted.
double cross_entropy(const Vector& logits, int label);

struct ClassLosses {
  std::vector<double> losses;    ///< L_i = sum of cross-entropy over samples of class i
  std::vector<Vector> gradients; ///< dL_i / dtheta in the flat layout
};

/// Per-class summed cross-entropy losses and their separate gradients.
/// An empty class has loss 0 and zero gradient. Throws InputError for an
/// empty batch or out-of-range labels, NumericalError on non-finite values.
ClassLosses per_class_losses(const MlpParams& net, const LabeledBatch& batch,
                             const ClassLossSpec& spec);

/// sum_i class_weights[i] * gradients[i]. Throws InputError on a length
/// mismatch.
Vector weighted_total_gradient(std::span<const Vector> per_class, const ClassLossSpec& spec);

struct TwoTaskGradients {
  double losses[2] = {0.0, 0.0};
  Vector shared[2];  ///< task loss gradient restricted to the trunk
  Vector head[2];    ///< task loss gradient w.r.t. its own head
};

/// Mean cross-entropy of each task over the batch, each multiplied by
/// task_scales[t], backpropagated separately through its head and the
/// trunk.
TwoTaskGradients two_task_gradients(const TwoHeadMlp& net, const LabeledBatch& batch,
                                    std::span<const double, 2> task_scales);
TwoTaskGradients two_task_gradients(const TwoHeadMlp& net, const LabeledBatch& batch);

/// argmax with ties resolved to the smaller index.
int predict_class(const Vector& logits);

}  // namespace edm
