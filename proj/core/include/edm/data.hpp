#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edm/minnorm.hpp"
#include "edm/neural.hpp"

namespace edm {

/// In-memory labelled samples. Rows of `features` are samples.
class Dataset {
 public:
  /// `labels2` is empty for single-task data. Class counts are inferred as
  /// max label + 1 unless given. Throws DataError on inconsistent sizes or
  /// labels outside [0, num_classes).
  Dataset(Matrix features, std::vector<int> labels, std::vector<int> labels2 = {},
          std::size_t num_classes = 0, std::size_t num_classes2 = 0);

  const Matrix& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<int>& labels2() const noexcept { return labels2_; }
  bool two_task() const noexcept { return !labels2_.empty(); }

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t num_features() const noexcept { return static_cast<std::size_t>(features_.cols()); }
  std::size_t num_classes() const noexcept { return class_index_sets_.size(); }
  std::size_t num_classes2() const noexcept { return num_classes2_; }

  /// C_i: ascending row indices with label i. Together they partition the rows.
  const std::vector<std::vector<std::size_t>>& class_index_sets() const noexcept {
    return class_index_sets_;
  }

  /// Copies the given rows, in order, into a batch.
  LabeledBatch gather(std::span<const std::size_t> rows) const;
  /// The whole dataset as one batch.
  LabeledBatch as_batch() const;
  /// Dataset restricted to the given rows, keeping the class counts.
  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  Matrix features_;
  std::vector<int> labels_;
  std::vector<int> labels2_;
  std::size_t num_classes2_ = 0;
  std::vector<std::vector<std::size_t>> class_index_sets_;
};

/// Two isotropic unit-variance Gaussian clouds in m dimensions whose means
/// are `separation` apart: label 0 (n_major rows, first) and label 1.
Dataset synth_imbalanced(std::size_t n_major, std::size_t n_minor, std::size_t m,
                         double separation, std::uint64_t seed);

struct TwoTaskShape {
  std::size_t classes = 4;
  double separation = 3.0;
  double noise = 1.0;
};

/// Two independent clustering tasks: label 1 is encoded in features
/// [0, m/2), label 2 in [m/2, m). Throws InputError for m < 2 or n == 0.
Dataset synth_two_task(std::size_t n, std::size_t m, std::uint64_t seed,
                       const TwoTaskShape& shape = {});

/// Reads a comma-separated file with a mandatory header. Every column other
/// than the label column(s) is a feature, in header order. Throws DataError.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 const std::optional<std::string>& second_label_column = std::nullopt);

/// Writes features as f0..f{m-1} followed by `label` (and `label2`), using
/// shortest round-trip decimal formatting.
void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// Per-class proportional split: each class sends round(|C_i| * fraction)
/// rows (at least one, at most |C_i| - 1) to the test side.
std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double test_fraction,
                                             std::uint64_t seed);

struct BatchPlan {
  std::size_t batches_per_epoch = 40;
  std::uint64_t seed = 0;

  /// floor(|C_i| / batches_per_epoch) per class. Throws ConfigError when a
  /// class is smaller than batches_per_epoch.
  std::vector<std::size_t> per_class_batch_sizes(const Dataset& ds) const;
};

/// Yields, per epoch, `batches_per_epoch` tuples holding one batch per
/// class. Each class is reshuffled every epoch and its tail is dropped.
class ClassBatcher {
 public:
  ClassBatcher(const Dataset& ds, BatchPlan plan);

  /// Batches of epoch `epoch`; depends only on (seed, epoch).
  std::vector<std::vector<LabeledBatch>> epoch(std::size_t epoch) const;
  /// Row indices behind epoch(epoch): [tuple][class] -> rows.
  std::vector<std::vector<std::vector<std::size_t>>> epoch_indices(std::size_t epoch) const;
  /// Returns epoch(k) for k = 0, 1, ... on successive calls.
  std::vector<std::vector<LabeledBatch>> next_epoch();

  const std::vector<std::size_t>& batch_sizes() const noexcept { return sizes_; }

 private:
  const Dataset* ds_;
  BatchPlan plan_;
  std::vector<std::size_t> sizes_;
  std::size_t next_ = 0;
};

/// Fraction of rows of each class whose argmax prediction (ties to the
/// smaller index) is correct; empty optional for a class with no rows.
std::vector<std::optional<double>> accuracy_per_class(const MlpParams& net, const Dataset& ds);

/// Fraction of rows whose task-`task` prediction matches its label.
double task_accuracy(const TwoHeadMlp& net, const Dataset& ds, std::size_t task);

}  // namespace edm
