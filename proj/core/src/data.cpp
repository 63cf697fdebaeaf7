#include "edm/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "edm/errors.hpp"

namespace edm {
namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<double> parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size()) return std::nullopt;
  return value;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::size_t infer_classes(const std::vector<int>& labels) {
  int top = -1;
  for (int y : labels) top = std::max(top, y);
  return static_cast<std::size_t>(top + 1);
}

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{seed, stream};
  return std::mt19937_64(seq);
}

}  // namespace

Dataset::Dataset(Matrix features, std::vector<int> labels, std::vector<int> labels2,
                 std::size_t num_classes, std::size_t num_classes2)
    : features_(std::move(features)), labels_(std::move(labels)), labels2_(std::move(labels2)) {
  const auto n = static_cast<std::size_t>(features_.rows());
  if (labels_.size() != n) throw DataError("label count does not match feature rows");
  if (!labels2_.empty() && labels2_.size() != n) {
    throw DataError("second label count does not match feature rows");
  }
  if (num_classes == 0) num_classes = infer_classes(labels_);
  num_classes2_ = labels2_.empty() ? 0 : (num_classes2 ? num_classes2 : infer_classes(labels2_));
  class_index_sets_.assign(num_classes, {});
  for (std::size_t j = 0; j < n; ++j) {
    const int y = labels_[j];
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw DataError("label " + std::to_string(y) + " of row " + std::to_string(j) +
                      " outside [0, " + std::to_string(num_classes) + ")");
    }
    class_index_sets_[static_cast<std::size_t>(y)].push_back(j);
  }
  for (std::size_t j = 0; j < labels2_.size(); ++j) {
    if (labels2_[j] < 0 || static_cast<std::size_t>(labels2_[j]) >= num_classes2_) {
      throw DataError("second label of row " + std::to_string(j) + " out of range");
    }
  }
}

LabeledBatch Dataset::gather(std::span<const std::size_t> rows) const {
  LabeledBatch batch;
  batch.features.resize(static_cast<Eigen::Index>(rows.size()), features_.cols());
  batch.labels.reserve(rows.size());
  if (two_task()) batch.labels2.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    batch.features.row(static_cast<Eigen::Index>(k)) =
        features_.row(static_cast<Eigen::Index>(rows[k]));
    batch.labels.push_back(labels_[rows[k]]);
    if (two_task()) batch.labels2.push_back(labels2_[rows[k]]);
  }
  return batch;
}

LabeledBatch Dataset::as_batch() const {
  return LabeledBatch{features_, labels_, labels2_};
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  LabeledBatch b = gather(rows);
  return Dataset(std::move(b.features), std::move(b.labels), std::move(b.labels2), num_classes(),
                 num_classes2_);
}

Dataset synth_imbalanced(std::size_t n_major, std::size_t n_minor, std::size_t m,
                         double separation, std::uint64_t seed) {
  if (n_major < 1 || n_minor < 1) throw InputError("both classes need at least one sample");
  if (m < 1) throw InputError("feature dimension must be >= 1");
  if (!std::isfinite(separation) || separation < 0.0) {
    throw InputError("separation must be finite and >= 0");
  }
  auto rng = seeded(seed, 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t n = n_major + n_minor;
  const auto dims = static_cast<Eigen::Index>(m);
  const Vector offset = Vector::Constant(dims, separation / std::sqrt(static_cast<double>(m)));

  Matrix x(static_cast<Eigen::Index>(n), dims);
  std::vector<int> y(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < dims; ++k) x(static_cast<Eigen::Index>(j), k) = noise(rng);
    if (j >= n_major) {
      x.row(static_cast<Eigen::Index>(j)) += offset.transpose();
      y[j] = 1;
    }
  }
  return Dataset(std::move(x), std::move(y), {}, 2);
}

Dataset synth_two_task(std::size_t n, std::size_t m, std::uint64_t seed,
                       const TwoTaskShape& shape) {
  if (n < 1) throw InputError("two-task dataset needs at least one sample");
  if (m < 2) throw InputError("two-task dataset needs m >= 2 features");
  if (shape.classes < 2) throw InputError("two-task dataset needs at least two classes");

  const std::size_t half[2] = {m / 2, m - m / 2};
  const Eigen::Index start[2] = {0, static_cast<Eigen::Index>(m / 2)};

  // Class k of a task sits at +-separation along axis k/2 of its block; a
  // one-dimensional block spreads the centres along the line instead.
  auto centre = [&](std::size_t task, std::size_t k) {
    Vector c = Vector::Zero(static_cast<Eigen::Index>(half[task]));
    if (half[task] == 1) {
      c(0) = shape.separation *
             (2.0 * static_cast<double>(k) - static_cast<double>(shape.classes - 1));
    } else {
      const auto axis = static_cast<Eigen::Index>((k / 2) % half[task]);
      const double ring = 1.0 + static_cast<double>(k / (2 * half[task]));
      c(axis) = (k % 2 == 0 ? 1.0 : -1.0) * shape.separation * ring;
    }
    return c;
  };

  auto rng = seeded(seed, 2);
  std::normal_distribution<double> noise(0.0, shape.noise);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(shape.classes) - 1);

  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::vector<int> y1(n), y2(n);
  for (std::size_t j = 0; j < n; ++j) {
    y1[j] = pick(rng);
    y2[j] = pick(rng);
    const int labels[2] = {y1[j], y2[j]};
    for (std::size_t task = 0; task < 2; ++task) {
      const Vector c = centre(task, static_cast<std::size_t>(labels[task]));
      for (Eigen::Index k = 0; k < c.size(); ++k) {
        x(static_cast<Eigen::Index>(j), start[task] + k) = c(k) + noise(rng);
      }
    }
  }
  return Dataset(std::move(x), std::move(y1), std::move(y2), shape.classes, shape.classes);
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 const std::optional<std::string>& second_label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("dataset file '" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_commas(line);
  for (auto& h : header) h = trim(h);

  auto column_of = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label_col = column_of(label_column);
  constexpr std::size_t kNoColumn = static_cast<std::size_t>(-1);
  const std::size_t label2_col = second_label_column ? column_of(*second_label_column) : kNoColumn;

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_col && c != label2_col) feature_cols.push_back(c);
  }

  auto parse_label = [&](const std::string& cell, std::size_t row, const std::string& name) {
    const auto v = parse_double(cell);
    if (!v || *v != std::floor(*v) || *v < 0.0 || *v > 1e9) {
      throw DataError("row " + std::to_string(row) + ", column '" + name +
                      "': label '" + trim(cell) + "' is not a non-negative integer");
    }
    return static_cast<int>(*v);
  };

  std::vector<double> values;
  std::vector<int> labels, labels2;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(header.size()));
    }
    for (std::size_t c : feature_cols) {
      const auto v = parse_double(cells[c]);
      if (!v) {
        throw DataError("row " + std::to_string(row) + ", column '" + header[c] +
                        "': cannot parse '" + trim(cells[c]) + "' as a number");
      }
      values.push_back(*v);
    }
    labels.push_back(parse_label(cells[label_col], row, header[label_col]));
    if (label2_col != kNoColumn) {
      labels2.push_back(parse_label(cells[label2_col], row, header[label2_col]));
    }
  }
  if (row == 0) throw DataError("dataset file '" + path.string() + "' has no data rows");

  const auto cols = static_cast<Eigen::Index>(feature_cols.size());
  Matrix x(static_cast<Eigen::Index>(row), cols);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) x(r, c) = values[static_cast<std::size_t>(r * cols + c)];
  }
  return Dataset(std::move(x), std::move(labels), std::move(labels2));
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file '" + path.string() + "'");
  const auto m = static_cast<Eigen::Index>(ds.num_features());
  for (Eigen::Index c = 0; c < m; ++c) out << 'f' << c << ',';
  out << "label";
  if (ds.two_task()) out << ",label2";
  out << '\n';
  for (std::size_t j = 0; j < ds.size(); ++j) {
    for (Eigen::Index c = 0; c < m; ++c) {
      out << format_double(ds.features()(static_cast<Eigen::Index>(j), c)) << ',';
    }
    out << ds.labels()[j];
    if (ds.two_task()) out << ',' << ds.labels2()[j];
    out << '\n';
  }
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double test_fraction,
                                             std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InputError("test fraction must lie strictly between 0 and 1");
  }
  auto rng = seeded(seed, 3);
  std::vector<std::size_t> train, test;
  for (std::size_t c = 0; c < ds.num_classes(); ++c) {
    std::vector<std::size_t> rows = ds.class_index_sets()[c];
    if (rows.empty()) continue;
    if (rows.size() < 2) {
      throw DataError("class " + std::to_string(c) + " has fewer than 2 samples; cannot split");
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
    test.insert(test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.insert(train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {ds.subset(train), ds.subset(test)};
}

std::vector<std::size_t> BatchPlan::per_class_batch_sizes(const Dataset& ds) const {
  if (batches_per_epoch < 1) throw ConfigError("batches_per_epoch must be >= 1");
  std::vector<std::size_t> sizes;
  for (std::size_t c = 0; c < ds.num_classes(); ++c) {
    const std::size_t count = ds.class_index_sets()[c].size();
    if (count < batches_per_epoch) {
      throw ConfigError("class " + std::to_string(c) + " has " + std::to_string(count) +
                        " samples, fewer than batches_per_epoch = " +
                        std::to_string(batches_per_epoch));
    }
    sizes.push_back(count / batches_per_epoch);
  }
  return sizes;
}

ClassBatcher::ClassBatcher(const Dataset& ds, BatchPlan plan)
    : ds_(&ds), plan_(plan), sizes_(plan.per_class_batch_sizes(ds)) {}

std::vector<std::vector<std::vector<std::size_t>>> ClassBatcher::epoch_indices(
    std::size_t epoch) const {
  const std::size_t classes = ds_->num_classes();
  std::vector<std::vector<std::vector<std::size_t>>> out(
      plan_.batches_per_epoch, std::vector<std::vector<std::size_t>>(classes));
  std::seed_seq seq{plan_.seed, static_cast<std::uint64_t>(epoch), std::uint64_t{4}};
  std::mt19937_64 rng(seq);
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<std::size_t> rows = ds_->class_index_sets()[c];
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t b = 0; b < plan_.batches_per_epoch; ++b) {
      const auto first = rows.begin() + static_cast<std::ptrdiff_t>(b * sizes_[c]);
      out[b][c].assign(first, first + static_cast<std::ptrdiff_t>(sizes_[c]));
    }
  }
  return out;
}

std::vector<std::vector<LabeledBatch>> ClassBatcher::epoch(std::size_t epoch) const {
  const auto indices = epoch_indices(epoch);
  std::vector<std::vector<LabeledBatch>> out;
  out.reserve(indices.size());
  for (const auto& tuple : indices) {
    std::vector<LabeledBatch> batches;
    for (const auto& rows : tuple) batches.push_back(ds_->gather(rows));
    out.push_back(std::move(batches));
  }
  return out;
}

std::vector<std::vector<LabeledBatch>> ClassBatcher::next_epoch() { return epoch(next_++); }

std::vector<std::optional<double>> accuracy_per_class(const MlpParams& net, const Dataset& ds) {
  if (net.output_dim() < ds.num_classes()) {
    throw InputError("network has fewer outputs than the dataset has classes");
  }
  const Matrix logits = forward_batch(net, ds.features());
  std::vector<std::optional<double>> out;
  for (std::size_t c = 0; c < ds.num_classes(); ++c) {
    const auto& rows = ds.class_index_sets()[c];
    if (rows.empty()) {
      out.emplace_back(std::nullopt);
      continue;
    }
    std::size_t correct = 0;
    for (std::size_t j : rows) {
      if (predict_class(logits.row(static_cast<Eigen::Index>(j)).transpose()) == static_cast<int>(c)) {
        ++correct;
      }
    }
    out.emplace_back(static_cast<double>(correct) / static_cast<double>(rows.size()));
  }
  return out;
}

double task_accuracy(const TwoHeadMlp& net, const Dataset& ds, std::size_t task) {
  if (task > 1) throw InputError("task index must be 0 or 1");
  if (task == 1 && !ds.two_task()) throw InputError("dataset has no second label");
  if (ds.size() == 0) throw InputError("cannot score an empty dataset");
  const Matrix logits = net.logits(ds.features(), task);
  const auto& labels = task == 0 ? ds.labels() : ds.labels2();
  std::size_t correct = 0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (predict_class(logits.row(static_cast<Eigen::Index>(j)).transpose()) == labels[j]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace edm
