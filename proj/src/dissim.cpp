#include "rfdis/dissim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

namespace rfdis {

const char* to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::Plain: return "plain";
    case MeasureKind::PathLength: return "path_length";
    case MeasureKind::Rfd: return "rfd";
  }
  return "unknown";
}

int tree_dissimilarity(const RandomTree& tree, std::span<const double> a,
                       std::span<const double> b) {
  return tree.leaf_index(a) == tree.leaf_index(b) ? 0 : 1;
}

double forest_dissimilarity(const RandomForest& forest, std::span<const double> a,
                            std::span<const double> b) {
  int differing = 0;
  for (const auto& tree : forest.trees) differing += tree_dissimilarity(tree, a, b);
  return static_cast<double>(differing) / forest.tree_count();
}

double path_length_proximity(const RandomForest& forest, std::span<const double> a,
                             std::span<const double> b, double w) {
  if (!(w > 0.0)) fail(ErrorKind::Parameter, "path-length weight must be positive");
  double sum = 0.0;
  for (const auto& tree : forest.trees) {
    const int g = tree.path_edges(tree.leaf_index(a), tree.leaf_index(b));
    sum += std::exp(-w * g);
  }
  return sum / forest.tree_count();
}

namespace {

// Standardized copy of the training features: zero mean, unit variance
// (population denominator); constant features keep unit scale.
Matrix standardized_features(const TrainingSet& data) {
  const int n = data.instance_count();
  const int m = data.feature_count();
  Matrix z(n, m);
  for (int f = 0; f < m; ++f) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += data.features(i, f);
    mean /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = data.features(i, f) - mean;
      var += d * d;
    }
    var /= n;
    const double scale = var > 0.0 ? std::sqrt(var) : 1.0;
    for (int i = 0; i < n; ++i) z(i, f) = (data.features(i, f) - mean) / scale;
  }
  return z;
}

// kappa-disagreeing-neighbors row for one feature subspace. Squared distances
// keep the ordering exact; ties at the kappa-th distance resolve toward the
// lowest instance index.
std::vector<double> kdn_row(const Matrix& z, const std::vector<int>& labels,
                            const std::vector<int>& subspace, int kappa) {
  const int n = static_cast<int>(z.rows());
  std::vector<double> row(n, 0.0);
  std::vector<std::pair<double, int>> dist;
  dist.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    dist.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (int f : subspace) {
        const double d = z(i, f) - z(j, f);
        d2 += d * d;
      }
      dist.emplace_back(d2, j);
    }
    std::partial_sort(dist.begin(), dist.begin() + kappa, dist.end());
    int disagree = 0;
    for (int t = 0; t < kappa; ++t) disagree += labels[dist[t].second] != labels[i] ? 1 : 0;
    row[i] = static_cast<double>(disagree) / kappa;
  }
  return row;
}

}  // namespace

HardnessTable kdn_hardness(const RandomForest& forest, int kappa) {
  const TrainingSet& data = *forest.training;
  const int n = data.instance_count();
  const int m = data.feature_count();
  if (kappa < 1 || kappa >= n)
    fail(ErrorKind::Parameter,
         "kappa " + std::to_string(kappa) + " outside [1, " + std::to_string(n - 1) + "]");

  const Matrix z = standardized_features(data);
  std::vector<int> full(m);
  std::iota(full.begin(), full.end(), 0);

  // Trees sharing a feature subspace share one kdn row.
  std::map<std::vector<int>, int> subspace_slot;
  std::vector<const std::vector<int>*> slot_subspace;
  std::vector<int> tree_slot(forest.tree_count(), -1);
  for (int k = 0; k < forest.tree_count(); ++k) {
    const std::vector<int>& used =
        forest.trees[k].used_features.empty() ? full : forest.trees[k].used_features;
    auto [it, inserted] = subspace_slot.emplace(used, static_cast<int>(slot_subspace.size()));
    if (inserted) slot_subspace.push_back(&it->first);
    tree_slot[k] = it->second;
  }

  std::vector<std::vector<double>> slot_rows(slot_subspace.size());
  parallel_for(slot_subspace.size(), [&](std::size_t s) {
    slot_rows[s] = kdn_row(z, data.labels, *slot_subspace[s], kappa);
  });

  HardnessTable table;
  table.kappa = kappa;
  table.values = Matrix(forest.tree_count(), n);
  for (int k = 0; k < forest.tree_count(); ++k) {
    const auto& row = slot_rows[tree_slot[k]];
    std::copy(row.begin(), row.end(), table.values.row(k));
  }
  return table;
}

namespace {

void check_hardness(const RandomForest& forest, const HardnessTable* hardness) {
  if (hardness == nullptr)
    fail(ErrorKind::Parameter, "RFD measure requires a hardness table");
  if (hardness->values.rows() != static_cast<std::size_t>(forest.tree_count()) ||
      hardness->values.cols() != static_cast<std::size_t>(forest.instance_count()))
    fail(ErrorKind::Structural, "hardness table shape does not match the forest");
}

// Column weight sums for the RFD measure, accumulated in tree order.
std::vector<double> rfd_weight_sums(const RandomForest& forest, const HardnessTable& hardness) {
  const int n = forest.instance_count();
  const int trees = forest.tree_count();
  std::vector<double> sums(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int k = 0; k < trees; ++k) s += 1.0 - hardness.values(k, j);
    sums[j] = s;
  }
  return sums;
}

// Fills one output row from the row instance's per-tree leaf assignments.
// Accumulation runs in ascending tree order for every column so that scalar
// and matrix paths produce bit-identical values.
void fill_row(const RandomForest& forest, const Measure& measure, const HardnessTable* hardness,
              const std::vector<double>* weight_sums, const std::vector<int>& row_leaves,
              double* out) {
  const int n = forest.instance_count();
  const int trees = forest.tree_count();
  switch (measure.kind) {
    case MeasureKind::Plain: {
      std::vector<int> same(n, 0);
      for (int k = 0; k < trees; ++k) {
        const int leaf = row_leaves[k];
        const auto& col_leaves = forest.training_leaves[k];
        for (int j = 0; j < n; ++j) same[j] += col_leaves[j] == leaf ? 1 : 0;
      }
      for (int j = 0; j < n; ++j) out[j] = static_cast<double>(trees - same[j]) / trees;
      break;
    }
    case MeasureKind::Rfd: {
      std::vector<double> same_weight(n, 0.0);
      std::vector<int> same_count(n, 0);
      for (int k = 0; k < trees; ++k) {
        const int leaf = row_leaves[k];
        const auto& col_leaves = forest.training_leaves[k];
        const double* h = hardness->values.row(k);
        for (int j = 0; j < n; ++j) {
          if (col_leaves[j] == leaf) {
            same_weight[j] += 1.0 - h[j];
            ++same_count[j];
          }
        }
      }
      for (int j = 0; j < n; ++j) {
        const double wsum = (*weight_sums)[j];
        out[j] = wsum > 0.0 ? 1.0 - same_weight[j] / wsum
                            : static_cast<double>(trees - same_count[j]) / trees;
      }
      break;
    }
    case MeasureKind::PathLength: {
      std::vector<double> proximity(n, 0.0);
      for (int k = 0; k < trees; ++k) {
        const int leaf = row_leaves[k];
        const auto& tree = forest.trees[k];
        const auto& col_leaves = forest.training_leaves[k];
        for (int j = 0; j < n; ++j)
          proximity[j] += std::exp(-measure.path_weight * tree.path_edges(leaf, col_leaves[j]));
      }
      for (int j = 0; j < n; ++j) out[j] = 1.0 - proximity[j] / trees;
      break;
    }
  }
}

void check_measure(const RandomForest& forest, const Measure& measure,
                   const HardnessTable** hardness) {
  if (measure.kind == MeasureKind::Rfd) {
    check_hardness(forest, *hardness);
  } else {
    *hardness = nullptr;
    if (measure.kind == MeasureKind::PathLength && !(measure.path_weight > 0.0))
      fail(ErrorKind::Parameter, "path-length weight must be positive");
  }
}

}  // namespace

double rfd(const RandomForest& forest, const HardnessTable& hardness, std::span<const double> x,
           int reference) {
  check_hardness(forest, &hardness);
  const int n = forest.instance_count();
  if (reference < 0 || reference >= n)
    fail(ErrorKind::Parameter, "reference index " + std::to_string(reference) + " out of range");
  const int trees = forest.tree_count();
  double weight_sum = 0.0;
  double same_weight = 0.0;
  int same_count = 0;
  for (int k = 0; k < trees; ++k) {
    const double w = 1.0 - hardness.values(k, reference);
    weight_sum += w;
    if (forest.trees[k].leaf_index(x) == forest.training_leaves[k][reference]) {
      same_weight += w;
      ++same_count;
    }
  }
  if (weight_sum > 0.0) return 1.0 - same_weight / weight_sum;
  return static_cast<double>(trees - same_count) / trees;
}

DissimilarityMatrix build_matrix(const RandomForest& forest, const Measure& measure,
                                 const HardnessTable* hardness) {
  check_measure(forest, measure, &hardness);
  const int n = forest.instance_count();
  const int trees = forest.tree_count();
  const std::vector<double> weight_sums =
      measure.kind == MeasureKind::Rfd ? rfd_weight_sums(forest, *hardness) : std::vector<double>();

  DissimilarityMatrix result;
  result.measure = measure;
  result.values = Matrix(n, n);
  result.row_ids.resize(n);
  std::iota(result.row_ids.begin(), result.row_ids.end(), 0);
  result.col_ids = result.row_ids;

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    std::vector<int> row_leaves(trees);
    for (int k = 0; k < trees; ++k) row_leaves[k] = forest.training_leaves[k][i];
    fill_row(forest, measure, hardness, &weight_sums, row_leaves, result.values.row(i));
  });
  return result;
}

DissimilarityMatrix build_matrix(const RandomForest& forest, const Measure& measure,
                                 const Matrix& rows, std::vector<int> row_ids,
                                 const HardnessTable* hardness) {
  check_measure(forest, measure, &hardness);
  if (rows.cols() != static_cast<std::size_t>(forest.feature_count()))
    fail(ErrorKind::Structural, "row instances have " + std::to_string(rows.cols()) +
                                    " features, forest expects " +
                                    std::to_string(forest.feature_count()));
  if (!row_ids.empty() && row_ids.size() != rows.rows())
    fail(ErrorKind::Structural, "row id count does not match row count");
  const int n = forest.instance_count();
  const int trees = forest.tree_count();
  const std::vector<double> weight_sums =
      measure.kind == MeasureKind::Rfd ? rfd_weight_sums(forest, *hardness) : std::vector<double>();

  DissimilarityMatrix result;
  result.measure = measure;
  result.values = Matrix(rows.rows(), n);
  if (row_ids.empty()) {
    result.row_ids.resize(rows.rows());
    std::iota(result.row_ids.begin(), result.row_ids.end(), 0);
  } else {
    result.row_ids = std::move(row_ids);
  }
  result.col_ids.resize(n);
  std::iota(result.col_ids.begin(), result.col_ids.end(), 0);

  parallel_for(rows.rows(), [&](std::size_t i) {
    std::vector<int> row_leaves(trees);
    for (int k = 0; k < trees; ++k) row_leaves[k] = forest.trees[k].leaf_index(rows.row_span(i));
    fill_row(forest, measure, hardness, &weight_sums, row_leaves, result.values.row(i));
  });
  return result;
}

std::vector<double> project(const RandomForest& forest, const Measure& measure,
                            std::span<const double> x, const HardnessTable* hardness) {
  check_measure(forest, measure, &hardness);
  if (x.size() != static_cast<std::size_t>(forest.feature_count()))
    fail(ErrorKind::Structural, "vector has " + std::to_string(x.size()) +
                                    " features, forest expects " +
                                    std::to_string(forest.feature_count()));
  const int trees = forest.tree_count();
  const std::vector<double> weight_sums =
      measure.kind == MeasureKind::Rfd ? rfd_weight_sums(forest, *hardness) : std::vector<double>();
  std::vector<int> row_leaves(trees);
  for (int k = 0; k < trees; ++k) row_leaves[k] = forest.trees[k].leaf_index(x);
  std::vector<double> out(forest.instance_count(), 0.0);
  fill_row(forest, measure, hardness, &weight_sums, row_leaves, out.data());
  return out;
}

void write_matrix_csv(const DissimilarityMatrix& matrix, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Runtime, "cannot open '" + path + "' for writing");
  out << "id";
  for (int id : matrix.col_ids) out << ',' << id;
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    out << matrix.row_ids[i];
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.10g", matrix.values(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::Runtime, "write to '" + path + "' failed");
}

}  // namespace rfdis
