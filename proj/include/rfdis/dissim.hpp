#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfdis/forest.hpp"

namespace rfdis {

enum class MeasureKind { Plain, PathLength, Rfd };

/// Which pairwise measure a matrix or projection was built with.
struct Measure {
  MeasureKind kind = MeasureKind::Rfd;
  double path_weight = 0.5;  // w in the exp(-w*g) path-length proximity
  int kappa = 5;             // neighbor count for the hardness weights

  static Measure plain() { return {MeasureKind::Plain, 0.0, 0}; }
  static Measure path_length(double w) { return {MeasureKind::PathLength, w, 0}; }
  static Measure rfd(int kappa) { return {MeasureKind::Rfd, 0.0, kappa}; }
};

const char* to_string(MeasureKind kind);

/// Per-tree instance hardness: entry (k, i) is the fraction of instance i's
/// kappa nearest training neighbors, in tree k's feature subspace, that carry
/// a different label.
struct HardnessTable {
  Matrix values;  // tree_count x n, all entries in [0, 1]
  int kappa = 0;
};

/// r x n dissimilarity block: rows are arbitrary instances, columns are the
/// forest's n training instances. Values always lie in [0, 1].
struct DissimilarityMatrix {
  Matrix values;
  std::vector<int> row_ids;
  std::vector<int> col_ids;
  Measure measure;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
};

/// 0 when both vectors land in the same leaf, else 1.
int tree_dissimilarity(const RandomTree& tree, std::span<const double> a, std::span<const double> b);

/// Fraction of trees separating a and b; 1 minus the Breiman proximity.
double forest_dissimilarity(const RandomForest& forest, std::span<const double> a,
                            std::span<const double> b);

/// Mean over trees of exp(-w * g) with g the leaf-to-leaf path length.
/// Returned as a proximity in (0, 1]; the matching dissimilarity is 1 - p.
double path_length_proximity(const RandomForest& forest, std::span<const double> a,
                             std::span<const double> b, double w);

/// Builds the hardness table for a forest's own training set. Distances are
/// Euclidean over each tree's used features after per-feature standardization;
/// trees without split features fall back to the full feature space.
HardnessTable kdn_hardness(const RandomForest& forest, int kappa);

/// Hardness-weighted forest dissimilarity between x and training instance
/// `reference`: trees are weighted by (1 - hardness) of the reference. A zero
/// weight sum falls back to the unweighted mean.
double rfd(const RandomForest& forest, const HardnessTable& hardness, std::span<const double> x,
           int reference);

/// Self dissimilarity matrix (rows = the forest's training instances).
DissimilarityMatrix build_matrix(const RandomForest& forest, const Measure& measure,
                                 const HardnessTable* hardness = nullptr);

/// Dissimilarity block for arbitrary row instances against the training set.
DissimilarityMatrix build_matrix(const RandomForest& forest, const Measure& measure,
                                 const Matrix& rows, std::vector<int> row_ids = {},
                                 const HardnessTable* hardness = nullptr);

/// Single-row case of build_matrix: x's coordinates in the dissimilarity space.
std::vector<double> project(const RandomForest& forest, const Measure& measure,
                            std::span<const double> x, const HardnessTable* hardness = nullptr);

void write_matrix_csv(const DissimilarityMatrix& matrix, const std::string& path);

}  // namespace rfdis
