#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rfdis/common.hpp"

namespace rfdis {

/// Labeled numeric training data. Labels are dense class indices in
/// {0..class_count-1} and every class must be populated.
struct TrainingSet {
  Matrix features;          // n x m
  std::vector<int> labels;  // n entries
  int class_count = 0;

  int instance_count() const { return static_cast<int>(features.rows()); }
  int feature_count() const { return static_cast<int>(features.cols()); }

  /// Builds a TrainingSet, inferring class_count from the labels, and
  /// validates the invariants (finite features, n >= 2, all classes present).
  static TrainingSet make(Matrix features, std::vector<int> labels);
  void validate() const;
};

struct TreeNode {
  int feature = -1;  // split feature; < 0 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int parent = -1;
  int depth = 0;
  int leaf_id = -1;            // dense id among the tree's leaves
  int majority = -1;           // leaf majority class, lowest index on ties
  std::vector<int> histogram;  // leaf class counts over the bootstrap sample

  bool is_leaf() const { return feature < 0; }
};

/// A fully grown CART tree. Instances descend from the root, going left when
/// x[feature] <= threshold.
struct RandomTree {
  std::vector<TreeNode> nodes;    // nodes[0] is the root
  std::vector<int> used_features; // sorted distinct split features
  std::vector<int> leaf_nodes;    // leaf id -> node index

  int leaf_count() const { return static_cast<int>(leaf_nodes.size()); }

  int leaf_index(std::span<const double> x) const;
  int leaf_majority(int leaf_id) const { return nodes[leaf_nodes[leaf_id]].majority; }
  int vote(std::span<const double> x) const { return leaf_majority(leaf_index(x)); }

  /// Number of edges on the tree path between two leaves (0 when equal).
  int path_edges(int leaf_a, int leaf_b) const;
};

struct RandomForest {
  std::vector<RandomTree> trees;
  std::vector<std::vector<std::uint8_t>> bootstrap_masks;  // [tree][instance], 1 = in bag
  int mtry = 0;
  std::uint64_t seed = 0;
  std::shared_ptr<const TrainingSet> training;

  // Caches filled at training time; the forest is immutable afterwards and
  // safe to share across threads.
  std::vector<std::vector<int>> training_leaves;  // [tree][instance] leaf id
  std::vector<int> oob_votes;                     // per instance, -1 when no OOB tree

  int tree_count() const { return static_cast<int>(trees.size()); }
  int class_count() const { return training->class_count; }
  int instance_count() const { return training->instance_count(); }
  int feature_count() const { return training->feature_count(); }

  /// Majority vote over the trees; ties resolved toward the lowest class index.
  int predict(std::span<const double> x) const;
  std::vector<int> predict_batch(const Matrix& rows) const;

  /// Per-class vote counts for x; sums to tree_count().
  std::vector<int> vote_histogram(std::span<const double> x) const;
};

/// Breiman-style induction: per tree, a bootstrap of n draws with replacement,
/// Gini-maximizing splits over mtry features sampled per node, grown until
/// leaves are pure or unsplittable. Tree k draws from a stream derived from
/// (seed, k), so parallel and serial training produce identical forests.
RandomForest train_forest(TrainingSet data, int tree_count, int mtry, std::uint64_t seed);

/// Same induction with explicit bootstrap draws (one list of n instance
/// indices per tree) replayed instead of drawn; feature sampling still comes
/// from the derived per-tree streams.
RandomForest train_forest_with_draws(TrainingSet data, int tree_count, int mtry,
                                     std::uint64_t seed,
                                     const std::vector<std::vector<int>>& bootstrap_draws);

/// Out-of-bag error over the whole training set. Instances with no OOB tree
/// are skipped (the denominator shrinks); nullopt when nothing is estimable.
std::optional<double> oob_error(const RandomForest& forest);

/// Out-of-bag error restricted to a subset of training instance indices.
std::optional<double> oob_error(const RandomForest& forest, std::span<const int> subset);

std::uint64_t forest_fingerprint(const RandomForest& forest);

}  // namespace rfdis
