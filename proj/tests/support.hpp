#pragma once

// Shared builders for small synthetic inputs used across the test suites.

#include <vector>

#include "rfdis/forest.hpp"

namespace support {

using rfdis::Matrix;
using rfdis::Rng;
using rfdis::TrainingSet;

/// Gaussian class clusters, well separated by default.
inline TrainingSet gaussian_blobs(int n, int m, int classes, std::uint64_t seed,
                                  double separation = 6.0) {
  Rng rng(seed);
  Matrix features(n, m);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    const int y = i % classes;
    labels[i] = y;
    for (int f = 0; f < m; ++f) {
      const double center = f == 0 ? separation * y : 0.0;
      features(i, f) = center + rng.next_gaussian();
    }
  }
  return TrainingSet::make(std::move(features), std::move(labels));
}

/// Uniform random features with arbitrary labels (every class present).
inline TrainingSet random_training(int n, int m, int classes, std::uint64_t seed) {
  Rng rng(seed);
  Matrix features(n, m);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = i < classes ? i : static_cast<int>(rng.next_below(classes));
    for (int f = 0; f < m; ++f) features(i, f) = rng.next_double();
  }
  return TrainingSet::make(std::move(features), std::move(labels));
}

/// A hand-built stump: split on feature 0 at `threshold`, leaf 0 on the left
/// (majority class 0), leaf 1 on the right (majority class 1).
inline rfdis::RandomTree stump(double threshold = 0.5) {
  rfdis::RandomTree tree;
  tree.nodes.resize(3);
  tree.nodes[0].feature = 0;
  tree.nodes[0].threshold = threshold;
  tree.nodes[0].left = 1;
  tree.nodes[0].right = 2;
  tree.nodes[1] = {.feature = -1, .parent = 0, .depth = 1, .leaf_id = 0, .majority = 0,
                   .histogram = {1, 0}};
  tree.nodes[2] = {.feature = -1, .parent = 0, .depth = 1, .leaf_id = 1, .majority = 1,
                   .histogram = {0, 1}};
  tree.used_features = {0};
  tree.leaf_nodes = {1, 2};
  return tree;
}

/// A single-leaf tree (pure root).
inline rfdis::RandomTree single_leaf(int majority = 0, int classes = 2) {
  rfdis::RandomTree tree;
  tree.nodes.resize(1);
  tree.nodes[0].feature = -1;
  tree.nodes[0].leaf_id = 0;
  tree.nodes[0].majority = majority;
  tree.nodes[0].histogram.assign(classes, 0);
  tree.nodes[0].histogram[majority] = 1;
  tree.leaf_nodes = {0};
  return tree;
}

}  // namespace support
