#include "rfdis/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

namespace rfdis {

TrainingSet TrainingSet::make(Matrix features, std::vector<int> labels) {
  TrainingSet data;
  data.features = std::move(features);
  data.labels = std::move(labels);
  int max_label = -1;
  for (int y : data.labels) max_label = std::max(max_label, y);
  data.class_count = max_label + 1;
  data.validate();
  return data;
}

void TrainingSet::validate() const {
  const int n = instance_count();
  if (n < 2) fail(ErrorKind::Parameter, "training set needs at least 2 instances, got " + std::to_string(n));
  if (labels.size() != features.rows())
    fail(ErrorKind::Structural, "label count " + std::to_string(labels.size()) +
                                    " does not match instance count " + std::to_string(n));
  if (feature_count() < 1) fail(ErrorKind::Parameter, "training set has no features");
  if (class_count < 1) fail(ErrorKind::Parameter, "class_count must be positive");
  std::vector<int> seen(class_count, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= class_count)
      fail(ErrorKind::Validation, "label " + std::to_string(y) + " at instance " +
                                      std::to_string(i) + " outside {0.." +
                                      std::to_string(class_count - 1) + "}");
    ++seen[y];
  }
  for (int c = 0; c < class_count; ++c)
    if (seen[c] == 0) fail(ErrorKind::Validation, "class " + std::to_string(c) + " has no instances");
  for (double v : features.data())
    if (!std::isfinite(v)) fail(ErrorKind::Validation, "non-finite feature value in training set");
}

int RandomTree::leaf_index(std::span<const double> x) const {
  int node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& nd = nodes[node];
    node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[node].leaf_id;
}

int RandomTree::path_edges(int leaf_a, int leaf_b) const {
  int a = leaf_nodes[leaf_a];
  int b = leaf_nodes[leaf_b];
  int edges = 0;
  while (nodes[a].depth > nodes[b].depth) {
    a = nodes[a].parent;
    ++edges;
  }
  while (nodes[b].depth > nodes[a].depth) {
    b = nodes[b].parent;
    ++edges;
  }
  while (a != b) {
    a = nodes[a].parent;
    b = nodes[b].parent;
    edges += 2;
  }
  return edges;
}

namespace {

constexpr double kMinGain = 1e-12;

double gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Grows one tree over a bootstrap sample held as an index range that is
// partitioned in place as nodes split.
class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& data, int mtry, Rng& rng, std::vector<int>& sample)
      : data_(data), mtry_(mtry), rng_(rng), sample_(sample) {
    feature_pool_.resize(data_.feature_count());
    std::iota(feature_pool_.begin(), feature_pool_.end(), 0);
  }

  RandomTree build() {
    RandomTree tree;
    tree.nodes.reserve(2 * sample_.size());
    grow(tree, 0, static_cast<int>(sample_.size()), -1, 0);
    std::sort(tree.used_features.begin(), tree.used_features.end());
    tree.used_features.erase(std::unique(tree.used_features.begin(), tree.used_features.end()),
                             tree.used_features.end());
    return tree;
  }

 private:
  int grow(RandomTree& tree, int begin, int end, int parent, int depth) {
    const int node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_index].parent = parent;
    tree.nodes[node_index].depth = depth;

    std::vector<int> counts(data_.class_count, 0);
    for (int i = begin; i < end; ++i) ++counts[data_.labels[sample_[i]]];
    int distinct = 0;
    for (int c : counts) distinct += c > 0 ? 1 : 0;

    SplitChoice split;
    if (distinct > 1) {
      split = pick_split(begin, end, counts);
    }
    if (split.feature < 0) {
      make_leaf(tree, node_index, std::move(counts));
      return node_index;
    }

    tree.nodes[node_index].feature = split.feature;
    tree.nodes[node_index].threshold = split.threshold;
    tree.used_features.push_back(split.feature);

    const auto mid = std::partition(sample_.begin() + begin, sample_.begin() + end,
                                    [&](int idx) { return data_.features(idx, split.feature) <= split.threshold; });
    const int split_at = static_cast<int>(mid - sample_.begin());
    const int left = grow(tree, begin, split_at, node_index, depth + 1);
    const int right = grow(tree, split_at, end, node_index, depth + 1);
    tree.nodes[node_index].left = left;
    tree.nodes[node_index].right = right;
    return node_index;
  }

  void make_leaf(RandomTree& tree, int node_index, std::vector<int> counts) {
    TreeNode& node = tree.nodes[node_index];
    node.feature = -1;
    node.leaf_id = static_cast<int>(tree.leaf_nodes.size());
    int best = 0;
    for (int c = 1; c < static_cast<int>(counts.size()); ++c)
      if (counts[c] > counts[best]) best = c;
    node.majority = best;
    node.histogram = std::move(counts);
    tree.leaf_nodes.push_back(node_index);
  }

  // Best Gini split over mtry sampled features; if none of them improves
  // impurity, one deterministic pass over all features. An impure node with
  // any remaining boundary still splits (at zero gain) so trees only stop on
  // pure or feature-identical leaves.
  SplitChoice pick_split(int begin, int end, const std::vector<int>& counts) {
    const int m = data_.feature_count();
    sample_features();
    SplitChoice fallback;
    SplitChoice best = best_over(candidate_features_, begin, end, counts, &fallback);
    if (best.feature >= 0) return best;
    if (mtry_ < m) {
      candidate_features_.resize(m);
      std::iota(candidate_features_.begin(), candidate_features_.end(), 0);
      fallback = SplitChoice{};
      best = best_over(candidate_features_, begin, end, counts, &fallback);
      if (best.feature >= 0) return best;
    }
    return fallback;
  }

  void sample_features() {
    const int m = data_.feature_count();
    candidate_features_.clear();
    for (int j = 0; j < mtry_; ++j) {
      const int pick = j + static_cast<int>(rng_.next_below(static_cast<std::uint64_t>(m - j)));
      std::swap(feature_pool_[j], feature_pool_[pick]);
      candidate_features_.push_back(feature_pool_[j]);
    }
    std::sort(candidate_features_.begin(), candidate_features_.end());
  }

  SplitChoice best_over(const std::vector<int>& features, int begin, int end,
                        const std::vector<int>& counts, SplitChoice* fallback) {
    const int total = end - begin;
    const double parent_impurity = gini(counts, total);
    SplitChoice best;
    for (int f : features) {
      values_.clear();
      for (int i = begin; i < end; ++i)
        values_.emplace_back(data_.features(sample_[i], f), data_.labels[sample_[i]]);
      std::sort(values_.begin(), values_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      left_counts_.assign(counts.size(), 0);
      int left_total = 0;
      right_counts_ = counts;
      for (int t = 1; t < total; ++t) {
        const int y = values_[t - 1].second;
        ++left_counts_[y];
        --right_counts_[y];
        ++left_total;
        const double lo = values_[t - 1].first;
        const double hi = values_[t].first;
        if (!(hi > lo)) continue;
        double threshold = lo + (hi - lo) / 2.0;
        if (!(threshold < hi)) threshold = lo;  // adjacent doubles
        if (fallback && fallback->feature < 0) {
          fallback->feature = f;
          fallback->threshold = threshold;
        }
        const double gain = parent_impurity -
                            (static_cast<double>(left_total) / total) * gini(left_counts_, left_total) -
                            (static_cast<double>(total - left_total) / total) *
                                gini(right_counts_, total - left_total);
        if (gain > kMinGain && gain > best.gain) {
          best.feature = f;
          best.threshold = threshold;
          best.gain = gain;
        }
      }
    }
    return best;
  }

  const TrainingSet& data_;
  int mtry_;
  Rng& rng_;
  std::vector<int>& sample_;
  std::vector<int> feature_pool_;
  std::vector<int> candidate_features_;
  std::vector<std::pair<double, int>> values_;
  std::vector<int> left_counts_;
  std::vector<int> right_counts_;
};

RandomForest train_impl(TrainingSet data, int tree_count, int mtry, std::uint64_t seed,
                        const std::vector<std::vector<int>>* bootstrap_draws) {
  data.validate();
  const int n = data.instance_count();
  const int m = data.feature_count();
  if (tree_count < 1) fail(ErrorKind::Parameter, "tree_count must be >= 1");
  if (mtry < 1 || mtry > m)
    fail(ErrorKind::Parameter, "mtry " + std::to_string(mtry) + " outside [1, " + std::to_string(m) + "]");
  {
    std::vector<int> seen(data.class_count, 0);
    for (int y : data.labels) seen[y] = 1;
    if (std::accumulate(seen.begin(), seen.end(), 0) < 2)
      fail(ErrorKind::InvalidTask, "training data has fewer than 2 distinct labels");
  }
  if (bootstrap_draws) {
    if (static_cast<int>(bootstrap_draws->size()) != tree_count)
      fail(ErrorKind::Parameter, "bootstrap draw list count does not match tree_count");
    for (const auto& draws : *bootstrap_draws) {
      if (static_cast<int>(draws.size()) != n)
        fail(ErrorKind::Parameter, "each bootstrap draw list must contain n indices");
      for (int idx : draws)
        if (idx < 0 || idx >= n) fail(ErrorKind::Parameter, "bootstrap draw index out of range");
    }
  }

  RandomForest forest;
  forest.mtry = mtry;
  forest.seed = seed;
  forest.training = std::make_shared<const TrainingSet>(std::move(data));
  forest.trees.resize(tree_count);
  forest.bootstrap_masks.assign(tree_count, std::vector<std::uint8_t>(n, 0));
  forest.training_leaves.assign(tree_count, std::vector<int>(n, -1));

  const TrainingSet& train = *forest.training;
  parallel_for(static_cast<std::size_t>(tree_count), [&](std::size_t k) {
    Rng rng(derive_seed(seed, seed_stream::kTree, k));
    std::vector<int> sample(n);
    if (bootstrap_draws) {
      // Replayed draws substitute the drawn values but keep the stream
      // evolution, so node-level feature sampling matches a direct run.
      for (int i = 0; i < n; ++i) (void)rng.next_below(n);
      sample = (*bootstrap_draws)[k];
    } else {
      for (int i = 0; i < n; ++i) sample[i] = static_cast<int>(rng.next_below(n));
    }
    auto& mask = forest.bootstrap_masks[k];
    for (int idx : sample) mask[idx] = 1;

    TreeBuilder builder(train, mtry, rng, sample);
    forest.trees[k] = builder.build();

    auto& leaves = forest.training_leaves[k];
    for (int i = 0; i < n; ++i) leaves[i] = forest.trees[k].leaf_index(train.features.row_span(i));
  });

  // OOB majority vote per training instance.
  forest.oob_votes.assign(n, -1);
  const int classes = train.class_count;
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    std::vector<int> votes(classes, 0);
    bool any = false;
    for (int k = 0; k < tree_count; ++k) {
      if (forest.bootstrap_masks[k][i]) continue;
      ++votes[forest.trees[k].leaf_majority(forest.training_leaves[k][i])];
      any = true;
    }
    if (!any) return;
    int best = 0;
    for (int c = 1; c < classes; ++c)
      if (votes[c] > votes[best]) best = c;
    forest.oob_votes[i] = best;
  });
  return forest;
}

}  // namespace

RandomForest train_forest(TrainingSet data, int tree_count, int mtry, std::uint64_t seed) {
  return train_impl(std::move(data), tree_count, mtry, seed, nullptr);
}

RandomForest train_forest_with_draws(TrainingSet data, int tree_count, int mtry,
                                     std::uint64_t seed,
                                     const std::vector<std::vector<int>>& bootstrap_draws) {
  return train_impl(std::move(data), tree_count, mtry, seed, &bootstrap_draws);
}

std::vector<int> RandomForest::vote_histogram(std::span<const double> x) const {
  std::vector<int> votes(class_count(), 0);
  for (const auto& tree : trees) ++votes[tree.vote(x)];
  return votes;
}

int RandomForest::predict(std::span<const double> x) const {
  const std::vector<int> votes = vote_histogram(x);
  int best = 0;
  for (int c = 1; c < static_cast<int>(votes.size()); ++c)
    if (votes[c] > votes[best]) best = c;
  return best;
}

std::vector<int> RandomForest::predict_batch(const Matrix& rows) const {
  if (rows.cols() != static_cast<std::size_t>(feature_count()))
    fail(ErrorKind::Structural, "prediction rows have " + std::to_string(rows.cols()) +
                                    " features, forest expects " + std::to_string(feature_count()));
  std::vector<int> out(rows.rows(), -1);
  parallel_for(rows.rows(), [&](std::size_t i) { out[i] = predict(rows.row_span(i)); });
  return out;
}

std::optional<double> oob_error(const RandomForest& forest) {
  std::vector<int> all(forest.instance_count());
  std::iota(all.begin(), all.end(), 0);
  return oob_error(forest, all);
}

std::optional<double> oob_error(const RandomForest& forest, std::span<const int> subset) {
  const auto& labels = forest.training->labels;
  int counted = 0;
  int wrong = 0;
  for (int idx : subset) {
    if (idx < 0 || idx >= forest.instance_count())
      fail(ErrorKind::Parameter, "OOB subset index " + std::to_string(idx) + " out of range");
    const int vote = forest.oob_votes[idx];
    if (vote < 0) continue;  // in-bag everywhere, not estimable
    ++counted;
    wrong += vote != labels[idx] ? 1 : 0;
  }
  if (counted == 0) return std::nullopt;
  return static_cast<double>(wrong) / counted;
}

std::uint64_t forest_fingerprint(const RandomForest& forest) {
  std::uint64_t h = fnv1a(&forest.seed, sizeof forest.seed);
  h = fnv1a(&forest.mtry, sizeof forest.mtry, h);
  for (const auto& tree : forest.trees) {
    for (const auto& node : tree.nodes) {
      h = fnv1a(&node.feature, sizeof node.feature, h);
      h = fnv1a(&node.threshold, sizeof node.threshold, h);
      h = fnv1a(&node.leaf_id, sizeof node.leaf_id, h);
      if (!node.histogram.empty())
        h = fnv1a(node.histogram.data(), node.histogram.size() * sizeof(int), h);
    }
  }
  for (const auto& mask : forest.bootstrap_masks) h = fnv1a(mask.data(), mask.size(), h);
  return h;
}

}  // namespace rfdis
