#include "rfdis/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace rfdis {

const char* to_string(WeightMethod method) {
  switch (method) {
    case WeightMethod::Uniform: return "uniform";
    case WeightMethod::Sw3nn: return "sw_3nn";
    case WeightMethod::SwKa: return "sw_ka";
    case WeightMethod::SwOob: return "sw_oob";
  }
  return "unknown";
}

void WeightVector::validate() const {
  if (values.empty()) fail(ErrorKind::Parameter, "weight vector is empty");
  double sum = 0.0;
  for (double w : values) {
    if (!(w >= 0.0)) fail(ErrorKind::Parameter, "weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    fail(ErrorKind::Parameter, "weights must sum to 1, got " + std::to_string(sum));
}

WeightVector uniform_weights(int view_count) {
  if (view_count < 1) fail(ErrorKind::Parameter, "view_count must be >= 1");
  WeightVector w;
  w.method = WeightMethod::Uniform;
  w.values.assign(view_count, 1.0 / view_count);
  return w;
}

namespace {

void check_self_matrices(const std::vector<DissimilarityMatrix>& matrices, std::size_t n) {
  if (matrices.empty()) fail(ErrorKind::Parameter, "no view matrices given");
  for (std::size_t q = 0; q < matrices.size(); ++q) {
    if (matrices[q].rows() != n || matrices[q].cols() != n)
      fail(ErrorKind::Structural,
           "view " + std::to_string(q) + " matrix is not a square self matrix over the labels");
  }
}

WeightVector normalize_scores(std::vector<double> scores, WeightMethod method,
                              const char* fallback_reason) {
  double sum = 0.0;
  for (double s : scores) sum += s;
  WeightVector w;
  w.method = method;
  if (sum > 0.0) {
    w.values.resize(scores.size());
    for (std::size_t q = 0; q < scores.size(); ++q) w.values[q] = scores[q] / sum;
  } else {
    std::cerr << "rfdis warning: " << fallback_reason << ", using uniform weights\n";
    w.values.assign(scores.size(), 1.0 / scores.size());
  }
  return w;
}

double loo_3nn_accuracy(const Matrix& dist, const std::vector<int>& labels, int class_count) {
  const int n = static_cast<int>(dist.rows());
  std::vector<std::pair<double, int>> order;
  order.reserve(n - 1);
  int correct = 0;
  std::vector<int> votes(class_count, 0);
  for (int i = 0; i < n; ++i) {
    order.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) order.emplace_back(dist(i, j), j);
    std::partial_sort(order.begin(), order.begin() + 3, order.end());
    std::fill(votes.begin(), votes.end(), 0);
    for (int t = 0; t < 3; ++t) ++votes[labels[order[t].second]];
    int best = 0;
    for (int c = 1; c < class_count; ++c)
      if (votes[c] > votes[best]) best = c;
    correct += best == labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / n;
}

}  // namespace

WeightVector weights_3nn(const std::vector<DissimilarityMatrix>& matrices,
                         const std::vector<int>& labels) {
  const std::size_t n = labels.size();
  check_self_matrices(matrices, n);
  if (n < 4) fail(ErrorKind::Parameter, "3NN weighting needs at least 4 instances");
  int class_count = 0;
  for (int y : labels) class_count = std::max(class_count, y + 1);
  std::vector<double> scores(matrices.size(), 0.0);
  for (std::size_t q = 0; q < matrices.size(); ++q)
    scores[q] = loo_3nn_accuracy(matrices[q].values, labels, class_count);
  return normalize_scores(std::move(scores), WeightMethod::Sw3nn, "all 3NN accuracies are zero");
}

double kernel_alignment(const Matrix& k1, const Matrix& k2) {
  if (k1.rows() != k2.rows() || k1.cols() != k2.cols())
    fail(ErrorKind::Structural, "kernel alignment requires matrices of identical shape");
  double dot = 0.0, norm1 = 0.0, norm2 = 0.0;
  const auto& a = k1.data();
  const auto& b = k2.data();
  for (std::size_t idx = 0; idx < a.size(); ++idx) {
    dot += a[idx] * b[idx];
    norm1 += a[idx] * a[idx];
    norm2 += b[idx] * b[idx];
  }
  if (!(norm1 > 0.0) || !(norm2 > 0.0))
    fail(ErrorKind::Degenerate, "kernel alignment is undefined for a zero-norm matrix");
  return dot / std::sqrt(norm1 * norm2);
}

Matrix ideal_kernel(const std::vector<int>& labels, int class_count) {
  if (class_count < 2) fail(ErrorKind::Parameter, "ideal kernel needs at least 2 classes");
  const std::size_t n = labels.size();
  const double off = -1.0 / (class_count - 1);
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) k(i, j) = labels[i] == labels[j] ? 1.0 : off;
  return k;
}

namespace {

std::vector<double> view_alignments(const std::vector<DissimilarityMatrix>& matrices,
                                    const std::vector<int>& labels, int class_count) {
  const std::size_t n = labels.size();
  check_self_matrices(matrices, n);
  const Matrix target = ideal_kernel(labels, class_count);
  std::vector<double> alignments(matrices.size(), 0.0);
  for (std::size_t q = 0; q < matrices.size(); ++q) {
    Matrix similarity(n, n);
    const auto& d = matrices[q].values.data();
    auto& s = similarity.data();
    for (std::size_t idx = 0; idx < d.size(); ++idx) s[idx] = 1.0 - d[idx];
    alignments[q] = kernel_alignment(similarity, target);
  }
  return alignments;
}

}  // namespace

WeightVector weights_ka(const std::vector<DissimilarityMatrix>& matrices,
                        const std::vector<int>& labels, int class_count) {
  const std::vector<double> alignments = view_alignments(matrices, labels, class_count);
  // Softmax, shifted by the max alignment so the result is exactly invariant
  // to a constant offset.
  double max_a = alignments[0];
  for (double a : alignments) max_a = std::max(max_a, a);
  std::vector<double> expd(alignments.size());
  double sum = 0.0;
  for (std::size_t q = 0; q < alignments.size(); ++q) {
    expd[q] = std::exp(alignments[q] - max_a);
    sum += expd[q];
  }
  WeightVector w;
  w.method = WeightMethod::SwKa;
  w.values.resize(alignments.size());
  for (std::size_t q = 0; q < alignments.size(); ++q) w.values[q] = expd[q] / sum;
  return w;
}

WeightVector weights_ka_linear(const std::vector<DissimilarityMatrix>& matrices,
                               const std::vector<int>& labels, int class_count) {
  return normalize_scores(view_alignments(matrices, labels, class_count), WeightMethod::SwKa,
                          "kernel alignments sum to zero");
}

WeightVector weights_oob(const std::vector<RandomForest>& view_forests, bool error_as_weight) {
  if (view_forests.empty()) fail(ErrorKind::Parameter, "no view forests given");
  std::vector<double> scores(view_forests.size(), 0.0);
  for (std::size_t q = 0; q < view_forests.size(); ++q) {
    const double err = oob_error(view_forests[q]).value_or(1.0);
    scores[q] = error_as_weight ? err : 1.0 - err;
  }
  return normalize_scores(std::move(scores), WeightMethod::SwOob,
                          error_as_weight ? "all view OOB errors are zero"
                                          : "all view OOB accuracies are zero");
}

}  // namespace rfdis
