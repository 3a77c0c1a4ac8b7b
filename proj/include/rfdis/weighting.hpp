#pragma once

#include <vector>

#include "rfdis/dissim.hpp"

namespace rfdis {

enum class WeightMethod { Uniform, Sw3nn, SwKa, SwOob };

const char* to_string(WeightMethod method);

/// Non-negative view weights summing to 1.
struct WeightVector {
  std::vector<double> values;
  WeightMethod method = WeightMethod::Uniform;

  int view_count() const { return static_cast<int>(values.size()); }
  void validate() const;
};

WeightVector uniform_weights(int view_count);

/// Leave-one-out 3NN accuracy per view, normalized to sum 1. Matrix entries
/// act as distances; distance ties go to the lowest index, vote ties to the
/// lowest class.
WeightVector weights_3nn(const std::vector<DissimilarityMatrix>& matrices,
                         const std::vector<int>& labels);

/// Frobenius cosine between two square matrices.
double kernel_alignment(const Matrix& k1, const Matrix& k2);

/// Target similarity matrix: 1 for same-label pairs, -1/(C-1) otherwise
/// (which is -1 in the binary case).
Matrix ideal_kernel(const std::vector<int>& labels, int class_count);

/// Kernel-alignment weights: similarities S = 1 - D are aligned against the
/// ideal kernel and the alignments pass through a softmax.
WeightVector weights_ka(const std::vector<DissimilarityMatrix>& matrices,
                        const std::vector<int>& labels, int class_count);

/// Linear normalization of the same alignments (diagnostic variant; the
/// softmax form above is the one the pipeline uses).
WeightVector weights_ka_linear(const std::vector<DissimilarityMatrix>& matrices,
                               const std::vector<int>& labels, int class_count);

/// OOB-based weights: by default each view weighs its forest's OOB accuracy,
/// normalized to sum 1. `error_as_weight` switches to the literal
/// error-proportional reading for comparison.
WeightVector weights_oob(const std::vector<RandomForest>& view_forests,
                         bool error_as_weight = false);

}  // namespace rfdis
