#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rfdis/dissim.hpp"
#include "rfdis/weighting.hpp"

namespace rfdis {

/// Q feature matrices describing the same n instances, plus one label vector.
struct MultiViewDataset {
  std::vector<Matrix> views;  // view q is n x m_q
  std::vector<int> labels;
  std::vector<std::string> view_names;
  int class_count = 0;

  int instance_count() const { return static_cast<int>(labels.size()); }
  int view_count() const { return static_cast<int>(views.size()); }
  const std::string& name_of(int q) const { return view_names[q]; }

  /// `require_all_classes` is relaxed for test halves of a split, whose labels
  /// are only used for scoring.
  void validate(bool require_all_classes = true) const;
  MultiViewDataset subset(std::span<const int> indices) const;
  TrainingSet view_training(int q) const;
};

/// The shared first stage: per-view forests, hardness tables and RFD self
/// matrices. Every combination method downstream consumes the same stage.
struct ViewStage {
  std::vector<RandomForest> forests;
  std::vector<HardnessTable> hardness;
  std::vector<DissimilarityMatrix> matrices;
  std::vector<std::string> view_names;
  int kappa = 0;

  int view_count() const { return static_cast<int>(forests.size()); }
};

/// Trains one forest per view (mtry = ceil(sqrt(m_q)), seed derived from
/// (seed, view index)) and builds the RFD matrices.
ViewStage fit_views(const MultiViewDataset& dataset, int trees, int kappa, std::uint64_t seed);

std::uint64_t stage_fingerprint(const ViewStage& stage);

/// Entrywise convex combination of per-view matrices.
DissimilarityMatrix joint_matrix(const std::vector<DissimilarityMatrix>& matrices,
                                 const WeightVector& weights);

/// Same combination for projection vectors.
std::vector<double> fuse_vectors(const std::vector<std::vector<double>>& vectors,
                                 const WeightVector& weights);

struct MultiViewParams {
  int trees = 512;
  int final_trees = 0;  // 0 = same as trees
  int kappa = 5;

  int final_tree_count() const { return final_trees > 0 ? final_trees : trees; }
};

struct MultiViewModel {
  std::shared_ptr<const ViewStage> stage;
  std::vector<int> labels;
  int class_count = 0;
  WeightVector weights;
  DissimilarityMatrix joint;
  RandomForest final_forest;

  int view_count() const { return stage->view_count(); }

  /// Per-view dissimilarity projections of one instance (prediction step 1).
  std::vector<std::vector<double>> project_views(
      const std::vector<std::vector<double>>& x_views) const;

  /// Steps 1-3: project per view, fuse with the model weights, classify.
  int predict(const std::vector<std::vector<double>>& x_views) const;

  std::vector<int> predict_batch(const MultiViewDataset& data) const;
  std::vector<int> predict_batch(const std::vector<Matrix>& views) const;
};

/// Algorithm: per-view forests and RFD matrices, weighted joint matrix,
/// final forest trained on the joint rows (mtry = ceil(sqrt(n))).
MultiViewModel train_multiview(const MultiViewDataset& dataset, const MultiViewParams& params,
                               std::uint64_t seed,
                               std::optional<WeightVector> weights = std::nullopt);

/// Builds the joint matrix and final forest on top of an existing stage, so
/// several weightings can share one set of view forests.
MultiViewModel finalize_model(std::shared_ptr<const ViewStage> stage,
                              const std::vector<int>& labels, int class_count,
                              WeightVector weights, int final_trees, std::uint64_t final_seed);

/// Per-view projections of a whole test set, reusable across methods.
std::vector<DissimilarityMatrix> project_views_batch(const ViewStage& stage,
                                                     const std::vector<Matrix>& views);
std::vector<DissimilarityMatrix> project_views_batch(const ViewStage& stage,
                                                     const MultiViewDataset& data);

}  // namespace rfdis
