#include "rfdis/multiview.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rfdis {

void MultiViewDataset::validate(bool require_all_classes) const {
  if (views.empty()) fail(ErrorKind::Parameter, "dataset has no views");
  if (!view_names.empty() && view_names.size() != views.size())
    fail(ErrorKind::Structural, "view name count does not match view count");
  const std::size_t n = labels.size();
  if (n == 0) fail(ErrorKind::Parameter, "dataset has no instances");
  for (std::size_t q = 0; q < views.size(); ++q) {
    if (views[q].rows() != n)
      fail(ErrorKind::Structural, "view '" + (view_names.empty() ? std::to_string(q) : view_names[q]) +
                                      "' has " + std::to_string(views[q].rows()) +
                                      " rows, labels have " + std::to_string(n));
    if (views[q].cols() == 0)
      fail(ErrorKind::Structural, "view " + std::to_string(q) + " has no features");
    for (double v : views[q].data())
      if (!std::isfinite(v)) fail(ErrorKind::Validation, "non-finite value in view " + std::to_string(q));
  }
  if (class_count < 1) fail(ErrorKind::Parameter, "class_count must be positive");
  std::vector<int> seen(class_count, 0);
  for (int y : labels) {
    if (y < 0 || y >= class_count)
      fail(ErrorKind::Validation, "label " + std::to_string(y) + " outside {0.." +
                                      std::to_string(class_count - 1) + "}");
    seen[y] = 1;
  }
  if (require_all_classes)
    for (int c = 0; c < class_count; ++c)
      if (!seen[c]) fail(ErrorKind::Validation, "class " + std::to_string(c) + " has no instances");
}

MultiViewDataset MultiViewDataset::subset(std::span<const int> indices) const {
  MultiViewDataset out;
  out.class_count = class_count;
  out.view_names = view_names;
  out.labels.reserve(indices.size());
  for (int idx : indices) out.labels.push_back(labels[idx]);
  out.views.reserve(views.size());
  for (const Matrix& view : views) {
    Matrix sub(indices.size(), view.cols());
    for (std::size_t r = 0; r < indices.size(); ++r)
      std::copy(view.row(indices[r]), view.row(indices[r]) + view.cols(), sub.row(r));
    out.views.push_back(std::move(sub));
  }
  return out;
}

TrainingSet MultiViewDataset::view_training(int q) const {
  TrainingSet data;
  data.features = views[q];
  data.labels = labels;
  data.class_count = class_count;
  return data;
}

ViewStage fit_views(const MultiViewDataset& dataset, int trees, int kappa, std::uint64_t seed) {
  dataset.validate();
  ViewStage stage;
  stage.kappa = kappa;
  stage.view_names = dataset.view_names;
  if (stage.view_names.empty())
    for (int q = 0; q < dataset.view_count(); ++q)
      stage.view_names.push_back("view" + std::to_string(q));
  for (int q = 0; q < dataset.view_count(); ++q) {
    try {
      const int mtry = ceil_sqrt(static_cast<int>(dataset.views[q].cols()));
      RandomForest forest = train_forest(dataset.view_training(q), trees, mtry,
                                         derive_seed(seed, seed_stream::kView, q));
      HardnessTable hardness = kdn_hardness(forest, kappa);
      DissimilarityMatrix matrix = build_matrix(forest, Measure::rfd(kappa), &hardness);
      stage.forests.push_back(std::move(forest));
      stage.hardness.push_back(std::move(hardness));
      stage.matrices.push_back(std::move(matrix));
    } catch (const Error& e) {
      fail(e.kind(), "view '" + stage.view_names[q] + "': " + e.what());
    }
  }
  return stage;
}

std::uint64_t stage_fingerprint(const ViewStage& stage) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& forest : stage.forests) {
    const std::uint64_t f = forest_fingerprint(forest);
    h = fnv1a(&f, sizeof f, h);
  }
  for (const auto& matrix : stage.matrices)
    h = fnv1a(matrix.values.data().data(), matrix.values.data().size() * sizeof(double), h);
  return h;
}

DissimilarityMatrix joint_matrix(const std::vector<DissimilarityMatrix>& matrices,
                                 const WeightVector& weights) {
  if (matrices.empty()) fail(ErrorKind::Parameter, "no matrices to combine");
  if (weights.view_count() != static_cast<int>(matrices.size()))
    fail(ErrorKind::Structural, "weight count " + std::to_string(weights.view_count()) +
                                    " does not match matrix count " +
                                    std::to_string(matrices.size()));
  weights.validate();
  const std::size_t rows = matrices[0].rows();
  const std::size_t cols = matrices[0].cols();
  for (std::size_t q = 1; q < matrices.size(); ++q) {
    if (matrices[q].rows() != rows || matrices[q].cols() != cols)
      fail(ErrorKind::Structural, "matrix shape mismatch at view " + std::to_string(q));
    if (matrices[q].row_ids != matrices[0].row_ids || matrices[q].col_ids != matrices[0].col_ids)
      fail(ErrorKind::Structural, "matrix instance order mismatch at view " + std::to_string(q));
  }
  DissimilarityMatrix joint;
  joint.measure = matrices[0].measure;
  joint.row_ids = matrices[0].row_ids;
  joint.col_ids = matrices[0].col_ids;
  joint.values = Matrix(rows, cols);
  auto& out = joint.values.data();
  for (std::size_t q = 0; q < matrices.size(); ++q) {
    const double w = weights.values[q];
    const auto& in = matrices[q].values.data();
    for (std::size_t idx = 0; idx < out.size(); ++idx) out[idx] += w * in[idx];
  }
  return joint;
}

std::vector<double> fuse_vectors(const std::vector<std::vector<double>>& vectors,
                                 const WeightVector& weights) {
  if (vectors.empty()) fail(ErrorKind::Parameter, "no vectors to combine");
  if (weights.view_count() != static_cast<int>(vectors.size()))
    fail(ErrorKind::Structural, "weight count does not match vector count");
  const std::size_t n = vectors[0].size();
  for (const auto& v : vectors)
    if (v.size() != n) fail(ErrorKind::Structural, "projection length mismatch across views");
  std::vector<double> out(n, 0.0);
  for (std::size_t q = 0; q < vectors.size(); ++q) {
    const double w = weights.values[q];
    for (std::size_t j = 0; j < n; ++j) out[j] += w * vectors[q][j];
  }
  return out;
}

std::vector<std::vector<double>> MultiViewModel::project_views(
    const std::vector<std::vector<double>>& x_views) const {
  if (static_cast<int>(x_views.size()) != view_count())
    fail(ErrorKind::Structural, "expected " + std::to_string(view_count()) + " views, got " +
                                    std::to_string(x_views.size()));
  std::vector<std::vector<double>> projections;
  projections.reserve(x_views.size());
  for (int q = 0; q < view_count(); ++q) {
    const auto& forest = stage->forests[q];
    if (static_cast<int>(x_views[q].size()) != forest.feature_count())
      fail(ErrorKind::Structural, "view '" + stage->view_names[q] + "': vector has " +
                                      std::to_string(x_views[q].size()) + " features, expected " +
                                      std::to_string(forest.feature_count()));
    projections.push_back(
        project(forest, Measure::rfd(stage->kappa), x_views[q], &stage->hardness[q]));
  }
  return projections;
}

int MultiViewModel::predict(const std::vector<std::vector<double>>& x_views) const {
  const std::vector<double> fused = fuse_vectors(project_views(x_views), weights);
  return final_forest.predict(fused);
}

std::vector<DissimilarityMatrix> project_views_batch(const ViewStage& stage,
                                                     const std::vector<Matrix>& views) {
  if (static_cast<int>(views.size()) != stage.view_count())
    fail(ErrorKind::Structural, "dataset view count does not match the trained stage");
  std::vector<DissimilarityMatrix> projections;
  projections.reserve(stage.view_count());
  for (int q = 0; q < stage.view_count(); ++q) {
    if (static_cast<int>(views[q].cols()) != stage.forests[q].feature_count())
      fail(ErrorKind::Structural, "view '" + stage.view_names[q] + "': feature count mismatch");
    projections.push_back(build_matrix(stage.forests[q], Measure::rfd(stage.kappa),
                                       views[q], {}, &stage.hardness[q]));
  }
  return projections;
}

std::vector<DissimilarityMatrix> project_views_batch(const ViewStage& stage,
                                                     const MultiViewDataset& data) {
  return project_views_batch(stage, data.views);
}

std::vector<int> MultiViewModel::predict_batch(const std::vector<Matrix>& views) const {
  const std::vector<DissimilarityMatrix> projections = project_views_batch(*stage, views);
  const DissimilarityMatrix fused = joint_matrix(projections, weights);
  return final_forest.predict_batch(fused.values);
}

std::vector<int> MultiViewModel::predict_batch(const MultiViewDataset& data) const {
  return predict_batch(data.views);
}

MultiViewModel finalize_model(std::shared_ptr<const ViewStage> stage,
                              const std::vector<int>& labels, int class_count,
                              WeightVector weights, int final_trees, std::uint64_t final_seed) {
  weights.validate();
  if (weights.view_count() != stage->view_count())
    fail(ErrorKind::Structural, "weight count does not match view count");
  MultiViewModel model;
  model.stage = std::move(stage);
  model.labels = labels;
  model.class_count = class_count;
  model.weights = std::move(weights);
  model.joint = joint_matrix(model.stage->matrices, model.weights);

  TrainingSet joint_training;
  joint_training.features = model.joint.values;
  joint_training.labels = labels;
  joint_training.class_count = class_count;
  const int n = joint_training.instance_count();
  model.final_forest = train_forest(std::move(joint_training), final_trees, ceil_sqrt(n), final_seed);
  return model;
}

MultiViewModel train_multiview(const MultiViewDataset& dataset, const MultiViewParams& params,
                               std::uint64_t seed, std::optional<WeightVector> weights) {
  auto stage = std::make_shared<const ViewStage>(
      fit_views(dataset, params.trees, params.kappa, seed));
  WeightVector w = weights ? std::move(*weights) : uniform_weights(dataset.view_count());
  const std::uint64_t full_mask = (1ull << dataset.view_count()) - 1;
  return finalize_model(std::move(stage), dataset.labels, dataset.class_count, std::move(w),
                        params.final_tree_count(),
                        derive_seed(seed, seed_stream::kFinal, full_mask));
}

}  // namespace rfdis
