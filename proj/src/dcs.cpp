#include "rfdis/dcs.hpp"

#include <algorithm>
#include <numeric>

namespace rfdis {

std::vector<int> SubsetMask::selected() const {
  std::vector<int> views;
  for (int q = 0; q < view_count; ++q)
    if (contains(q)) views.push_back(q);
  return views;
}

CandidatePool generate_pool(const std::vector<DissimilarityMatrix>& view_matrices,
                            const std::vector<int>& labels, int class_count, int trees,
                            int kappa, std::uint64_t seed, int view_cap) {
  const int q_count = static_cast<int>(view_matrices.size());
  if (q_count < 1) fail(ErrorKind::Parameter, "pool needs at least one view matrix");
  if (q_count > 30)
    fail(ErrorKind::Resource, "subset masks support at most 30 views");
  if (q_count > view_cap)
    fail(ErrorKind::Resource, "pool over " + std::to_string(q_count) +
                                  " views would hold " + std::to_string((1u << q_count) - 1) +
                                  " candidates; raise view_cap explicitly to allow this");
  const std::size_t n = labels.size();
  for (const auto& matrix : view_matrices)
    if (matrix.rows() != n || matrix.cols() != n)
      fail(ErrorKind::Structural, "view matrices must be square self matrices over the labels");

  CandidatePool pool;
  pool.view_count = q_count;
  const std::uint32_t mask_count = (1u << q_count) - 1;
  pool.candidates.reserve(mask_count);
  for (std::uint32_t mask = 1; mask <= mask_count; ++mask) {
    CandidateClassifier candidate;
    candidate.mask = {mask, q_count};
    const std::vector<int> selected = candidate.mask.selected();
    std::vector<DissimilarityMatrix> chosen;
    chosen.reserve(selected.size());
    for (int q : selected) chosen.push_back(view_matrices[q]);
    candidate.joint = joint_matrix(chosen, uniform_weights(static_cast<int>(selected.size())));

    TrainingSet joint_training;
    joint_training.features = candidate.joint.values;
    joint_training.labels = labels;
    joint_training.class_count = class_count;
    candidate.forest = train_forest(std::move(joint_training), trees,
                                    ceil_sqrt(static_cast<int>(n)),
                                    derive_seed(seed, seed_stream::kFinal, mask));
    candidate.hardness = kdn_hardness(candidate.forest, kappa);
    pool.candidates.push_back(std::move(candidate));
  }
  return pool;
}

std::vector<double> project_candidate(const CandidateClassifier& candidate,
                                      const std::vector<std::vector<double>>& view_projections) {
  if (static_cast<int>(view_projections.size()) != candidate.mask.view_count)
    fail(ErrorKind::Structural, "expected one projection per view");
  const std::vector<int> selected = candidate.mask.selected();
  std::vector<std::vector<double>> chosen;
  chosen.reserve(selected.size());
  for (int q : selected) chosen.push_back(view_projections[q]);
  return fuse_vectors(chosen, uniform_weights(static_cast<int>(selected.size())));
}

std::vector<int> region_of_competence(const CandidateClassifier& candidate,
                                      std::span<const double> x_proj, int k) {
  const int n = candidate.forest.instance_count();
  if (k < 1 || k > n)
    fail(ErrorKind::Parameter, "region size " + std::to_string(k) + " outside [1, " +
                                   std::to_string(n) + "]");
  const std::vector<double> dissim = project(candidate.forest, Measure::rfd(candidate.hardness.kappa),
                                             x_proj, &candidate.hardness);
  std::vector<std::pair<double, int>> order(n);
  for (int j = 0; j < n; ++j) order[j] = {dissim[j], j};
  std::partial_sort(order.begin(), order.begin() + k, order.end());
  std::vector<int> region(k);
  for (int t = 0; t < k; ++t) region[t] = order[t].second;
  return region;
}

std::optional<double> competence(const CandidateClassifier& candidate,
                                 std::span<const int> region) {
  if (region.empty()) fail(ErrorKind::Parameter, "empty region of competence");
  const std::optional<double> err = oob_error(candidate.forest, region);
  if (!err) return std::nullopt;
  return 1.0 - *err;
}

namespace {

std::optional<double> competence_lca(const CandidateClassifier& candidate,
                                     std::span<const int> region, int predicted) {
  const auto& labels = candidate.forest.training->labels;
  int same_class = 0;
  int agree = 0;
  for (int j : region) {
    const int vote = candidate.forest.oob_votes[j];
    if (vote < 0) continue;
    if (labels[j] != predicted) continue;
    ++same_class;
    agree += vote == predicted ? 1 : 0;
  }
  if (same_class == 0) return std::nullopt;
  return static_cast<double>(agree) / same_class;
}

std::optional<double> score_candidate(const CandidateClassifier& candidate,
                                      const std::vector<double>& fused, int k,
                                      CompetenceCriterion criterion) {
  const std::vector<int> region = region_of_competence(candidate, fused, k);
  switch (criterion) {
    case CompetenceCriterion::OobAccuracy:
      return competence(candidate, region);
    case CompetenceCriterion::OobErrorLiteral:
      return oob_error(candidate.forest, region);
    case CompetenceCriterion::Lca:
      return competence_lca(candidate, region, candidate.forest.predict(fused));
  }
  return std::nullopt;
}

}  // namespace

int dcs_predict(const CandidatePool& pool,
                const std::vector<std::vector<double>>& view_projections, int k,
                CompetenceCriterion criterion, SelectionRecord* record) {
  if (pool.candidates.empty()) fail(ErrorKind::Parameter, "empty candidate pool");
  const int count = pool.size();
  std::vector<std::vector<double>> fused(count);
  std::vector<std::optional<double>> scores(count);
  for (int i = 0; i < count; ++i) {
    const CandidateClassifier& candidate = pool.candidates[i];
    fused[i] = project_candidate(candidate, view_projections);
    scores[i] = score_candidate(candidate, fused[i], k, criterion);
  }

  int chosen = -1;
  for (int i = 0; i < count; ++i) {
    if (!scores[i]) continue;
    if (chosen < 0) {
      chosen = i;
      continue;
    }
    const double best = *scores[chosen];
    const double cur = *scores[i];
    if (cur > best ||
        (cur == best &&
         (pool.candidates[i].mask.cardinality() > pool.candidates[chosen].mask.cardinality()))) {
      chosen = i;  // equal cardinality keeps the lower mask, i.e. the incumbent
    }
  }
  bool fallback = false;
  if (chosen < 0) {
    chosen = count - 1;  // the all-views candidate
    fallback = true;
  }
  const int prediction = pool.candidates[chosen].forest.predict(fused[chosen]);
  if (record) {
    record->chosen_mask = pool.candidates[chosen].mask.bits;
    record->fallback = fallback;
    record->prediction = prediction;
    record->competences = std::move(scores);
  }
  return prediction;
}

std::vector<int> dcs_predict_batch(const CandidatePool& pool,
                                   const std::vector<DissimilarityMatrix>& view_projections,
                                   int k, CompetenceCriterion criterion,
                                   std::vector<SelectionRecord>* records) {
  if (view_projections.size() != static_cast<std::size_t>(pool.view_count))
    fail(ErrorKind::Structural, "expected one projection block per view");
  const std::size_t count = view_projections.empty() ? 0 : view_projections[0].rows();
  for (const auto& block : view_projections)
    if (block.rows() != count)
      fail(ErrorKind::Structural, "projection blocks disagree on the instance count");
  std::vector<int> out(count, -1);
  if (records) records->assign(count, SelectionRecord{});
  parallel_for(count, [&](std::size_t t) {
    std::vector<std::vector<double>> projections;
    projections.reserve(view_projections.size());
    for (const auto& block : view_projections) {
      const double* row = block.values.row(t);
      projections.emplace_back(row, row + block.cols());
    }
    SelectionRecord* rec = records ? &(*records)[t] : nullptr;
    out[t] = dcs_predict(pool, projections, k, criterion, rec);
    if (rec) rec->instance_id = static_cast<int>(t);
  });
  return out;
}

int DcsModel::predict(const std::vector<std::vector<double>>& x_views,
                      SelectionRecord* record) const {
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
  return dcs_predict(pool, projections, region_k, criterion, record);
}

std::vector<int> DcsModel::predict_batch(const std::vector<Matrix>& views,
                                         std::vector<SelectionRecord>* records) const {
  const std::vector<DissimilarityMatrix> projections = project_views_batch(*stage, views);
  return dcs_predict_batch(pool, projections, region_k, criterion, records);
}

std::vector<int> DcsModel::predict_batch(const MultiViewDataset& data,
                                         std::vector<SelectionRecord>* records) const {
  return predict_batch(data.views, records);
}

DcsModel train_dcs(const MultiViewDataset& dataset, const MultiViewParams& params, int region_k,
                   std::uint64_t seed) {
  DcsModel model;
  model.stage = std::make_shared<const ViewStage>(
      fit_views(dataset, params.trees, params.kappa, seed));
  model.labels = dataset.labels;
  model.class_count = dataset.class_count;
  model.region_k = region_k;
  model.pool = generate_pool(model.stage->matrices, dataset.labels, dataset.class_count,
                             params.final_tree_count(), params.kappa, seed);
  return model;
}

}  // namespace rfdis
