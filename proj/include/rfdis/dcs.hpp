#pragma once

#include <optional>
#include <vector>

#include "rfdis/multiview.hpp"

namespace rfdis {

/// Non-empty subset of views, encoded as a bit mask in [1, 2^Q - 1].
struct SubsetMask {
  std::uint32_t bits = 0;
  int view_count = 0;

  bool contains(int q) const { return (bits >> q) & 1u; }
  int cardinality() const { return __builtin_popcount(bits); }
  std::vector<int> selected() const;
  static SubsetMask full(int view_count) {
    return {static_cast<std::uint32_t>((1u << view_count) - 1), view_count};
  }
};

/// One pool entry: the mean joint matrix of its view subset and a forest
/// trained on it, plus the hardness table that forest's RFD measure needs.
struct CandidateClassifier {
  SubsetMask mask;
  DissimilarityMatrix joint;
  HardnessTable hardness;
  RandomForest forest;
};

struct CandidatePool {
  int view_count = 0;
  std::vector<CandidateClassifier> candidates;  // candidates[mask - 1]

  int size() const { return static_cast<int>(candidates.size()); }
  const CandidateClassifier& by_mask(std::uint32_t mask) const { return candidates[mask - 1]; }
  const CandidateClassifier& full_candidate() const { return candidates.back(); }
};

inline constexpr int kDefaultPoolViewCap = 12;  // 4095 candidates

enum class CompetenceCriterion {
  OobAccuracy,      // default: maximize OOB accuracy on the region
  OobErrorLiteral,  // argmax of the OOB error itself, for comparison
  Lca,              // local accuracy on same-predicted-class region instances
};

/// One candidate per non-empty view subset; candidate forests derive their
/// seeds from (seed, mask), so the full-mask candidate matches the final
/// forest a uniformly weighted model trains from the same master seed.
CandidatePool generate_pool(const std::vector<DissimilarityMatrix>& view_matrices,
                            const std::vector<int>& labels, int class_count, int trees,
                            int kappa, std::uint64_t seed, int view_cap = kDefaultPoolViewCap);

/// Mean of the masked views' projection vectors.
std::vector<double> project_candidate(const CandidateClassifier& candidate,
                                      const std::vector<std::vector<double>>& view_projections);

/// The k training instances with the smallest RFD dissimilarity to x_proj in
/// the candidate's joint space; distance ties go to the lowest index.
std::vector<int> region_of_competence(const CandidateClassifier& candidate,
                                      std::span<const double> x_proj, int k);

/// OOB accuracy of the candidate on the region; nullopt when no region
/// instance has an OOB vote.
std::optional<double> competence(const CandidateClassifier& candidate,
                                 std::span<const int> region);

struct SelectionRecord {
  int instance_id = -1;
  std::uint32_t chosen_mask = 0;
  bool fallback = false;  // every candidate was undefined
  int prediction = -1;
  std::vector<std::optional<double>> competences;  // indexed like the pool
};

/// Scores every candidate on the instance's region and predicts with the most
/// competent one. Ties prefer larger subsets, then the lowest mask.
int dcs_predict(const CandidatePool& pool,
                const std::vector<std::vector<double>>& view_projections, int k,
                CompetenceCriterion criterion = CompetenceCriterion::OobAccuracy,
                SelectionRecord* record = nullptr);

/// Stage + pool bundle for end-to-end dynamic selection.
struct DcsModel {
  std::shared_ptr<const ViewStage> stage;
  std::vector<int> labels;
  int class_count = 0;
  int region_k = 7;
  CompetenceCriterion criterion = CompetenceCriterion::OobAccuracy;
  CandidatePool pool;

  int view_count() const { return stage->view_count(); }
  int predict(const std::vector<std::vector<double>>& x_views,
              SelectionRecord* record = nullptr) const;
  std::vector<int> predict_batch(const std::vector<Matrix>& views,
                                 std::vector<SelectionRecord>* records = nullptr) const;
  std::vector<int> predict_batch(const MultiViewDataset& data,
                                 std::vector<SelectionRecord>* records = nullptr) const;
};

DcsModel train_dcs(const MultiViewDataset& dataset, const MultiViewParams& params, int region_k,
                   std::uint64_t seed);

/// Batch prediction from precomputed per-view projection blocks (one r x n
/// matrix per view), shared with the other methods in a benchmark run.
std::vector<int> dcs_predict_batch(const CandidatePool& pool,
                                   const std::vector<DissimilarityMatrix>& view_projections,
                                   int k,
                                   CompetenceCriterion criterion = CompetenceCriterion::OobAccuracy,
                                   std::vector<SelectionRecord>* records = nullptr);

}  // namespace rfdis
