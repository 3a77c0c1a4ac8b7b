#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rfdis/dcs.hpp"
#include "rfdis/multiview.hpp"

namespace rfdis {

/// Declarative dataset description: one numeric CSV per view (instances as
/// rows), one label CSV, and the expected counts.
struct DatasetManifest {
  std::string name;
  std::vector<std::string> view_paths;  // resolved against the manifest directory
  std::string label_path;
  int instances = 0;
  int view_count = 0;
  int classes = 0;

  static DatasetManifest load(const std::string& path);
  /// Relaxed form for prediction inputs: labels, instances and classes may be
  /// absent (left at "" / 0).
  static DatasetManifest load(const std::string& path, bool require_labels);
};

/// Reads and validates the files a manifest points at.
MultiViewDataset load_dataset(const DatasetManifest& manifest);

/// Majority class count over minority class count.
double imbalance_ratio(const std::vector<int>& labels);

/// Per class, ceil(fraction * n_c) instances go to the train side, sampled
/// without replacement; both sides keep ascending instance order.
std::pair<std::vector<int>, std::vector<int>> stratified_split_indices(
    const std::vector<int>& labels, double fraction, std::uint64_t seed);

std::pair<MultiViewDataset, MultiViewDataset> stratified_split(const MultiViewDataset& dataset,
                                                               double fraction,
                                                               std::uint64_t seed);

enum class MethodId { Avg, Sw3nn, SwKa, SwOob, DcsRfd };

const char* to_string(MethodId method);
MethodId parse_method(const std::string& name);
std::vector<MethodId> all_methods();

struct ExperimentConfig {
  std::vector<std::string> manifest_paths;
  std::vector<MethodId> methods = all_methods();
  int trees = 512;
  int final_trees = 0;  // 0 = same as trees
  int runs = 10;
  double train_fraction = 0.5;
  int region_k = 7;
  int kappa = 5;
  std::uint64_t seed = 42;
  std::string out_prefix = "report";
  bool emit_transcripts = false;
  int dcs_view_cap = kDefaultPoolViewCap;
  CompetenceCriterion competence = CompetenceCriterion::OobAccuracy;
  bool oob_error_as_weight = false;  // literal reading of the SW_OOB rule

  static ExperimentConfig from_json_file(const std::string& path);
  void validate() const;
  int final_tree_count() const { return final_trees > 0 ? final_trees : trees; }
};

struct SignTestResult {
  int effective_n = 0;  // wins + losses after splitting ties
  int adjusted_wins = 0;
  int threshold = 0;  // minimum wins for significance; effective_n + 1 if unattainable
  double alpha = 0.05;
  bool significant = false;
};

/// One-sided sign test against a fair coin. Ties split evenly, the odd tie
/// going to the losses.
SignTestResult sign_test(int wins, int ties, int losses, double alpha = 0.05);

/// Smallest w with P(Bin(n, 1/2) >= w) <= alpha, from exact enumeration.
int sign_test_threshold(int n, double alpha);

struct MethodRunResult {
  double accuracy = 0.0;
  std::vector<double> weights;  // per-view weights; empty for dcs_rfd
  std::uint64_t stage_fingerprint = 0;
};

struct RunResult {
  int run_index = 0;
  std::uint64_t run_seed = 0;
  std::uint64_t split_seed = 0;
  int train_size = 0;
  int test_size = 0;
  std::map<std::string, MethodRunResult> methods;
  std::vector<SelectionRecord> dcs_transcript;  // filled when transcripts are on
};

struct MethodSummary {
  std::vector<double> per_run;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
  double rank = 0.0;    // midrank within the dataset, 1 = best mean accuracy
};

struct DatasetResult {
  std::string name;
  std::vector<RunResult> runs;
  std::map<std::string, MethodSummary> summary;
};

struct BaselineComparison {
  int wins = 0;
  int ties = 0;
  int losses = 0;
  SignTestResult sign;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<DatasetResult> datasets;
  std::map<std::string, double> average_ranks;
  std::map<std::string, BaselineComparison> vs_baseline;  // empty when avg not run
};

/// The full protocol: per dataset and run, one stratified split, one shared
/// view stage, and every requested combination method evaluated on the same
/// test projections.
RunReport run_experiment(const ExperimentConfig& config);

std::string render_report_csv(const RunReport& report);
std::string render_report_json(const RunReport& report);
void write_report_files(const RunReport& report);  // out_prefix + {.csv,.json}
void print_report_table(const RunReport& report, std::ostream& out);

}  // namespace rfdis
