// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Criterion 8 is skipped (not failed) when no real LSVT-format dataset is
// supplied via RFDIS_LSVT_MANIFEST or ./data/lsvt_manifest.json.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "oracle.hpp"
#include "rfdis/bench.hpp"
#include "rfdis/csv.hpp"
#include "rfdis/synthetic.hpp"

using namespace rfdis;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  enum Kind { Pass, Fail, Skip } kind = Fail;
  std::string detail;
};

Outcome pass(std::string detail = "") { return {Outcome::Pass, std::move(detail)}; }
Outcome failure(std::string detail) { return {Outcome::Fail, std::move(detail)}; }
Outcome skip(std::string detail) { return {Outcome::Skip, std::move(detail)}; }

TrainingSet random_training(int n, int m, int classes, std::uint64_t seed) {
  Rng rng(seed);
  Matrix features(n, m);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = i < classes ? i : static_cast<int>(rng.next_below(classes));
    for (int f = 0; f < m; ++f) features(i, f) = rng.next_double();
  }
  return TrainingSet::make(std::move(features), std::move(labels));
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& labels) {
  int ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(ok) / pred.size();
}

// ---- C1: dissimilarity oracle suite -----------------------------------------

Outcome criterion_oracle() {
  Rng rng(20240801);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 8 + static_cast<int>(rng.next_below(23));   // <= 30
    const int m = 2 + static_cast<int>(rng.next_below(4));    // <= 5
    const int trees = 1 + static_cast<int>(rng.next_below(8));
    const int classes = 2 + static_cast<int>(rng.next_below(2));
    const int kappa = std::min(5, n - 1);
    const TrainingSet data = random_training(n, m, classes, rng.next());
    const RandomForest forest = train_forest(data, trees, 1 + static_cast<int>(rng.next_below(m)),
                                             rng.next());
    const HardnessTable hardness = kdn_hardness(forest, kappa);
    const Matrix& rows = forest.training->features;

    if (build_matrix(forest, Measure::plain()).values !=
        oracle::dissimilarity_matrix(forest, rows, Measure::plain()))
      return failure("plain measure mismatch at trial " + std::to_string(trial));
    if (build_matrix(forest, Measure::path_length(0.5)).values !=
        oracle::dissimilarity_matrix(forest, rows, Measure::path_length(0.5)))
      return failure("path-length measure mismatch at trial " + std::to_string(trial));
    if (build_matrix(forest, Measure::rfd(kappa), &hardness).values !=
        oracle::dissimilarity_matrix(forest, rows, Measure::rfd(kappa)))
      return failure("rfd measure mismatch at trial " + std::to_string(trial));
  }
  return pass("50 instances, 3 measures, exact");
}

// ---- C2: invariant suite -----------------------------------------------------

Outcome criterion_invariants() {
  Rng rng(7070);
  int checks = 0;
  const auto expect = [&](bool ok, const char* what) {
    ++checks;
    if (!ok) throw std::runtime_error(what);
  };

  try {
    // Range / diagonal / symmetry / reflexivity over random forests.
    for (int trial = 0; trial < 120; ++trial) {
      const int n = 8 + static_cast<int>(rng.next_below(10));
      const TrainingSet data = random_training(n, 3, 2, rng.next());
      const RandomForest forest = train_forest(data, 4, 2, rng.next());
      const int kappa = std::min(5, n - 1);
      const HardnessTable hardness = kdn_hardness(forest, kappa);
      const Matrix plain = build_matrix(forest, Measure::plain()).values;
      const Matrix rfd_m = build_matrix(forest, Measure::rfd(kappa), &hardness).values;
      bool range_ok = true, diag_ok = true, sym_ok = true;
      for (int i = 0; i < n; ++i) {
        diag_ok = diag_ok && plain(i, i) == 0.0 && rfd_m(i, i) == 0.0;
        for (int j = 0; j < n; ++j) {
          range_ok = range_ok && plain(i, j) >= 0.0 && plain(i, j) <= 1.0 && rfd_m(i, j) >= 0.0 &&
                     rfd_m(i, j) <= 1.0;
          sym_ok = sym_ok && plain(i, j) == plain(j, i);
        }
      }
      expect(range_ok, "value out of [0,1]");
      expect(diag_ok, "nonzero diagonal");
      expect(sym_ok, "plain asymmetry");
    }

    // Weight simplex constraints from all three estimators.
    for (int trial = 0; trial < 40; ++trial) {
      const int n = 12;
      MultiViewDataset data;
      data.class_count = 2;
      data.labels.resize(n);
      for (int i = 0; i < n; ++i) data.labels[i] = i % 2;
      for (int q = 0; q < 2; ++q) {
        Matrix view(n, 3);
        for (auto& v : view.data()) v = rng.next_double();
        data.views.push_back(std::move(view));
        data.view_names.push_back("v" + std::to_string(q));
      }
      const ViewStage stage = fit_views(data, 4, 3, rng.next());
      for (const WeightVector& w :
           {weights_3nn(stage.matrices, data.labels),
            weights_ka(stage.matrices, data.labels, 2), weights_oob(stage.forests)}) {
        w.validate();
        ++checks;
      }
    }

    // Joint-matrix convexity and linearity at 1e-12.
    for (int trial = 0; trial < 700; ++trial) {
      const int n = 6;
      std::vector<DissimilarityMatrix> mats(2);
      for (auto& m : mats) {
        m.values = Matrix(n, n);
        for (auto& v : m.values.data()) v = rng.next_double();
        m.row_ids.resize(n);
        std::iota(m.row_ids.begin(), m.row_ids.end(), 0);
        m.col_ids = m.row_ids;
      }
      const double t = rng.next_double();
      WeightVector w1{{t, 1.0 - t}, WeightMethod::Uniform};
      WeightVector w2{{1.0 - t, t}, WeightMethod::Uniform};
      const double lambda = rng.next_double();
      WeightVector mixed{{lambda * t + (1 - lambda) * (1 - t),
                          lambda * (1 - t) + (1 - lambda) * t},
                         WeightMethod::Uniform};
      const Matrix j1 = joint_matrix(mats, w1).values;
      const Matrix j2 = joint_matrix(mats, w2).values;
      const Matrix jm = joint_matrix(mats, mixed).values;
      bool ok = true;
      for (std::size_t idx = 0; idx < jm.data().size(); ++idx) {
        const double expected = lambda * j1.data()[idx] + (1 - lambda) * j2.data()[idx];
        ok = ok && std::abs(jm.data()[idx] - expected) <= 1e-12;
        ok = ok && jm.data()[idx] >= 0.0 && jm.data()[idx] <= 1.0;
      }
      expect(ok, "joint linearity violated");
    }

    // Pool cardinality for Q = 1..6.
    for (int round = 0; round < 4; ++round) {
      for (int q_count = 1; q_count <= 6; ++q_count) {
        MultiViewDataset data;
        data.class_count = 2;
        const int n = 10;
        data.labels.resize(n);
        for (int i = 0; i < n; ++i) data.labels[i] = i % 2;
        for (int q = 0; q < q_count; ++q) {
          Matrix view(n, 2);
          for (auto& v : view.data()) v = rng.next_double();
          data.views.push_back(std::move(view));
          data.view_names.push_back("v" + std::to_string(q));
        }
        const ViewStage stage = fit_views(data, 2, 3, rng.next());
        const CandidatePool pool =
            generate_pool(stage.matrices, data.labels, 2, 2, 3, rng.next());
        expect(pool.size() == (1 << q_count) - 1, "pool cardinality");
        for (int i = 0; i < pool.size(); ++i)
          expect(pool.candidates[i].mask.bits != 0, "empty mask in pool");
      }
    }
  } catch (const std::exception& e) {
    return failure(e.what());
  }
  if (checks < 1000)
    return failure("only " + std::to_string(checks) + " checks executed");
  return pass(std::to_string(checks) + " randomized checks");
}

// ---- C3: OOB statistics ------------------------------------------------------

Outcome criterion_oob_fraction() {
  Rng rng(5150);
  const int n = 1000;
  Matrix features(n, 8);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = i % 2;
    for (int f = 0; f < 8; ++f)
      features(i, f) = (f == 0 ? 3.0 * labels[i] : 0.0) + rng.next_gaussian();
  }
  const TrainingSet data = TrainingSet::make(std::move(features), std::move(labels));
  const RandomForest forest = train_forest(data, 512, 3, 99);
  int in_band = 0;
  for (const auto& mask : forest.bootstrap_masks) {
    const double oob =
        1.0 - static_cast<double>(std::accumulate(mask.begin(), mask.end(), 0)) / n;
    in_band += (oob >= 0.33 && oob <= 0.40) ? 1 : 0;
  }
  const double share = static_cast<double>(in_band) / forest.tree_count();
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d/%d trees in [0.33, 0.40]", in_band, forest.tree_count());
  return share >= 0.99 ? pass(buf) : failure(buf);
}

// ---- C4: kernel alignment checks ---------------------------------------------

Outcome criterion_kernel_alignment() {
  Rng rng(11);
  Matrix k(8, 8);
  for (auto& v : k.data()) v = rng.next_double() - 0.5;
  if (std::abs(kernel_alignment(k, k) - 1.0) > 1e-12) return failure("A(K,K) != 1");
  Matrix neg = k;
  for (auto& v : neg.data()) v = -v;
  if (std::abs(kernel_alignment(k, neg) + 1.0) > 1e-12) return failure("A(K,-K) != -1");

  std::vector<int> labels(10);
  for (int i = 0; i < 10; ++i) labels[i] = i % 5;
  const Matrix ideal = ideal_kernel(labels, 5);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      if (labels[i] != labels[j] && ideal(i, j) != -0.25)
        return failure("C=5 off-diagonal is not exactly -0.25");

  MultiViewDataset data;
  data.class_count = 2;
  data.labels.resize(12);
  for (int i = 0; i < 12; ++i) data.labels[i] = i % 2;
  for (int q = 0; q < 3; ++q) {
    Matrix view(12, 2);
    for (auto& v : view.data()) v = rng.next_double();
    data.views.push_back(std::move(view));
    data.view_names.push_back("v" + std::to_string(q));
  }
  const ViewStage stage = fit_views(data, 4, 3, 77);
  const WeightVector w = weights_ka(stage.matrices, data.labels, 2);
  double sum = 0.0;
  for (double v : w.values) sum += v;
  if (std::abs(sum - 1.0) > 1e-9) return failure("softmax weights do not sum to 1");
  return pass();
}

// ---- C5: synthetic complementarity benchmark ----------------------------------

Outcome criterion_complementarity() {
  const MultiViewParams params{.trees = 128, .kappa = 5};
  int good_seeds = 0;
  for (int s = 0; s < 10; ++s) {
    const MultiViewDataset data = make_complementary_views(400, 9000 + s);
    const auto [train_idx, test_idx] =
        stratified_split_indices(data.labels, 0.5, derive_seed(9000 + s, seed_stream::kSplit, 0));
    const MultiViewDataset train = data.subset(train_idx);
    const MultiViewDataset test = data.subset(test_idx);

    const MultiViewModel fused = train_multiview(train, params, 40 + s);
    const double fused_acc = accuracy(fused.predict_batch(test), test.labels);
    double best_single = 0.0;
    for (int q = 0; q < 2; ++q) {
      MultiViewDataset train_q{{train.views[q]}, train.labels, {train.view_names[q]},
                               train.class_count};
      MultiViewDataset test_q{{test.views[q]}, test.labels, {test.view_names[q]},
                              test.class_count};
      const MultiViewModel single = train_multiview(train_q, params, 40 + s);
      best_single = std::max(best_single, accuracy(single.predict_batch(test_q), test.labels));
    }
    if (fused_acc >= best_single - 0.01) ++good_seeds;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "fusion held in %d/10 seeds", good_seeds);
  return good_seeds >= 8 ? pass(buf) : failure(buf);
}

// ---- C6: instance-dependent relevance benchmark --------------------------------

Outcome criterion_instance_relevance() {
  const int trees = 128;
  const int kappa = 5;
  double avg_sum = 0.0;
  double dcs_sum = 0.0;
  for (int s = 0; s < 10; ++s) {
    const MultiViewDataset data = make_instance_relevance(400, 8600 + s);
    const std::uint64_t run_seed = derive_seed(60 + s, seed_stream::kRun, 0);
    const auto [train_idx, test_idx] =
        stratified_split_indices(data.labels, 0.5, derive_seed(run_seed, seed_stream::kSplit, 0));
    const MultiViewDataset train = data.subset(train_idx);
    const MultiViewDataset test = data.subset(test_idx);

    auto stage = std::make_shared<const ViewStage>(fit_views(train, trees, kappa, run_seed));
    const std::vector<DissimilarityMatrix> projections = project_views_batch(*stage, test);
    const std::uint64_t full_mask = (1ull << train.view_count()) - 1;
    const MultiViewModel avg =
        finalize_model(stage, train.labels, train.class_count, uniform_weights(3), trees,
                       derive_seed(run_seed, seed_stream::kFinal, full_mask));
    avg_sum += accuracy(
        avg.final_forest.predict_batch(joint_matrix(projections, avg.weights).values),
        test.labels);

    const CandidatePool pool =
        generate_pool(stage->matrices, train.labels, train.class_count, trees, kappa, run_seed);
    dcs_sum += accuracy(dcs_predict_batch(pool, projections, 7), test.labels);
  }
  const double gap = (dcs_sum - avg_sum) / 10.0;
  char buf[96];
  std::snprintf(buf, sizeof buf, "avg %.4f dcs %.4f gap %+.2f points (needs >= +2.00)",
                avg_sum / 10.0, dcs_sum / 10.0, 100.0 * gap);
  return gap >= 0.02 ? pass(buf) : failure(buf);
}

// ---- C7: sign test thresholds ---------------------------------------------------

Outcome criterion_sign_test() {
  for (int n = 1; n <= 30; ++n)
    if (sign_test_threshold(n, 0.05) != oracle::binomial_threshold(n, 0.05))
      return failure("threshold mismatch at n = " + std::to_string(n));
  if (sign_test_threshold(15, 0.05) != 12) return failure("n=15 threshold is not 12");
  return pass("exhaustive match for n <= 30");
}

// ---- C8: conditional real-dataset check -----------------------------------------

Outcome criterion_lsvt() {
  std::string manifest;
  if (const char* env = std::getenv("RFDIS_LSVT_MANIFEST")) manifest = env;
  if (manifest.empty() && fs::exists("data/lsvt_manifest.json"))
    manifest = "data/lsvt_manifest.json";
  if (manifest.empty()) return skip("no LSVT manifest supplied");

  ExperimentConfig config;
  config.manifest_paths = {manifest};
  config.methods = {MethodId::Avg};
  config.trees = 512;
  config.runs = 10;
  config.train_fraction = 0.5;
  config.region_k = 7;
  config.kappa = 5;
  config.seed = 1;
  const auto start = std::chrono::steady_clock::now();
  const RunReport report = run_experiment(config);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  const double mean = report.datasets[0].summary.at("avg").mean;
  char buf[96];
  std::snprintf(buf, sizeof buf, "avg %.4f (target 0.8429 +/- 0.04), %.1f min", mean, minutes);
  if (std::abs(mean - 0.8429) > 0.04) return failure(buf);
  if (minutes >= 15.0) return failure(buf);
  return pass(buf);
}

// ---- C9: CLI determinism across thread counts -----------------------------------

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome criterion_cli_determinism() {
  const fs::path dir =
      fs::temp_directory_path() / ("rfdis_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);

  const std::string cli = RFDIS_CLI_PATH;
  const auto run = [&](const std::string& args) {
    const std::string command =
        cli + " " + args + " >" + (dir / "out.txt").string() + " 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };

  if (run("synth complementary --n 96 --seed 4 --out-dir " + (dir / "data").string()) != 0)
    return failure("synth failed");
  std::ofstream cfg(dir / "cfg.json");
  cfg << "{\n  \"manifests\": [\"" << (dir / "data" / "complementary_manifest.json").string()
      << "\"],\n  \"methods\": [\"avg\", \"sw_3nn\", \"sw_ka\", \"sw_oob\", \"dcs_rfd\"],\n"
      << "  \"trees\": 16,\n  \"runs\": 2,\n  \"kappa\": 3,\n  \"k\": 5\n}\n";
  cfg.close();

  if (run("--threads 1 bench " + (dir / "cfg.json").string() + " --seed 7 --out-prefix " +
          (dir / "one").string()) != 0)
    return failure("bench with one thread failed");
  if (run("--threads 2 bench " + (dir / "cfg.json").string() + " --seed 7 --out-prefix " +
          (dir / "two").string()) != 0)
    return failure("bench with two threads failed");

  const bool same_json = slurp(dir / "one.json") == slurp(dir / "two.json");
  const bool same_csv = slurp(dir / "one.csv") == slurp(dir / "two.csv");
  const bool nonempty = !slurp(dir / "one.json").empty();
  fs::remove_all(dir);
  if (!nonempty) return failure("empty report");
  if (!same_json || !same_csv) return failure("reports differ across thread counts");
  return pass("byte-identical JSON and CSV");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double time_limit_seconds;  // 0 = none stated
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "dissimilarity oracle suite", 10.0, criterion_oracle},
      {2, "invariant suite", 30.0, criterion_invariants},
      {3, "out-of-bag fraction statistics", 60.0, criterion_oob_fraction},
      {4, "kernel alignment checks", 0.0, criterion_kernel_alignment},
      {5, "complementary-views fusion benchmark", 180.0, criterion_complementarity},
      {6, "instance-dependent relevance benchmark", 600.0, criterion_instance_relevance},
      {7, "sign-test thresholds", 0.0, criterion_sign_test},
      {8, "real LSVT protocol (conditional)", 0.0, criterion_lsvt},  // checks its own budget
      {9, "benchmark determinism across threads", 0.0, criterion_cli_determinism},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome = failure(std::string("exception: ") + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (outcome.kind == Outcome::Pass && criterion.time_limit_seconds > 0.0 &&
        seconds >= criterion.time_limit_seconds) {
      outcome = failure(outcome.detail + " [over the " +
                        std::to_string(static_cast<int>(criterion.time_limit_seconds)) +
                        "s budget]");
    }
    const char* tag = outcome.kind == Outcome::Pass   ? "PASS"
                      : outcome.kind == Outcome::Skip ? "SKIP"
                                                      : "FAIL";
    std::printf("[%s] C%d %s%s%s (%.1fs)\n", tag, criterion.id, criterion.name,
                outcome.detail.empty() ? "" : ": ", outcome.detail.c_str(), seconds);
    std::fflush(stdout);
    failures += outcome.kind == Outcome::Fail ? 1 : 0;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
