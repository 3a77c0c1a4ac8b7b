#include "rfdis/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "rfdis/csv.hpp"

namespace rfdis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Validation, "cannot open '" + path + "'");
  json parsed;
  try {
    in >> parsed;
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, path + ": " + e.what());
  }
  return parsed;
}

std::string resolve_relative(const std::string& base_file, const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base_file).parent_path() / p).string();
}

}  // namespace

DatasetManifest DatasetManifest::load(const std::string& path) { return load(path, true); }

DatasetManifest DatasetManifest::load(const std::string& path, bool require_labels) {
  const json doc = load_json_file(path);
  DatasetManifest manifest;
  try {
    manifest.name = doc.at("name").get<std::string>();
    for (const auto& view : doc.at("views"))
      manifest.view_paths.push_back(resolve_relative(path, view.get<std::string>()));
    if (require_labels || doc.contains("labels"))
      manifest.label_path = resolve_relative(path, doc.at("labels").get<std::string>());
    if (require_labels || doc.contains("instances"))
      manifest.instances = doc.at("instances").get<int>();
    manifest.view_count = doc.at("view_count").get<int>();
    if (require_labels || doc.contains("classes"))
      manifest.classes = doc.at("classes").get<int>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, path + ": " + e.what());
  }
  if (manifest.view_paths.empty()) fail(ErrorKind::Validation, path + ": no views listed");
  return manifest;
}

MultiViewDataset load_dataset(const DatasetManifest& manifest) {
  if (static_cast<int>(manifest.view_paths.size()) != manifest.view_count)
    fail(ErrorKind::Validation, "manifest declares " + std::to_string(manifest.view_count) +
                                    " views but lists " +
                                    std::to_string(manifest.view_paths.size()));
  MultiViewDataset data;
  data.class_count = manifest.classes;
  for (const std::string& view_path : manifest.view_paths) {
    Matrix view = read_numeric_csv(view_path);
    if (static_cast<int>(view.rows()) != manifest.instances)
      fail(ErrorKind::Validation, "view '" + view_path + "' has " + std::to_string(view.rows()) +
                                      " rows, manifest declares " +
                                      std::to_string(manifest.instances));
    data.view_names.push_back(fs::path(view_path).stem().string());
    data.views.push_back(std::move(view));
  }
  data.labels = read_label_csv(manifest.label_path);
  if (static_cast<int>(data.labels.size()) != manifest.instances)
    fail(ErrorKind::Validation, "label file '" + manifest.label_path + "' has " +
                                    std::to_string(data.labels.size()) +
                                    " entries, manifest declares " +
                                    std::to_string(manifest.instances));
  std::vector<int> seen(manifest.classes, 0);
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    const int y = data.labels[i];
    if (y < 0 || y >= manifest.classes)
      fail(ErrorKind::Validation, manifest.label_path + ":" + std::to_string(i + 1) +
                                      ": label " + std::to_string(y) + " outside {0.." +
                                      std::to_string(manifest.classes - 1) + "}");
    seen[y] = 1;
  }
  for (int c = 0; c < manifest.classes; ++c)
    if (!seen[c])
      fail(ErrorKind::Validation,
           "declared class " + std::to_string(c) + " never appears in the labels");
  data.validate();
  return data;
}

double imbalance_ratio(const std::vector<int>& labels) {
  std::map<int, int> counts;
  for (int y : labels) ++counts[y];
  int lo = labels.size();
  int hi = 0;
  for (const auto& [y, c] : counts) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  return lo > 0 ? static_cast<double>(hi) / lo : 0.0;
}

std::pair<std::vector<int>, std::vector<int>> stratified_split_indices(
    const std::vector<int>& labels, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    fail(ErrorKind::Parameter, "train fraction must lie in (0, 1)");
  int class_count = 0;
  for (int y : labels) class_count = std::max(class_count, y + 1);
  std::vector<std::vector<int>> by_class(class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<int>(i));

  Rng rng(seed);
  std::vector<int> train;
  std::vector<int> test;
  for (int c = 0; c < class_count; ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < 2)
      fail(ErrorKind::Stratification,
           "class " + std::to_string(c) + " has a single instance and cannot be split");
    for (std::size_t j = members.size() - 1; j > 0; --j)
      std::swap(members[j], members[rng.next_below(j + 1)]);
    const auto take = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(members.size())));
    for (std::size_t j = 0; j < members.size(); ++j)
      (j < take ? train : test).push_back(members[j]);
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

std::pair<MultiViewDataset, MultiViewDataset> stratified_split(const MultiViewDataset& dataset,
                                                               double fraction,
                                                               std::uint64_t seed) {
  const auto [train_idx, test_idx] = stratified_split_indices(dataset.labels, fraction, seed);
  return {dataset.subset(train_idx), dataset.subset(test_idx)};
}

const char* to_string(MethodId method) {
  switch (method) {
    case MethodId::Avg: return "avg";
    case MethodId::Sw3nn: return "sw_3nn";
    case MethodId::SwKa: return "sw_ka";
    case MethodId::SwOob: return "sw_oob";
    case MethodId::DcsRfd: return "dcs_rfd";
  }
  return "unknown";
}

MethodId parse_method(const std::string& name) {
  for (MethodId m : all_methods())
    if (name == to_string(m)) return m;
  fail(ErrorKind::Validation, "unknown method '" + name + "'");
}

std::vector<MethodId> all_methods() {
  return {MethodId::Avg, MethodId::Sw3nn, MethodId::SwKa, MethodId::SwOob, MethodId::DcsRfd};
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  const json doc = load_json_file(path);
  ExperimentConfig config;
  try {
    for (const auto& manifest : doc.at("manifests"))
      config.manifest_paths.push_back(resolve_relative(path, manifest.get<std::string>()));
    if (doc.contains("methods")) {
      config.methods.clear();
      for (const auto& name : doc.at("methods"))
        config.methods.push_back(parse_method(name.get<std::string>()));
    }
    config.trees = doc.value("trees", config.trees);
    config.final_trees = doc.value("final_trees", config.final_trees);
    config.runs = doc.value("runs", config.runs);
    config.train_fraction = doc.value("train_fraction", config.train_fraction);
    config.region_k = doc.value("k", config.region_k);
    config.kappa = doc.value("kappa", config.kappa);
    config.seed = doc.value("seed", config.seed);
    if (doc.contains("out_prefix"))
      config.out_prefix = resolve_relative(path, doc.at("out_prefix").get<std::string>());
    config.emit_transcripts = doc.value("emit_transcripts", config.emit_transcripts);
    config.dcs_view_cap = doc.value("dcs_view_cap", config.dcs_view_cap);
    config.oob_error_as_weight = doc.value("oob_error_as_weight", config.oob_error_as_weight);
    if (doc.contains("competence")) {
      const std::string name = doc.at("competence").get<std::string>();
      if (name == "oob_accuracy") config.competence = CompetenceCriterion::OobAccuracy;
      else if (name == "oob_error_literal") config.competence = CompetenceCriterion::OobErrorLiteral;
      else if (name == "lca") config.competence = CompetenceCriterion::Lca;
      else fail(ErrorKind::Validation, "unknown competence criterion '" + name + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, path + ": " + e.what());
  }
  config.validate();
  return config;
}

void ExperimentConfig::validate() const {
  if (manifest_paths.empty()) fail(ErrorKind::Validation, "config lists no dataset manifests");
  if (methods.empty()) fail(ErrorKind::Validation, "config lists no methods");
  if (trees < 1) fail(ErrorKind::Parameter, "trees must be >= 1");
  if (runs < 1) fail(ErrorKind::Parameter, "runs must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(ErrorKind::Parameter, "train_fraction must lie in (0, 1)");
  if (region_k < 1) fail(ErrorKind::Parameter, "k must be >= 1");
  if (kappa < 1) fail(ErrorKind::Parameter, "kappa must be >= 1");
}

int sign_test_threshold(int n, double alpha) {
  if (n < 0 || n > 62) fail(ErrorKind::Parameter, "sign test supports n in [0, 62]");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::Parameter, "alpha must lie in (0, 1)");
  if (n == 0) return 1;
  // Binomial coefficients stay exact below 2^63 for n <= 62.
  std::vector<std::uint64_t> binom(n + 1);
  binom[0] = 1;
  for (int i = 0; i < n; ++i) {
    const unsigned __int128 next =
        static_cast<unsigned __int128>(binom[i]) * static_cast<std::uint64_t>(n - i) /
        static_cast<std::uint64_t>(i + 1);
    binom[i + 1] = static_cast<std::uint64_t>(next);
  }
  const double denom = std::ldexp(1.0, n);  // 2^n
  std::uint64_t tail = 0;
  int threshold = n + 1;
  for (int w = n; w >= 0; --w) {
    tail += binom[w];
    if (static_cast<double>(tail) / denom <= alpha)
      threshold = w;
    else
      break;
  }
  return threshold;
}

SignTestResult sign_test(int wins, int ties, int losses, double alpha) {
  if (wins < 0 || ties < 0 || losses < 0 || wins + ties + losses < 1)
    fail(ErrorKind::Parameter, "sign test needs at least one comparison");
  SignTestResult result;
  result.alpha = alpha;
  result.adjusted_wins = wins + ties / 2;
  const int adjusted_losses = losses + ties / 2 + ties % 2;  // odd tie goes to losses
  result.effective_n = result.adjusted_wins + adjusted_losses;
  result.threshold = sign_test_threshold(result.effective_n, alpha);
  result.significant = result.effective_n > 0 && result.adjusted_wins >= result.threshold;
  return result;
}

namespace {

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return values.empty() ? 0.0 : sum / values.size();
}

double sample_stddev(const std::vector<double>& values, double mean) {
  if (values.size() < 2) return 0.0;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (values.size() - 1));
}

// Midranks by descending mean accuracy, 1 = best.
std::map<std::string, double> midranks(const std::vector<std::pair<std::string, double>>& means) {
  std::vector<std::pair<double, std::string>> order;
  order.reserve(means.size());
  for (const auto& [name, mean] : means) order.emplace_back(-mean, name);
  std::sort(order.begin(), order.end());
  std::map<std::string, double> ranks;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && order[j + 1].first == order[i].first) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t].second] = rank;
    i = j + 1;
  }
  return ranks;
}

double accuracy_of(const std::vector<int>& predictions, const std::vector<int>& labels) {
  int correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    correct += predictions[i] == labels[i] ? 1 : 0;
  return labels.empty() ? 0.0 : static_cast<double>(correct) / labels.size();
}

DatasetResult run_dataset(const ExperimentConfig& config, const std::string& manifest_path,
                          std::size_t dataset_index) {
  const DatasetManifest manifest = DatasetManifest::load(manifest_path);
  const MultiViewDataset dataset = load_dataset(manifest);
  const std::uint64_t dataset_seed =
      derive_seed(config.seed, seed_stream::kDataset, dataset_index);
  const bool wants_dcs = std::find(config.methods.begin(), config.methods.end(),
                                   MethodId::DcsRfd) != config.methods.end();

  DatasetResult result;
  result.name = manifest.name;
  for (int r = 0; r < config.runs; ++r) {
    RunResult run;
    run.run_index = r;
    run.run_seed = derive_seed(dataset_seed, seed_stream::kRun, r);
    run.split_seed = derive_seed(run.run_seed, seed_stream::kSplit, 0);

    const auto [train_idx, test_idx] =
        stratified_split_indices(dataset.labels, config.train_fraction, run.split_seed);
    const MultiViewDataset train = dataset.subset(train_idx);
    const MultiViewDataset test = dataset.subset(test_idx);
    run.train_size = train.instance_count();
    run.test_size = test.instance_count();

    // All methods in a run share the same view forests, matrices and test
    // projections.
    auto stage = std::make_shared<const ViewStage>(
        fit_views(train, config.trees, config.kappa, run.run_seed));
    const std::uint64_t fingerprint = stage_fingerprint(*stage);
    const std::vector<DissimilarityMatrix> test_projections = project_views_batch(*stage, test);

    CandidatePool pool;
    if (wants_dcs)
      pool = generate_pool(stage->matrices, train.labels, train.class_count,
                           config.final_tree_count(), config.kappa, run.run_seed,
                           config.dcs_view_cap);

    const std::uint64_t full_mask = (1ull << train.view_count()) - 1;
    const std::uint64_t final_seed = derive_seed(run.run_seed, seed_stream::kFinal, full_mask);
    for (MethodId method : config.methods) {
      MethodRunResult method_result;
      method_result.stage_fingerprint = fingerprint;
      if (method == MethodId::DcsRfd) {
        std::vector<SelectionRecord> records;
        const std::vector<int> predictions =
            dcs_predict_batch(pool, test_projections, config.region_k, config.competence,
                              config.emit_transcripts ? &records : nullptr);
        method_result.accuracy = accuracy_of(predictions, test.labels);
        if (config.emit_transcripts) run.dcs_transcript = std::move(records);
      } else {
        WeightVector weights;
        switch (method) {
          case MethodId::Avg: weights = uniform_weights(train.view_count()); break;
          case MethodId::Sw3nn: weights = weights_3nn(stage->matrices, train.labels); break;
          case MethodId::SwKa:
            weights = weights_ka(stage->matrices, train.labels, train.class_count);
            break;
          case MethodId::SwOob:
            weights = weights_oob(stage->forests, config.oob_error_as_weight);
            break;
          default: break;
        }
        method_result.weights = weights.values;
        const MultiViewModel model =
            finalize_model(stage, train.labels, train.class_count, std::move(weights),
                           config.final_tree_count(), final_seed);
        const DissimilarityMatrix fused = joint_matrix(test_projections, model.weights);
        method_result.accuracy =
            accuracy_of(model.final_forest.predict_batch(fused.values), test.labels);
      }
      run.methods.emplace(to_string(method), std::move(method_result));
    }
    result.runs.push_back(std::move(run));
  }

  std::vector<std::pair<std::string, double>> means;
  for (MethodId method : config.methods) {
    const std::string name = to_string(method);
    MethodSummary summary;
    for (const RunResult& run : result.runs)
      summary.per_run.push_back(run.methods.at(name).accuracy);
    summary.mean = mean_of(summary.per_run);
    summary.stddev = sample_stddev(summary.per_run, summary.mean);
    means.emplace_back(name, summary.mean);
    result.summary.emplace(name, std::move(summary));
  }
  const auto ranks = midranks(means);
  for (auto& [name, summary] : result.summary) summary.rank = ranks.at(name);
  return result;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  RunReport report;
  report.config = config;
  for (std::size_t d = 0; d < config.manifest_paths.size(); ++d)
    report.datasets.push_back(run_dataset(config, config.manifest_paths[d], d));

  for (MethodId method : config.methods) {
    const std::string name = to_string(method);
    double rank_sum = 0.0;
    for (const DatasetResult& dataset : report.datasets)
      rank_sum += dataset.summary.at(name).rank;
    report.average_ranks[name] = rank_sum / report.datasets.size();
  }

  const bool has_avg =
      std::find(config.methods.begin(), config.methods.end(), MethodId::Avg) !=
      config.methods.end();
  if (has_avg) {
    for (MethodId method : config.methods) {
      if (method == MethodId::Avg) continue;
      const std::string name = to_string(method);
      BaselineComparison cmp;
      for (const DatasetResult& dataset : report.datasets) {
        const double mine = dataset.summary.at(name).mean;
        const double base = dataset.summary.at("avg").mean;
        if (mine > base) ++cmp.wins;
        else if (mine < base) ++cmp.losses;
        else ++cmp.ties;
      }
      cmp.sign = sign_test(cmp.wins, cmp.ties, cmp.losses);
      report.vs_baseline.emplace(name, cmp);
    }
  }
  return report;
}

std::string render_report_csv(const RunReport& report) {
  std::ostringstream out;
  out << "dataset,method,accuracy_mean,accuracy_std,rank\n";
  char buf[128];
  for (const DatasetResult& dataset : report.datasets) {
    for (MethodId method : report.config.methods) {
      const std::string name = to_string(method);
      const MethodSummary& s = dataset.summary.at(name);
      std::snprintf(buf, sizeof buf, "%s,%s,%.4f,%.4f,%.4f\n", dataset.name.c_str(),
                    name.c_str(), s.mean, s.stddev, s.rank);
      out << buf;
    }
  }
  return out.str();
}

std::string render_report_json(const RunReport& report) {
  json doc;
  doc["schema"] = "rfdis-report-v1";
  json cfg;
  cfg["seed"] = report.config.seed;
  cfg["trees"] = report.config.trees;
  cfg["final_trees"] = report.config.final_tree_count();
  cfg["runs"] = report.config.runs;
  cfg["train_fraction"] = report.config.train_fraction;
  cfg["k"] = report.config.region_k;
  cfg["kappa"] = report.config.kappa;
  cfg["std"] = "sample";  // n - 1 denominator
  {
    std::vector<std::string> names;
    for (MethodId m : report.config.methods) names.emplace_back(to_string(m));
    cfg["methods"] = names;
  }
  doc["config"] = cfg;

  json datasets = json::array();
  for (const DatasetResult& dataset : report.datasets) {
    json d;
    d["name"] = dataset.name;
    json runs = json::array();
    for (const RunResult& run : dataset.runs) {
      json r;
      r["run"] = run.run_index;
      r["run_seed"] = run.run_seed;
      r["split_seed"] = run.split_seed;
      r["train_size"] = run.train_size;
      r["test_size"] = run.test_size;
      json methods;
      for (const auto& [name, m] : run.methods) {
        json entry;
        entry["accuracy"] = m.accuracy;
        char fp[32];
        std::snprintf(fp, sizeof fp, "%016llx",
                      static_cast<unsigned long long>(m.stage_fingerprint));
        entry["stage_fingerprint"] = fp;
        if (!m.weights.empty()) entry["weights"] = m.weights;
        methods[name] = entry;
      }
      r["methods"] = methods;
      runs.push_back(std::move(r));
    }
    d["runs"] = runs;
    json summary;
    for (const auto& [name, s] : dataset.summary) {
      json entry;
      entry["mean"] = s.mean;
      entry["std"] = s.stddev;
      entry["rank"] = s.rank;
      entry["per_run"] = s.per_run;
      summary[name] = entry;
    }
    d["summary"] = summary;
    datasets.push_back(std::move(d));
  }
  doc["datasets"] = datasets;
  doc["average_ranks"] = report.average_ranks;

  if (!report.vs_baseline.empty()) {
    json baseline;
    for (const auto& [name, cmp] : report.vs_baseline) {
      json entry;
      entry["wins"] = cmp.wins;
      entry["ties"] = cmp.ties;
      entry["losses"] = cmp.losses;
      entry["effective_n"] = cmp.sign.effective_n;
      entry["threshold"] = cmp.sign.threshold;
      entry["alpha"] = cmp.sign.alpha;
      entry["significant"] = cmp.sign.significant;
      baseline[name] = entry;
    }
    doc["vs_avg"] = baseline;
  }
  return doc.dump(2) + "\n";
}

void write_report_files(const RunReport& report) {
  const std::string prefix = report.config.out_prefix;
  const fs::path parent = fs::path(prefix).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  {
    std::ofstream out(prefix + ".csv");
    if (!out) fail(ErrorKind::Runtime, "cannot open '" + prefix + ".csv' for writing");
    out << render_report_csv(report);
  }
  {
    std::ofstream out(prefix + ".json");
    if (!out) fail(ErrorKind::Runtime, "cannot open '" + prefix + ".json' for writing");
    out << render_report_json(report);
  }
  if (report.config.emit_transcripts) {
    for (const DatasetResult& dataset : report.datasets) {
      for (const RunResult& run : dataset.runs) {
        if (run.dcs_transcript.empty()) continue;
        const std::string path = prefix + "_" + dataset.name + "_run" +
                                 std::to_string(run.run_index) + "_dcs.jsonl";
        std::ofstream out(path);
        if (!out) fail(ErrorKind::Runtime, "cannot open '" + path + "' for writing");
        for (const SelectionRecord& rec : run.dcs_transcript) {
          json line;
          line["instance"] = rec.instance_id;
          line["chosen_mask"] = rec.chosen_mask;
          line["fallback"] = rec.fallback;
          line["prediction"] = rec.prediction;
          json comps = json::array();
          for (const auto& c : rec.competences)
            comps.push_back(c ? json(*c) : json(nullptr));
          line["competences"] = comps;
          out << line.dump() << '\n';
        }
      }
    }
  }
}

void print_report_table(const RunReport& report, std::ostream& out) {
  char buf[160];
  for (const DatasetResult& dataset : report.datasets) {
    out << dataset.name << " (" << report.config.runs << " runs)\n";
    for (MethodId method : report.config.methods) {
      const std::string name = to_string(method);
      const MethodSummary& s = dataset.summary.at(name);
      std::snprintf(buf, sizeof buf, "  %-8s accuracy %6.2f%% +/- %5.2f  rank %.1f\n",
                    name.c_str(), 100.0 * s.mean, 100.0 * s.stddev, s.rank);
      out << buf;
    }
  }
  if (!report.vs_baseline.empty()) {
    out << "vs avg baseline:\n";
    for (const auto& [name, cmp] : report.vs_baseline) {
      std::snprintf(buf, sizeof buf, "  %-8s wins %d ties %d losses %d%s\n", name.c_str(),
                    cmp.wins, cmp.ties, cmp.losses,
                    cmp.sign.significant ? "  (significant)" : "");
      out << buf;
    }
  }
}

}  // namespace rfdis
