// rfdis - multi-view classification through random forest dissimilarity
// representations. Subcommands: validate, train, predict, bench, inspect, synth.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "rfdis/bench.hpp"
#include "rfdis/csv.hpp"
#include "rfdis/serialize.hpp"
#include "rfdis/synthetic.hpp"

namespace fs = std::filesystem;
using namespace rfdis;

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
      return 1;
    case ErrorKind::Parameter:
    case ErrorKind::InvalidTask:
    case ErrorKind::Structural:
    case ErrorKind::Validation:
    case ErrorKind::Stratification:
    case ErrorKind::Resource:
      return 2;
    case ErrorKind::Degenerate:
    case ErrorKind::Runtime:
      return 3;
  }
  return 3;
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> trees;
  std::optional<int> runs;
  std::optional<int> k;
  std::optional<int> kappa;
  std::vector<std::string> methods;
  std::optional<std::string> out_prefix;
  bool transcripts = false;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Master seed override");
    cmd->add_option("--trees", trees, "Trees per forest override");
    cmd->add_option("--runs", runs, "Repeated split count override");
    cmd->add_option("--k", k, "Region-of-competence size override");
    cmd->add_option("--kappa", kappa, "Hardness neighbor count override");
    cmd->add_option("--method", methods, "Restrict to these methods (repeatable)");
  }

  void apply(ExperimentConfig& config) const {
    if (seed) config.seed = *seed;
    if (trees) config.trees = *trees;
    if (runs) config.runs = *runs;
    if (k) config.region_k = *k;
    if (kappa) config.kappa = *kappa;
    if (!methods.empty()) {
      config.methods.clear();
      for (const std::string& name : methods) config.methods.push_back(parse_method(name));
    }
    if (out_prefix) config.out_prefix = *out_prefix;
    if (transcripts) config.emit_transcripts = true;
    config.validate();
  }
};

int cmd_validate(const std::string& manifest_path) {
  const DatasetManifest manifest = DatasetManifest::load(manifest_path);
  const MultiViewDataset dataset = load_dataset(manifest);
  std::printf("dataset %s: ok\n", manifest.name.c_str());
  std::printf("  instances %d  views %d  classes %d  imbalance %.2f\n",
              dataset.instance_count(), dataset.view_count(), dataset.class_count,
              imbalance_ratio(dataset.labels));
  for (int q = 0; q < dataset.view_count(); ++q)
    std::printf("  view %-20s %zu features\n", dataset.view_names[q].c_str(),
                dataset.views[q].cols());
  return 0;
}

int cmd_train(const std::string& config_path, const Overrides& overrides,
              const std::string& out_path) {
  ExperimentConfig config = ExperimentConfig::from_json_file(config_path);
  overrides.apply(config);
  if (config.methods.size() != 1)
    fail(ErrorKind::Usage, "train expects exactly one method (use --method)");
  const MethodId method = config.methods[0];

  const DatasetManifest manifest = DatasetManifest::load(config.manifest_paths[0]);
  const MultiViewDataset dataset = load_dataset(manifest);

  if (method == MethodId::DcsRfd) {
    MultiViewParams params{config.trees, config.final_trees, config.kappa};
    const DcsModel model = train_dcs(dataset, params, config.region_k, config.seed);
    save_model(model, out_path);
  } else {
    auto stage = std::make_shared<const ViewStage>(
        fit_views(dataset, config.trees, config.kappa, config.seed));
    WeightVector weights;
    switch (method) {
      case MethodId::Avg: weights = uniform_weights(dataset.view_count()); break;
      case MethodId::Sw3nn: weights = weights_3nn(stage->matrices, dataset.labels); break;
      case MethodId::SwKa:
        weights = weights_ka(stage->matrices, dataset.labels, dataset.class_count);
        break;
      case MethodId::SwOob:
        weights = weights_oob(stage->forests, config.oob_error_as_weight);
        break;
      default: break;
    }
    const std::uint64_t full_mask = (1ull << dataset.view_count()) - 1;
    const MultiViewModel model = finalize_model(
        stage, dataset.labels, dataset.class_count, std::move(weights),
        config.final_tree_count(), derive_seed(config.seed, seed_stream::kFinal, full_mask));
    save_model(model, out_path);
  }
  std::printf("model written to %s (method %s, %d instances)\n", out_path.c_str(),
              to_string(method), dataset.instance_count());
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& manifest_path,
                const std::string& out_path) {
  const DatasetManifest manifest = DatasetManifest::load(manifest_path, false);
  std::vector<Matrix> views;
  for (const std::string& path : manifest.view_paths) views.push_back(read_numeric_csv(path));
  for (std::size_t q = 1; q < views.size(); ++q)
    if (views[q].rows() != views[0].rows())
      fail(ErrorKind::Validation, "view '" + manifest.view_paths[q] + "' has " +
                                      std::to_string(views[q].rows()) + " rows, expected " +
                                      std::to_string(views[0].rows()));
  if (manifest.instances > 0 && views[0].rows() != static_cast<std::size_t>(manifest.instances))
    fail(ErrorKind::Validation, "views hold " + std::to_string(views[0].rows()) +
                                    " rows, manifest declares " +
                                    std::to_string(manifest.instances));

  std::vector<int> predictions;
  if (peek_model_kind(model_path) == ModelKind::Dcs) {
    const DcsModel model = load_dcs_model(model_path);
    predictions = model.predict_batch(views);
  } else {
    const MultiViewModel model = load_multiview_model(model_path);
    predictions = model.predict_batch(views);
  }

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) fail(ErrorKind::Runtime, "cannot open '" + out_path + "' for writing");
    out = &file;
  }
  *out << "instance,prediction\n";
  for (std::size_t i = 0; i < predictions.size(); ++i)
    *out << i << ',' << predictions[i] << '\n';

  if (!manifest.label_path.empty()) {
    const std::vector<int> labels = read_label_csv(manifest.label_path);
    if (labels.size() == predictions.size()) {
      int correct = 0;
      for (std::size_t i = 0; i < labels.size(); ++i)
        correct += labels[i] == predictions[i] ? 1 : 0;
      std::fprintf(stderr, "accuracy %.4f over %zu instances\n",
                   static_cast<double>(correct) / labels.size(), labels.size());
    }
  }
  return 0;
}

int cmd_bench(const std::vector<std::string>& config_paths, const Overrides& overrides) {
  for (const std::string& path : config_paths) {
    ExperimentConfig config = ExperimentConfig::from_json_file(path);
    overrides.apply(config);
    const RunReport report = run_experiment(config);
    write_report_files(report);
    print_report_table(report, std::cout);
    std::printf("report written to %s.{csv,json}\n", config.out_prefix.c_str());
  }
  return 0;
}

int cmd_inspect(const std::string& config_path, const Overrides& overrides,
                const std::string& out_dir) {
  ExperimentConfig config = ExperimentConfig::from_json_file(config_path);
  overrides.apply(config);
  fs::create_directories(out_dir);

  const DatasetManifest manifest = DatasetManifest::load(config.manifest_paths[0]);
  const MultiViewDataset dataset = load_dataset(manifest);

  // Mirror run 0 of the benchmark protocol so the exports match a report.
  const std::uint64_t dataset_seed = derive_seed(config.seed, seed_stream::kDataset, 0);
  const std::uint64_t run_seed = derive_seed(dataset_seed, seed_stream::kRun, 0);
  const std::uint64_t split_seed = derive_seed(run_seed, seed_stream::kSplit, 0);
  const auto [train, test] = stratified_split(dataset, config.train_fraction, split_seed);

  auto stage = std::make_shared<const ViewStage>(
      fit_views(train, config.trees, config.kappa, run_seed));
  for (int q = 0; q < stage->view_count(); ++q)
    write_matrix_csv(stage->matrices[q],
                     (fs::path(out_dir) / (manifest.name + "_" + stage->view_names[q] + "_rfd.csv"))
                         .string());
  const DissimilarityMatrix joint =
      joint_matrix(stage->matrices, uniform_weights(stage->view_count()));
  write_matrix_csv(joint, (fs::path(out_dir) / (manifest.name + "_joint_avg.csv")).string());

  nlohmann::json info;
  char fp[32];
  std::snprintf(fp, sizeof fp, "%016llx",
                static_cast<unsigned long long>(stage_fingerprint(*stage)));
  info["stage_fingerprint"] = fp;
  info["run_seed"] = run_seed;
  info["split_seed"] = split_seed;
  for (int q = 0; q < stage->view_count(); ++q) {
    const auto err = oob_error(stage->forests[q]);
    info["view_oob_error"][stage->view_names[q]] = err ? nlohmann::json(*err) : nlohmann::json();
  }
  bool wants_dcs = false;
  for (MethodId method : config.methods) {
    switch (method) {
      case MethodId::Avg:
        info["weights"]["avg"] = uniform_weights(train.view_count()).values;
        break;
      case MethodId::Sw3nn:
        info["weights"]["sw_3nn"] = weights_3nn(stage->matrices, train.labels).values;
        break;
      case MethodId::SwKa:
        info["weights"]["sw_ka"] =
            weights_ka(stage->matrices, train.labels, train.class_count).values;
        break;
      case MethodId::SwOob:
        info["weights"]["sw_oob"] =
            weights_oob(stage->forests, config.oob_error_as_weight).values;
        break;
      case MethodId::DcsRfd: wants_dcs = true; break;
    }
  }
  const std::string info_path = (fs::path(out_dir) / (manifest.name + "_weights.json")).string();
  {
    std::ofstream out(info_path);
    if (!out) fail(ErrorKind::Runtime, "cannot open '" + info_path + "' for writing");
    out << info.dump(2) << '\n';
  }

  if (wants_dcs) {
    const CandidatePool pool =
        generate_pool(stage->matrices, train.labels, train.class_count,
                      config.final_tree_count(), config.kappa, run_seed, config.dcs_view_cap);
    std::vector<SelectionRecord> records;
    const std::vector<DissimilarityMatrix> projections = project_views_batch(*stage, test);
    dcs_predict_batch(pool, projections, config.region_k, config.competence, &records);
    const std::string transcript_path =
        (fs::path(out_dir) / (manifest.name + "_dcs_transcript.jsonl")).string();
    std::ofstream out(transcript_path);
    if (!out) fail(ErrorKind::Runtime, "cannot open '" + transcript_path + "' for writing");
    for (const SelectionRecord& rec : records) {
      nlohmann::json line;
      line["instance"] = rec.instance_id;
      line["chosen_mask"] = rec.chosen_mask;
      line["fallback"] = rec.fallback;
      line["prediction"] = rec.prediction;
      nlohmann::json comps = nlohmann::json::array();
      for (const auto& c : rec.competences)
        comps.push_back(c ? nlohmann::json(*c) : nlohmann::json(nullptr));
      line["competences"] = comps;
      out << line.dump() << '\n';
    }
  }
  std::printf("inspection artifacts written to %s\n", out_dir.c_str());
  return 0;
}

int cmd_synth(const std::string& generator, int instances, std::uint64_t seed,
              const std::string& out_dir, std::string name) {
  MultiViewDataset dataset;
  if (generator == "complementary") {
    dataset = make_complementary_views(instances, seed);
  } else if (generator == "relevance") {
    dataset = make_instance_relevance(instances, seed);
  } else {
    fail(ErrorKind::Usage, "unknown generator '" + generator + "' (complementary|relevance)");
  }
  if (name.empty()) name = generator;
  const std::string manifest_path = write_dataset(dataset, out_dir, name);
  std::printf("%s\n", manifest_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view classification through random forest dissimilarity representations"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0 = hardware)")->expected(1);

  auto* validate = app.add_subcommand("validate", "Check a dataset manifest and its files");
  std::string validate_manifest;
  validate->add_option("manifest", validate_manifest, "Manifest JSON path")->required();

  auto* train = app.add_subcommand("train", "Train a model on a full dataset and save it");
  std::string train_config, train_out = "model.rfdis";
  Overrides train_overrides;
  train->add_option("config", train_config, "Experiment config JSON")->required();
  train->add_option("--out", train_out, "Output model path");
  train_overrides.add_flags(train);

  auto* predict = app.add_subcommand("predict", "Predict instances with a saved model");
  std::string predict_model, predict_manifest, predict_out;
  predict->add_option("model", predict_model, "Model path")->required();
  predict->add_option("manifest", predict_manifest, "Manifest of instances to predict")->required();
  predict->add_option("--out", predict_out, "Prediction CSV path (default stdout)");

  auto* bench = app.add_subcommand("bench", "Run the benchmark protocol and emit reports");
  std::vector<std::string> bench_configs;
  Overrides bench_overrides;
  bench->add_option("config", bench_configs, "Experiment config JSON (repeatable)")->required();
  bench_overrides.add_flags(bench);
  bench->add_option("--out-prefix", bench_overrides.out_prefix, "Report path prefix override");
  bench->add_flag("--transcripts", bench_overrides.transcripts, "Write DCS selection transcripts");

  auto* inspect = app.add_subcommand("inspect", "Export matrices, weights and DCS transcripts");
  std::string inspect_config, inspect_dir = "inspect";
  Overrides inspect_overrides;
  inspect->add_option("config", inspect_config, "Experiment config JSON")->required();
  inspect->add_option("--out-dir", inspect_dir, "Directory for exported artifacts");
  inspect_overrides.add_flags(inspect);

  auto* synth = app.add_subcommand("synth", "Write a bundled synthetic dataset to disk");
  std::string synth_generator, synth_dir = "synth", synth_name;
  int synth_n = 400;
  std::uint64_t synth_seed = 42;
  synth->add_option("generator", synth_generator, "complementary|relevance")->required();
  synth->add_option("--n", synth_n, "Instance count");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--out-dir", synth_dir, "Output directory");
  synth->add_option("--name", synth_name, "Dataset name (default: generator)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "rfdis: error kind=usage msg=\"" << e.what() << "\"\n";
    return 1;
  }

  set_max_threads(threads);
  try {
    if (*validate) return cmd_validate(validate_manifest);
    if (*train) return cmd_train(train_config, train_overrides, train_out);
    if (*predict) return cmd_predict(predict_model, predict_manifest, predict_out);
    if (*bench) return cmd_bench(bench_configs, bench_overrides);
    if (*inspect) return cmd_inspect(inspect_config, inspect_overrides, inspect_dir);
    if (*synth) return cmd_synth(synth_generator, synth_n, synth_seed, synth_dir, synth_name);
  } catch (const Error& e) {
    std::cerr << "rfdis: error kind=" << to_string(e.kind()) << " msg=\"" << e.what() << "\"\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "rfdis: error kind=runtime msg=\"" << e.what() << "\"\n";
    return 3;
  }
  return 1;
}
