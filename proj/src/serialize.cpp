#include "rfdis/serialize.hpp"

#include <cstring>
#include <fstream>

namespace rfdis {

namespace {

constexpr char kMagic[6] = {'R', 'F', 'D', 'I', 'S', '\0'};
constexpr std::uint8_t kVersion = 1;

void put_bytes(std::ostream& out, const void* p, std::size_t len) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(len));
}

void get_bytes(std::istream& in, void* p, std::size_t len) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(len));
  if (!in) fail(ErrorKind::Validation, "model file truncated or unreadable");
}

template <typename T>
void put(std::ostream& out, T value) {
  put_bytes(out, &value, sizeof value);
}

template <typename T>
T get(std::istream& in) {
  T value{};
  get_bytes(in, &value, sizeof value);
  return value;
}

void put_i32_vec(std::ostream& out, const std::vector<int>& v) {
  put<std::uint64_t>(out, v.size());
  if (!v.empty()) put_bytes(out, v.data(), v.size() * sizeof(int));
}

std::vector<int> get_i32_vec(std::istream& in) {
  const auto count = get<std::uint64_t>(in);
  std::vector<int> v(count);
  if (count) get_bytes(in, v.data(), count * sizeof(int));
  return v;
}

void put_f64_vec(std::ostream& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  if (!v.empty()) put_bytes(out, v.data(), v.size() * sizeof(double));
}

std::vector<double> get_f64_vec(std::istream& in) {
  const auto count = get<std::uint64_t>(in);
  std::vector<double> v(count);
  if (count) get_bytes(in, v.data(), count * sizeof(double));
  return v;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  put<std::uint64_t>(out, m.rows());
  put<std::uint64_t>(out, m.cols());
  if (!m.data().empty()) put_bytes(out, m.data().data(), m.data().size() * sizeof(double));
}

Matrix get_matrix(std::istream& in) {
  const auto rows = get<std::uint64_t>(in);
  const auto cols = get<std::uint64_t>(in);
  Matrix m(rows, cols);
  if (!m.data().empty()) get_bytes(in, m.data().data(), m.data().size() * sizeof(double));
  return m;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  put_bytes(out, s.data(), s.size());
}

std::string get_string(std::istream& in) {
  const auto len = get<std::uint64_t>(in);
  std::string s(len, '\0');
  if (len) get_bytes(in, s.data(), len);
  return s;
}

void put_measure(std::ostream& out, const Measure& m) {
  put<std::uint8_t>(out, static_cast<std::uint8_t>(m.kind));
  put(out, m.path_weight);
  put<std::int32_t>(out, m.kappa);
}

Measure get_measure(std::istream& in) {
  Measure m;
  m.kind = static_cast<MeasureKind>(get<std::uint8_t>(in));
  m.path_weight = get<double>(in);
  m.kappa = get<std::int32_t>(in);
  return m;
}

void put_dissim(std::ostream& out, const DissimilarityMatrix& d) {
  put_matrix(out, d.values);
  put_i32_vec(out, d.row_ids);
  put_i32_vec(out, d.col_ids);
  put_measure(out, d.measure);
}

DissimilarityMatrix get_dissim(std::istream& in) {
  DissimilarityMatrix d;
  d.values = get_matrix(in);
  d.row_ids = get_i32_vec(in);
  d.col_ids = get_i32_vec(in);
  d.measure = get_measure(in);
  return d;
}

void put_hardness(std::ostream& out, const HardnessTable& h) {
  put_matrix(out, h.values);
  put<std::int32_t>(out, h.kappa);
}

HardnessTable get_hardness(std::istream& in) {
  HardnessTable h;
  h.values = get_matrix(in);
  h.kappa = get<std::int32_t>(in);
  return h;
}

void put_weights(std::ostream& out, const WeightVector& w) {
  put<std::uint8_t>(out, static_cast<std::uint8_t>(w.method));
  put_f64_vec(out, w.values);
}

WeightVector get_weights(std::istream& in) {
  WeightVector w;
  w.method = static_cast<WeightMethod>(get<std::uint8_t>(in));
  w.values = get_f64_vec(in);
  return w;
}

void write_header(std::ostream& out, ModelKind kind) {
  put_bytes(out, kMagic, sizeof kMagic);
  put<std::uint8_t>(out, kVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(kind));
}

ModelKind read_header(std::istream& in) {
  char magic[sizeof kMagic];
  get_bytes(in, magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    fail(ErrorKind::Validation, "not a model file (bad magic)");
  const auto version = get<std::uint8_t>(in);
  if (version != kVersion)
    fail(ErrorKind::Validation, "unsupported model version " + std::to_string(version));
  return static_cast<ModelKind>(get<std::uint8_t>(in));
}

void put_stage(std::ostream& out, const ViewStage& stage) {
  put<std::int32_t>(out, stage.view_count());
  put<std::int32_t>(out, stage.kappa);
  for (int q = 0; q < stage.view_count(); ++q) {
    put_string(out, stage.view_names[q]);
    save_forest(stage.forests[q], out);
    put_hardness(out, stage.hardness[q]);
    put_dissim(out, stage.matrices[q]);
  }
}

std::shared_ptr<const ViewStage> get_stage(std::istream& in) {
  auto stage = std::make_shared<ViewStage>();
  const int q_count = get<std::int32_t>(in);
  stage->kappa = get<std::int32_t>(in);
  for (int q = 0; q < q_count; ++q) {
    stage->view_names.push_back(get_string(in));
    stage->forests.push_back(load_forest(in));
    stage->hardness.push_back(get_hardness(in));
    stage->matrices.push_back(get_dissim(in));
  }
  return stage;
}

}  // namespace

void save_forest(const RandomForest& forest, std::ostream& out) {
  put<std::int32_t>(out, forest.tree_count());
  put<std::int32_t>(out, forest.mtry);
  put<std::uint64_t>(out, forest.seed);
  const TrainingSet& data = *forest.training;
  put<std::int32_t>(out, data.class_count);
  put_matrix(out, data.features);
  put_i32_vec(out, data.labels);
  for (const auto& tree : forest.trees) {
    put<std::uint64_t>(out, tree.nodes.size());
    for (const auto& node : tree.nodes) {
      put<std::int32_t>(out, node.feature);
      put(out, node.threshold);
      put<std::int32_t>(out, node.left);
      put<std::int32_t>(out, node.right);
      put<std::int32_t>(out, node.parent);
      put<std::int32_t>(out, node.depth);
      put<std::int32_t>(out, node.leaf_id);
      put<std::int32_t>(out, node.majority);
      put_i32_vec(out, node.histogram);
    }
    put_i32_vec(out, tree.used_features);
    put_i32_vec(out, tree.leaf_nodes);
  }
  for (const auto& mask : forest.bootstrap_masks) {
    put<std::uint64_t>(out, mask.size());
    if (!mask.empty()) put_bytes(out, mask.data(), mask.size());
  }
  for (const auto& leaves : forest.training_leaves) put_i32_vec(out, leaves);
  put_i32_vec(out, forest.oob_votes);
}

RandomForest load_forest(std::istream& in) {
  RandomForest forest;
  const int tree_count = get<std::int32_t>(in);
  forest.mtry = get<std::int32_t>(in);
  forest.seed = get<std::uint64_t>(in);
  TrainingSet data;
  data.class_count = get<std::int32_t>(in);
  data.features = get_matrix(in);
  data.labels = get_i32_vec(in);
  forest.training = std::make_shared<const TrainingSet>(std::move(data));
  forest.trees.resize(tree_count);
  for (auto& tree : forest.trees) {
    const auto node_count = get<std::uint64_t>(in);
    tree.nodes.resize(node_count);
    for (auto& node : tree.nodes) {
      node.feature = get<std::int32_t>(in);
      node.threshold = get<double>(in);
      node.left = get<std::int32_t>(in);
      node.right = get<std::int32_t>(in);
      node.parent = get<std::int32_t>(in);
      node.depth = get<std::int32_t>(in);
      node.leaf_id = get<std::int32_t>(in);
      node.majority = get<std::int32_t>(in);
      node.histogram = get_i32_vec(in);
    }
    tree.used_features = get_i32_vec(in);
    tree.leaf_nodes = get_i32_vec(in);
  }
  forest.bootstrap_masks.resize(tree_count);
  for (auto& mask : forest.bootstrap_masks) {
    const auto len = get<std::uint64_t>(in);
    mask.resize(len);
    if (len) get_bytes(in, mask.data(), len);
  }
  forest.training_leaves.resize(tree_count);
  for (auto& leaves : forest.training_leaves) leaves = get_i32_vec(in);
  forest.oob_votes = get_i32_vec(in);
  return forest;
}

void save_model(const MultiViewModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Runtime, "cannot open '" + path + "' for writing");
  write_header(out, ModelKind::MultiView);
  put_stage(out, *model.stage);
  put_i32_vec(out, model.labels);
  put<std::int32_t>(out, model.class_count);
  put_weights(out, model.weights);
  put_dissim(out, model.joint);
  save_forest(model.final_forest, out);
  if (!out) fail(ErrorKind::Runtime, "write to '" + path + "' failed");
}

void save_model(const DcsModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Runtime, "cannot open '" + path + "' for writing");
  write_header(out, ModelKind::Dcs);
  put_stage(out, *model.stage);
  put_i32_vec(out, model.labels);
  put<std::int32_t>(out, model.class_count);
  put<std::int32_t>(out, model.region_k);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(model.criterion));
  put<std::int32_t>(out, model.pool.view_count);
  put<std::uint64_t>(out, model.pool.candidates.size());
  for (const auto& candidate : model.pool.candidates) {
    put<std::uint32_t>(out, candidate.mask.bits);
    put<std::int32_t>(out, candidate.mask.view_count);
    put_dissim(out, candidate.joint);
    put_hardness(out, candidate.hardness);
    save_forest(candidate.forest, out);
  }
  if (!out) fail(ErrorKind::Runtime, "write to '" + path + "' failed");
}

ModelKind peek_model_kind(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Validation, "cannot open '" + path + "'");
  return read_header(in);
}

MultiViewModel load_multiview_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Validation, "cannot open '" + path + "'");
  if (read_header(in) != ModelKind::MultiView)
    fail(ErrorKind::Validation, "'" + path + "' does not hold a multi-view model");
  MultiViewModel model;
  model.stage = get_stage(in);
  model.labels = get_i32_vec(in);
  model.class_count = get<std::int32_t>(in);
  model.weights = get_weights(in);
  model.joint = get_dissim(in);
  model.final_forest = load_forest(in);
  return model;
}

DcsModel load_dcs_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Validation, "cannot open '" + path + "'");
  if (read_header(in) != ModelKind::Dcs)
    fail(ErrorKind::Validation, "'" + path + "' does not hold a DCS model");
  DcsModel model;
  model.stage = get_stage(in);
  model.labels = get_i32_vec(in);
  model.class_count = get<std::int32_t>(in);
  model.region_k = get<std::int32_t>(in);
  model.criterion = static_cast<CompetenceCriterion>(get<std::uint8_t>(in));
  model.pool.view_count = get<std::int32_t>(in);
  const auto count = get<std::uint64_t>(in);
  model.pool.candidates.resize(count);
  for (auto& candidate : model.pool.candidates) {
    candidate.mask.bits = get<std::uint32_t>(in);
    candidate.mask.view_count = get<std::int32_t>(in);
    candidate.joint = get_dissim(in);
    candidate.hardness = get_hardness(in);
    candidate.forest = load_forest(in);
  }
  return model;
}

}  // namespace rfdis
