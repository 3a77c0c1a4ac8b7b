#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rfdis/multiview.hpp"
#include "rfdis/serialize.hpp"
#include "rfdis/synthetic.hpp"
#include "support.hpp"

using namespace rfdis;

namespace {

DissimilarityMatrix constant_matrix(int n, double value) {
  DissimilarityMatrix m;
  m.measure = Measure::plain();
  m.values = Matrix(n, n, value);
  m.row_ids.resize(n);
  std::iota(m.row_ids.begin(), m.row_ids.end(), 0);
  m.col_ids = m.row_ids;
  return m;
}

MultiViewDataset small_dataset(int n, int views, std::uint64_t seed) {
  MultiViewDataset data;
  data.class_count = 2;
  Rng rng(seed);
  data.labels.resize(n);
  for (int i = 0; i < n; ++i) data.labels[i] = i % 2;
  for (int q = 0; q < views; ++q) {
    Matrix view(n, 3);
    for (int i = 0; i < n; ++i)
      for (int f = 0; f < 3; ++f)
        view(i, f) = (f == 0 ? 3.0 * data.labels[i] : 0.0) + rng.next_gaussian();
    data.views.push_back(std::move(view));
    data.view_names.push_back("v" + std::to_string(q));
  }
  return data;
}

std::vector<std::vector<double>> views_of(const MultiViewDataset& data, int i) {
  std::vector<std::vector<double>> out;
  for (const Matrix& view : data.views) {
    const double* row = view.row(i);
    out.emplace_back(row, row + view.cols());
  }
  return out;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& labels) {
  int ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(ok) / pred.size();
}

}  // namespace

TEST_CASE("joint matrix combination") {
  SUBCASE("convex combination of entries") {
    const DissimilarityMatrix a = constant_matrix(4, 0.2);
    const DissimilarityMatrix b = constant_matrix(4, 0.6);
    const DissimilarityMatrix joint = joint_matrix({a, b}, uniform_weights(2));
    CHECK(joint.values(1, 2) == doctest::Approx(0.4).epsilon(1e-12));
  }
  SUBCASE("one-hot weights reproduce the selected view exactly") {
    const DissimilarityMatrix a = constant_matrix(4, 0.35);
    const DissimilarityMatrix b = constant_matrix(4, 0.82);
    WeightVector w{{0.0, 1.0}, WeightMethod::Uniform};
    CHECK(joint_matrix({a, b}, w).values == b.values);
  }
  SUBCASE("uniform three-view average of constants") {
    const DissimilarityMatrix joint = joint_matrix(
        {constant_matrix(3, 0.0), constant_matrix(3, 0.3), constant_matrix(3, 0.9)},
        uniform_weights(3));
    for (double v : joint.values.data()) CHECK(v == doctest::Approx(0.4).epsilon(1e-12));
  }
  SUBCASE("shape mismatch is an error") {
    CHECK_THROWS_AS((void)joint_matrix({constant_matrix(3, 0.1), constant_matrix(4, 0.1)},
                                       uniform_weights(2)),
                    Error);
  }
  SUBCASE("weight count mismatch is an error") {
    CHECK_THROWS_AS((void)joint_matrix({constant_matrix(3, 0.1)}, uniform_weights(2)), Error);
  }
}

TEST_CASE("fusion is linear in the weights") {
  Rng rng(31);
  const int n = 6;
  std::vector<DissimilarityMatrix> matrices;
  for (int q = 0; q < 3; ++q) {
    DissimilarityMatrix m = constant_matrix(n, 0.0);
    for (auto& v : m.values.data()) v = rng.next_double();
    matrices.push_back(std::move(m));
  }
  WeightVector w1{{0.2, 0.3, 0.5}, WeightMethod::Uniform};
  WeightVector w2{{0.6, 0.1, 0.3}, WeightMethod::Uniform};
  const double lambda = 0.37;
  WeightVector mixed{{0.0, 0.0, 0.0}, WeightMethod::Uniform};
  for (int q = 0; q < 3; ++q)
    mixed.values[q] = lambda * w1.values[q] + (1.0 - lambda) * w2.values[q];

  const Matrix left = joint_matrix(matrices, mixed).values;
  const Matrix j1 = joint_matrix(matrices, w1).values;
  const Matrix j2 = joint_matrix(matrices, w2).values;
  for (std::size_t idx = 0; idx < left.data().size(); ++idx) {
    const double right = lambda * j1.data()[idx] + (1.0 - lambda) * j2.data()[idx];
    CHECK(left.data()[idx] == doctest::Approx(right).epsilon(1e-12));
  }
}

TEST_CASE("single-view pipeline degenerates to its view") {
  const MultiViewDataset data = small_dataset(20, 1, 51);
  const MultiViewModel model = train_multiview(data, {.trees = 16, .kappa = 3}, 77);
  CHECK(model.joint.values == model.stage->matrices[0].values);

  for (int i = 0; i < 5; ++i) {
    const auto x = views_of(data, i);
    const std::vector<double> projection =
        project(model.stage->forests[0], Measure::rfd(3), x[0], &model.stage->hardness[0]);
    CHECK(model.predict(x) == model.final_forest.predict(projection));
  }
}

TEST_CASE("identically seeded duplicate views average to themselves") {
  const MultiViewDataset data = small_dataset(18, 1, 52);
  const TrainingSet ts = data.view_training(0);
  const RandomForest f1 = train_forest(ts, 8, 2, 99);
  const RandomForest f2 = train_forest(ts, 8, 2, 99);
  const HardnessTable h1 = kdn_hardness(f1, 3);
  const HardnessTable h2 = kdn_hardness(f2, 3);
  const DissimilarityMatrix d1 = build_matrix(f1, Measure::rfd(3), &h1);
  const DissimilarityMatrix d2 = build_matrix(f2, Measure::rfd(3), &h2);
  CHECK(d1.values == d2.values);
  CHECK(joint_matrix({d1, d2}, uniform_weights(2)).values == d1.values);
}

TEST_CASE("prediction composes the public scalar operations") {
  const MultiViewDataset data = small_dataset(24, 2, 53);
  const auto [train, test] = std::pair{data.subset(std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9,
                                                                    10, 11, 12, 13, 14, 15}),
                                       data.subset(std::vector<int>{16, 17, 18, 19, 20, 21, 22, 23})};
  const MultiViewModel model = train_multiview(train, {.trees = 12, .kappa = 3}, 7);

  const std::vector<int> batch = model.predict_batch(test);
  for (int t = 0; t < test.instance_count(); ++t) {
    const auto x = views_of(test, t);
    // Step 1: per-view projections; step 2: weighted fusion; step 3: classify.
    std::vector<std::vector<double>> projections;
    for (int q = 0; q < 2; ++q)
      projections.push_back(
          project(model.stage->forests[q], Measure::rfd(3), x[q], &model.stage->hardness[q]));
    const std::vector<double> fused = fuse_vectors(projections, model.weights);
    const int composed = model.final_forest.predict(fused);
    CHECK(batch[t] == composed);
    CHECK(model.predict(x) == composed);
  }
}

TEST_CASE("reflexivity carries through fusion") {
  const MultiViewDataset data = small_dataset(15, 3, 54);
  const MultiViewModel model = train_multiview(data, {.trees = 8, .kappa = 3}, 3);
  for (int i = 0; i < data.instance_count(); ++i) {
    const auto proj = model.project_views(views_of(data, i));
    const std::vector<double> fused = fuse_vectors(proj, model.weights);
    CHECK(fused[i] == 0.0);
  }
}

TEST_CASE("complementary views fuse better than either alone") {
  int fused_wins = 0;
  const int seeds = 6;
  for (int s = 0; s < seeds; ++s) {
    const MultiViewDataset data = make_complementary_views(240, 1000 + s);
    std::vector<int> train_idx, test_idx;
    for (int i = 0; i < data.instance_count(); ++i)
      (i % 8 < 4 ? train_idx : test_idx).push_back(i);
    const MultiViewDataset train = data.subset(train_idx);
    const MultiViewDataset test = data.subset(test_idx);

    const MultiViewParams params{.trees = 32, .kappa = 5};
    const MultiViewModel fused = train_multiview(train, params, 100 + s);
    const double fused_acc = accuracy(fused.predict_batch(test), test.labels);

    double best_single = 0.0;
    for (int q = 0; q < 2; ++q) {
      MultiViewDataset train_q{{train.views[q]}, train.labels, {train.view_names[q]},
                               train.class_count};
      MultiViewDataset test_q{{test.views[q]}, test.labels, {test.view_names[q]},
                              test.class_count};
      const MultiViewModel single = train_multiview(train_q, params, 100 + s);
      best_single = std::max(best_single, accuracy(single.predict_batch(test_q), test.labels));
    }
    if (fused_acc > best_single) ++fused_wins;
  }
  CHECK(fused_wins >= 4);  // majority of seeds
}

TEST_CASE("pipeline is deterministic across thread counts") {
  const MultiViewDataset data = small_dataset(20, 2, 55);
  set_max_threads(1);
  const MultiViewModel a = train_multiview(data, {.trees = 8, .kappa = 3}, 11);
  set_max_threads(2);
  const MultiViewModel b = train_multiview(data, {.trees = 8, .kappa = 3}, 11);
  set_max_threads(0);
  CHECK(a.joint.values == b.joint.values);
  CHECK(forest_fingerprint(a.final_forest) == forest_fingerprint(b.final_forest));
  CHECK(stage_fingerprint(*a.stage) == stage_fingerprint(*b.stage));
}

TEST_CASE("model save and load round trips") {
  const MultiViewDataset data = small_dataset(16, 2, 56);
  const MultiViewModel model = train_multiview(data, {.trees = 6, .kappa = 3}, 13);
  const auto path = std::filesystem::temp_directory_path() / "rfdis_model_test.bin";
  save_model(model, path.string());
  const MultiViewModel loaded = load_multiview_model(path.string());

  const auto path2 = std::filesystem::temp_directory_path() / "rfdis_model_test2.bin";
  save_model(loaded, path2.string());
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::stringstream b1, b2;
  b1 << f1.rdbuf();
  b2 << f2.rdbuf();
  CHECK(b1.str() == b2.str());

  for (int i = 0; i < data.instance_count(); ++i)
    CHECK(model.predict(views_of(data, i)) == loaded.predict(views_of(data, i)));
  CHECK(peek_model_kind(path.string()) == ModelKind::MultiView);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("view errors carry the view name") {
  MultiViewDataset data = small_dataset(10, 2, 57);
  data.view_names = {"histogram", "texture"};
  data.views[1] = Matrix(10, 2, std::numeric_limits<double>::quiet_NaN());
  try {
    (void)fit_views(data, 4, 3, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("texture") == std::string::npos);  // dataset-level check fires first
    CHECK(e.kind() == ErrorKind::Validation);
  }

  // Dimension mismatch at prediction names the view.
  const MultiViewDataset good = small_dataset(12, 2, 58);
  const MultiViewModel model = train_multiview(good, {.trees = 4, .kappa = 3}, 5);
  std::vector<std::vector<double>> wrong = views_of(good, 0);
  wrong[1].pop_back();
  try {
    (void)model.predict(wrong);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("v1") != std::string::npos);
    CHECK(e.kind() == ErrorKind::Structural);
  }
}

TEST_CASE("dataset subset keeps views aligned") {
  const MultiViewDataset data = small_dataset(10, 2, 59);
  const std::vector<int> idx{1, 3, 5, 7};
  const MultiViewDataset sub = data.subset(idx);
  CHECK(sub.instance_count() == 4);
  for (int r = 0; r < 4; ++r) {
    CHECK(sub.labels[r] == data.labels[idx[r]]);
    for (int q = 0; q < 2; ++q)
      for (std::size_t f = 0; f < data.views[q].cols(); ++f)
        CHECK(sub.views[q](r, f) == data.views[q](idx[r], f));
  }
}
