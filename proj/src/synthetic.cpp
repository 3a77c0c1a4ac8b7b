#include "rfdis/synthetic.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rfdis/csv.hpp"

namespace rfdis {

namespace {

constexpr double kSeparation = 3.0;

void add_noise(Matrix& view, std::size_t row, Rng& rng) {
  for (std::size_t f = 0; f < view.cols(); ++f) view(row, f) += rng.next_gaussian();
}

}  // namespace

MultiViewDataset make_complementary_views(int instance_count, std::uint64_t seed) {
  if (instance_count < 8) fail(ErrorKind::Parameter, "need at least 8 instances");
  constexpr int kViews = 2;
  constexpr int kClasses = 4;
  constexpr int kDims = 5;
  MultiViewDataset data;
  data.class_count = kClasses;
  data.view_names = {"left_pair", "right_pair"};
  data.labels.resize(instance_count);
  for (int i = 0; i < instance_count; ++i) data.labels[i] = i % kClasses;

  Rng rng(derive_seed(seed, seed_stream::kSynth, 0));
  for (int q = 0; q < kViews; ++q) data.views.emplace_back(instance_count, kDims, 0.0);
  for (int i = 0; i < instance_count; ++i) {
    const int y = data.labels[i];
    for (int q = 0; q < kViews; ++q) {
      Matrix& view = data.views[q];
      // View q resolves classes {2q, 2q+1}; the other pair lands on one
      // shared off-axis cluster.
      if (y / 2 == q) {
        view(i, 0) = (y % 2 == 0) ? kSeparation : -kSeparation;
      } else {
        view(i, 1) = kSeparation;
      }
      add_noise(view, i, rng);
    }
  }
  return data;
}

namespace {

// i % 3 is the group (the view an instance is separable in); (i / 3) % 2 the
// label. Every third label block is an "ambiguous pair" seat: instance
// 3*(6t+2)+g pairs with 3*(6t+5)+g, same group, opposite labels.
constexpr int kRelevanceViews = 3;

int relevance_label(int i) { return (i / 3) % 2; }

bool relevance_ambiguous(int i) { return (i / 3) % 3 == 2; }

bool relevance_pair_head(int i) { return relevance_ambiguous(i) && (i / 3) % 6 == 2; }

}  // namespace

MultiViewDataset make_instance_relevance(int instance_count, std::uint64_t seed) {
  if (instance_count < 48) fail(ErrorKind::Parameter, "need at least 48 instances");
  constexpr int kDims = 4;
  constexpr int kSlotUnits = 10;
  MultiViewDataset data;
  data.class_count = 2;
  data.view_names = {"sensor_a", "sensor_b", "sensor_c"};
  data.labels.resize(instance_count);
  for (int i = 0; i < instance_count; ++i) data.labels[i] = relevance_label(i);

  // Group members are separable in their own view; in foreign views they sit
  // in loose mixed-label "slot" clusters placed far from the class clusters,
  // so which views carry signal changes from instance to instance. A third of
  // the instances form ambiguous pairs: two opposite-label instances with
  // bit-identical coordinates in every view. No forest can separate a pair,
  // in or out of bag, which keeps the out-of-bag error of the combined
  // candidates visibly nonzero around the slots while a candidate built on an
  // instance's own view keeps its class clusters clean.
  Rng noise_rng(derive_seed(seed, seed_stream::kSynth, 1));
  for (int q = 0; q < kRelevanceViews; ++q) data.views.emplace_back(instance_count, kDims, 0.0);

  for (int q = 0; q < kRelevanceViews; ++q) {
    Matrix& view = data.views[q];
    // A unit is one slot-dwelling instance, or an ambiguous pair that shares
    // one position. Normal group-q instances go to the class clusters instead.
    std::vector<std::pair<int, int>> units;  // (instance, partner or -1)
    for (int i = 0; i < instance_count; ++i) {
      if (relevance_ambiguous(i)) {
        // Pair tails are placed together with their head.
        if (relevance_pair_head(i))
          units.emplace_back(i, i + 9 < instance_count ? i + 9 : -1);
      } else if (i % kRelevanceViews == q) {
        view(i, 0) = data.labels[i] == 0 ? kSeparation : -kSeparation;
        add_noise(view, i, noise_rng);
      } else {
        units.emplace_back(i, -1);
      }
    }
    Rng slot_rng(derive_seed(seed, seed_stream::kSynth, 2 + q));
    for (std::size_t j = units.size() - 1; j > 0; --j)
      std::swap(units[j], units[slot_rng.next_below(j + 1)]);
    for (std::size_t start = 0; start < units.size(); start += kSlotUnits) {
      double center[kDims];
      for (int f = 0; f < kDims; ++f)
        center[f] = 4.0 * slot_rng.next_gaussian() + (f == 2 ? 12.0 : 0.0);
      const std::size_t end = std::min(start + kSlotUnits, units.size());
      for (std::size_t t = start; t < end; ++t) {
        double point[kDims];
        for (int f = 0; f < kDims; ++f) point[f] = center[f] + slot_rng.next_gaussian();
        const auto [inst, partner] = units[t];
        for (int f = 0; f < kDims; ++f) view(inst, f) = point[f];
        if (partner >= 0)
          for (int f = 0; f < kDims; ++f) view(partner, f) = point[f];
      }
    }
  }
  return data;
}

std::string write_dataset(const MultiViewDataset& dataset, const std::string& dir,
                          const std::string& name) {
  dataset.validate();
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["name"] = name;
  manifest["instances"] = dataset.instance_count();
  manifest["view_count"] = dataset.view_count();
  manifest["classes"] = dataset.class_count;
  std::vector<std::string> view_files;
  for (int q = 0; q < dataset.view_count(); ++q) {
    const std::string view_name =
        dataset.view_names.empty() ? "view" + std::to_string(q) : dataset.view_names[q];
    const std::string file = name + "_" + view_name + ".csv";
    write_numeric_csv(dataset.views[q], (fs::path(dir) / file).string());
    view_files.push_back(file);
  }
  manifest["views"] = view_files;
  manifest["labels"] = name + "_labels.csv";
  write_label_csv(dataset.labels, (fs::path(dir) / (name + "_labels.csv")).string());

  const std::string manifest_path = (fs::path(dir) / (name + "_manifest.json")).string();
  std::ofstream out(manifest_path);
  if (!out) fail(ErrorKind::Runtime, "cannot open '" + manifest_path + "' for writing");
  out << manifest.dump(2) << '\n';
  return manifest_path;
}

}  // namespace rfdis
