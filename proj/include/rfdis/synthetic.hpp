#pragma once

#include <string>

#include "rfdis/multiview.hpp"

namespace rfdis {

/// Two views, four classes. Each view separates one pair of classes cleanly
/// and collapses the other pair onto a shared cluster, so neither view alone
/// can resolve all four classes but their fusion can.
MultiViewDataset make_complementary_views(int instance_count, std::uint64_t seed);

/// Three views, two classes. Instances are assigned to one of three groups;
/// only the group's own view places an instance by its true class, the other
/// views place it in a randomly chosen class cluster. The informative view
/// therefore changes from instance to instance.
MultiViewDataset make_instance_relevance(int instance_count, std::uint64_t seed);

/// Writes the dataset as one CSV per view plus labels.csv and manifest.json
/// under `dir`, and returns the manifest path.
std::string write_dataset(const MultiViewDataset& dataset, const std::string& dir,
                          const std::string& name);

}  // namespace rfdis
