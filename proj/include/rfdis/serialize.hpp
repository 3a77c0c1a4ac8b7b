#pragma once

#include <iosfwd>
#include <string>

#include "rfdis/dcs.hpp"
#include "rfdis/multiview.hpp"

namespace rfdis {

enum class ModelKind { Forest = 1, MultiView = 2, Dcs = 3 };

/// Versioned little-endian binary format; round trips are lossless.
void save_forest(const RandomForest& forest, std::ostream& out);
RandomForest load_forest(std::istream& in);

void save_model(const MultiViewModel& model, const std::string& path);
void save_model(const DcsModel& model, const std::string& path);

ModelKind peek_model_kind(const std::string& path);
MultiViewModel load_multiview_model(const std::string& path);
DcsModel load_dcs_model(const std::string& path);

}  // namespace rfdis
