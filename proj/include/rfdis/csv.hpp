#pragma once

#include <string>
#include <vector>

#include "rfdis/common.hpp"

namespace rfdis {

/// Strict numeric CSV: comma-separated finite numbers, one instance per row,
/// no header. Diagnostics carry file and line.
Matrix read_numeric_csv(const std::string& path);

/// One integer label per line (or single-column CSV).
std::vector<int> read_label_csv(const std::string& path);

void write_numeric_csv(const Matrix& values, const std::string& path);
void write_label_csv(const std::vector<int>& labels, const std::string& path);

}  // namespace rfdis
