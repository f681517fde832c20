#pragma once

#include <string>
#include <vector>

#include "taulasso/types.hpp"

namespace taulasso {

/// Reads a dataset from CSV: header row, first column the response, remaining
/// columns predictors, numeric cells only. Throws CsvError with 1-based
/// line/column diagnostics on malformed input.
struct CsvDataset {
  Dataset data;
  std::vector<std::string> column_names;  // includes the response name
};

CsvDataset read_dataset_csv(const std::string& path);

void write_dataset_csv(const Dataset& data, const std::string& path,
                       const std::vector<std::string>* column_names = nullptr);

}  // namespace taulasso
