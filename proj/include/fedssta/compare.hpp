#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fedssta {

struct CompareWarnings {
  std::vector<std::string> messages;
};

// Builds the comparison CSV from two or more run directories (each holding
// rounds.csv and summary.json). Per-round accuracy table first, then a
// one-row-per-run summary section; delta columns are relative to the first
// directory. Mismatched round counts truncate to the common prefix with a
// warning.
std::string compare_runs(const std::vector<std::filesystem::path>& dirs,
                         CompareWarnings* warnings = nullptr);

}  // namespace fedssta
