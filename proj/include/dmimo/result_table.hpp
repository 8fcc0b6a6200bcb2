#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dmimo/config.hpp"

namespace dmimo {

/// Long-format experiment output: one row per (trial, sweep point, metric).
struct ResultTable {
  struct Row {
    std::string experiment;
    uint64_t trial = 0;
    std::string sweep;   // "key=value;key=value" sweep coordinates
    std::string metric;
    double value = 0.0;
  };
  std::vector<Row> rows;

  void add(std::string experiment, uint64_t trial, std::string sweep,
           std::string metric, double value);
  void append(const ResultTable& other);
  /// Stable deterministic order: (trial, sweep, metric, insertion order).
  void sort();
};

/// Header comment lines carrying provenance, prepended to every output file.
std::string artifact_header(const ExperimentConfig& config);

std::string table_to_csv(const ResultTable& table,
                         const ExperimentConfig& config);

/// Per-(sweep, metric) mean/min/max over trials.
std::string table_summary_csv(const ResultTable& table,
                              const ExperimentConfig& config);

}  // namespace dmimo
