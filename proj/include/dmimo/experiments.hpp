#pragma once

#include <string>

#include "dmimo/config.hpp"
#include "dmimo/mumimo.hpp"
#include "dmimo/result_table.hpp"

namespace dmimo {

/// Everything an experiment produces: the long-format table, a
/// representative per-user rate trace, and (for the sync experiments) the
/// pairwise measurement set of the first trial.
struct ExperimentResult {
  ResultTable table;
  RateReport rates;
  std::string measurements_csv;
};

/// Rate-vs-SNR comparison of ideal and free-running clocks for zero-forcing
/// and single-user conjugate beamforming.
ExperimentResult run_fig2(const ExperimentConfig& config);

/// Full synchronization pipeline: pairwise ML measurements over the anchor
/// clique, LS fusion, corrections, rate vs OFDM symbol index.
ExperimentResult run_fig5(const ExperimentConfig& config);

/// Joint timing/frequency estimator MSE against the exact CRB over an SNR
/// sweep, multipath and single-path profiles.
ExperimentResult run_fig9(const ExperimentConfig& config);

/// Per-user rate CDFs on the AP grid with LS / star-ratio / genie
/// reciprocity calibration and both precoders.
ExperimentResult run_grid_cdf(const ExperimentConfig& config);

/// Small composable pipeline of canned stages, mostly for smoke testing.
ExperimentResult run_custom(const ExperimentConfig& config);

/// Dispatch on config.experiment.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes results.csv, summary.csv, config.json, and (when non-empty)
/// rates.csv / rates_summary.csv / measurements.csv under out_dir.
void write_outputs(const ExperimentResult& result,
                   const ExperimentConfig& config, const std::string& out_dir);

}  // namespace dmimo
