#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dmimo/errors.hpp"
#include "dmimo/ofdm.hpp"

namespace dmimo {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Full experiment description. Every field has a default so a config file
/// only needs to override what it changes; the resolved config (defaults
/// filled in) is what gets hashed and embedded in the outputs.
struct ExperimentConfig {
  std::string experiment = "fig2";  // fig2 | fig5 | fig9 | grid-cdf | custom
  uint64_t seed = 1;
  int trials = 0;  // 0 -> per-experiment default
  int threads = 1;
  OfdmParams ofdm;

  struct Fig2 {
    int n_ap = 4;
    int n_ut = 4;
    int symbols = 60;
    double eps_max_hz = 800.0;
    int n_subcarriers = 4;
    std::vector<double> snr_db = {0, 5, 10, 15, 20, 25, 30, 35, 40};
  } fig2;

  struct Fig5 {
    int n_anchors = 4;
    double ap_ut_snr_db = 30.0;
    double tau_max_chips = 4.0;
    double eps_max_hz = 800.0;
    int n_subcarriers = 4;
    int nc_default = 256;
    double ap_ap_snr_default_db = 30.0;
    std::vector<double> ap_ap_snr_db = {0, 10, 20, 30};  // sweep at nc_default
    std::vector<int> nc = {64, 256, 1024};               // sweep at default SNR
    std::vector<int> symbols = {0,   100, 200, 300, 400,  500,  600,
                                700, 800, 900, 1000, 1100, 1200};
    bool crb_weights = false;
  } fig5;

  struct Fig9 {
    int nc = 256;
    int guard_chips = 32;
    std::vector<double> snr_db = {0, 10, 20, 30};
    // Multipath profile: coefficients and delays in chips.
    std::vector<double> h = {1.0, 0.5, -0.2, 0.1, -0.05, -0.005};
    std::vector<double> delays = {0.0, 1.75, 3.56, 7.90, 10.72, 15.30};
    bool single_path_variant = true;
  } fig9;

  struct GridCdf {
    int grid_side = 8;
    double diagonal_m = 100.0;  // area side = diagonal / sqrt(2)
    int n_ut = 16;
    int noise_draws = 50;
    double cal_snr_db = 40.0;      // at the grid-spacing reference pathloss
    double ul_pilot_snr_db = 30.0; // same reference; <= -1000 disables noise
    double graph_snr_threshold_db = 0.0;
    double per_antenna_limit_db = 90.0;
    int argos_center = 0;           // reference antenna (grid index)
    std::string subgraph = "full";  // full | star | mst, for the LS method
    double f0_ghz = 5.0;            // pathloss-model carrier
    double hw_spread_target = 0.1;  // std of |T|^2 and |R|^2
  } grid;

  struct Custom {
    std::vector<std::string> pipeline;
  } custom;
};

/// Number of Monte Carlo trials actually run (config override or default).
int resolved_trials(const ExperimentConfig& config);

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Canonical serialization (sorted keys, all fields explicit).
std::string config_to_json(const ExperimentConfig& config);

/// FNV-1a hash of the canonical serialization, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Throws ConfigError describing the first violated constraint.
void validate_config(const ExperimentConfig& config);

}  // namespace dmimo
