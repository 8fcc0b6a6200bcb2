#include "dmimo/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dmimo {

using nlohmann::json;

namespace {

// Overlays `j[key]` onto `value` when present, so partial configs work.
template <typename T>
void get_if(const json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, unused] : j.items()) {
    (void)unused;
    if (!known.count(key))
      throw ConfigError("unknown config key '" + key + "' in " + where);
  }
}

}  // namespace

int resolved_trials(const ExperimentConfig& config) {
  if (config.trials > 0) return config.trials;
  if (config.experiment == "fig2") return 2000;
  if (config.experiment == "fig5") return 500;
  if (config.experiment == "fig9") return 2000;
  if (config.experiment == "grid-cdf") return 200;
  return 1;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");

  ExperimentConfig c;
  try {
    reject_unknown(j, {"experiment", "seed", "trials", "threads", "ofdm",
                       "fig2", "fig5", "fig9", "grid_cdf", "custom"},
                   "root");
    get_if(j, "experiment", c.experiment);
    get_if(j, "seed", c.seed);
    get_if(j, "trials", c.trials);
    get_if(j, "threads", c.threads);
    if (j.contains("ofdm")) {
      const json& o = j.at("ofdm");
      reject_unknown(o, {"n", "cp", "oversampling", "fs_hz", "f0_hz"}, "ofdm");
      get_if(o, "n", c.ofdm.n);
      get_if(o, "cp", c.ofdm.cp);
      get_if(o, "oversampling", c.ofdm.oversampling);
      get_if(o, "fs_hz", c.ofdm.fs);
      get_if(o, "f0_hz", c.ofdm.f0);
    }
    if (j.contains("fig2")) {
      const json& o = j.at("fig2");
      reject_unknown(o, {"n_ap", "n_ut", "symbols", "eps_max_hz",
                         "n_subcarriers", "snr_db"},
                     "fig2");
      get_if(o, "n_ap", c.fig2.n_ap);
      get_if(o, "n_ut", c.fig2.n_ut);
      get_if(o, "symbols", c.fig2.symbols);
      get_if(o, "eps_max_hz", c.fig2.eps_max_hz);
      get_if(o, "n_subcarriers", c.fig2.n_subcarriers);
      get_if(o, "snr_db", c.fig2.snr_db);
    }
    if (j.contains("fig5")) {
      const json& o = j.at("fig5");
      reject_unknown(o,
                     {"n_anchors", "ap_ut_snr_db", "tau_max_chips",
                      "eps_max_hz", "n_subcarriers", "nc_default",
                      "ap_ap_snr_default_db", "ap_ap_snr_db", "nc", "symbols",
                      "crb_weights"},
                     "fig5");
      get_if(o, "n_anchors", c.fig5.n_anchors);
      get_if(o, "ap_ut_snr_db", c.fig5.ap_ut_snr_db);
      get_if(o, "tau_max_chips", c.fig5.tau_max_chips);
      get_if(o, "eps_max_hz", c.fig5.eps_max_hz);
      get_if(o, "n_subcarriers", c.fig5.n_subcarriers);
      get_if(o, "nc_default", c.fig5.nc_default);
      get_if(o, "ap_ap_snr_default_db", c.fig5.ap_ap_snr_default_db);
      get_if(o, "ap_ap_snr_db", c.fig5.ap_ap_snr_db);
      get_if(o, "nc", c.fig5.nc);
      get_if(o, "symbols", c.fig5.symbols);
      get_if(o, "crb_weights", c.fig5.crb_weights);
    }
    if (j.contains("fig9")) {
      const json& o = j.at("fig9");
      reject_unknown(o, {"nc", "guard_chips", "snr_db", "h", "delays",
                         "single_path_variant"},
                     "fig9");
      get_if(o, "nc", c.fig9.nc);
      get_if(o, "guard_chips", c.fig9.guard_chips);
      get_if(o, "snr_db", c.fig9.snr_db);
      get_if(o, "h", c.fig9.h);
      get_if(o, "delays", c.fig9.delays);
      get_if(o, "single_path_variant", c.fig9.single_path_variant);
    }
    if (j.contains("grid_cdf")) {
      const json& o = j.at("grid_cdf");
      reject_unknown(o,
                     {"grid_side", "diagonal_m", "n_ut", "noise_draws",
                      "cal_snr_db", "ul_pilot_snr_db", "graph_snr_threshold_db",
                      "per_antenna_limit_db", "argos_center", "subgraph",
                      "f0_ghz", "hw_spread_target"},
                     "grid_cdf");
      get_if(o, "grid_side", c.grid.grid_side);
      get_if(o, "diagonal_m", c.grid.diagonal_m);
      get_if(o, "n_ut", c.grid.n_ut);
      get_if(o, "noise_draws", c.grid.noise_draws);
      get_if(o, "cal_snr_db", c.grid.cal_snr_db);
      get_if(o, "ul_pilot_snr_db", c.grid.ul_pilot_snr_db);
      get_if(o, "graph_snr_threshold_db", c.grid.graph_snr_threshold_db);
      get_if(o, "per_antenna_limit_db", c.grid.per_antenna_limit_db);
      get_if(o, "argos_center", c.grid.argos_center);
      get_if(o, "subgraph", c.grid.subgraph);
      get_if(o, "f0_ghz", c.grid.f0_ghz);
      get_if(o, "hw_spread_target", c.grid.hw_spread_target);
    }
    if (j.contains("custom")) {
      const json& o = j.at("custom");
      reject_unknown(o, {"pipeline"}, "custom");
      get_if(o, "pipeline", c.custom.pipeline);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has wrong type: ") + e.what());
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  // threads is an execution knob, not part of the experiment definition:
  // results must be byte-identical for any worker count, so it stays out of
  // the canonical form and the hash.
  j["ofdm"] = {{"n", c.ofdm.n},
               {"cp", c.ofdm.cp},
               {"oversampling", c.ofdm.oversampling},
               {"fs_hz", c.ofdm.fs},
               {"f0_hz", c.ofdm.f0}};
  j["fig2"] = {{"n_ap", c.fig2.n_ap},
               {"n_ut", c.fig2.n_ut},
               {"symbols", c.fig2.symbols},
               {"eps_max_hz", c.fig2.eps_max_hz},
               {"n_subcarriers", c.fig2.n_subcarriers},
               {"snr_db", c.fig2.snr_db}};
  j["fig5"] = {{"n_anchors", c.fig5.n_anchors},
               {"ap_ut_snr_db", c.fig5.ap_ut_snr_db},
               {"tau_max_chips", c.fig5.tau_max_chips},
               {"eps_max_hz", c.fig5.eps_max_hz},
               {"n_subcarriers", c.fig5.n_subcarriers},
               {"nc_default", c.fig5.nc_default},
               {"ap_ap_snr_default_db", c.fig5.ap_ap_snr_default_db},
               {"ap_ap_snr_db", c.fig5.ap_ap_snr_db},
               {"nc", c.fig5.nc},
               {"symbols", c.fig5.symbols},
               {"crb_weights", c.fig5.crb_weights}};
  j["fig9"] = {{"nc", c.fig9.nc},
               {"guard_chips", c.fig9.guard_chips},
               {"snr_db", c.fig9.snr_db},
               {"h", c.fig9.h},
               {"delays", c.fig9.delays},
               {"single_path_variant", c.fig9.single_path_variant}};
  j["grid_cdf"] = {{"grid_side", c.grid.grid_side},
                   {"diagonal_m", c.grid.diagonal_m},
                   {"n_ut", c.grid.n_ut},
                   {"noise_draws", c.grid.noise_draws},
                   {"cal_snr_db", c.grid.cal_snr_db},
                   {"ul_pilot_snr_db", c.grid.ul_pilot_snr_db},
                   {"graph_snr_threshold_db", c.grid.graph_snr_threshold_db},
                   {"per_antenna_limit_db", c.grid.per_antenna_limit_db},
                   {"argos_center", c.grid.argos_center},
                   {"subgraph", c.grid.subgraph},
                   {"f0_ghz", c.grid.f0_ghz},
                   {"hw_spread_target", c.grid.hw_spread_target}};
  j["custom"] = {{"pipeline", c.custom.pipeline}};
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string canon = config_to_json(config);
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char b : canon) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void validate_config(const ExperimentConfig& c) {
  const std::set<std::string> experiments{"fig2", "fig5", "fig9", "grid-cdf",
                                          "custom"};
  if (!experiments.count(c.experiment))
    throw ConfigError("unknown experiment '" + c.experiment + "'");
  if (c.trials < 0) throw ConfigError("trials must be >= 0");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  if (c.ofdm.n < 2 || c.ofdm.cp < 0 || c.ofdm.oversampling < 1)
    throw ConfigError("invalid OFDM dimensions");
  if (c.ofdm.fs <= 0.0 || c.ofdm.f0 <= 0.0)
    throw ConfigError("sampling and carrier frequencies must be positive");

  if (c.fig2.n_ap < 1 || c.fig2.n_ut < 1 || c.fig2.n_ut > c.fig2.n_ap)
    throw ConfigError("fig2 requires 1 <= n_ut <= n_ap");
  if (c.fig2.symbols < 1 || c.fig2.n_subcarriers < 1 ||
      c.fig2.snr_db.empty())
    throw ConfigError("fig2 sweep is empty");

  if (c.fig5.n_anchors < 2) throw ConfigError("fig5 needs >= 2 anchors");
  if (c.fig5.nc_default % 4 != 0)
    throw ConfigError("pilot burst length must be divisible by 4");
  for (int nc : c.fig5.nc)
    if (nc % 4 != 0 || nc < 8)
      throw ConfigError("fig5 nc sweep values must be multiples of 4, >= 8");
  if (c.fig5.symbols.empty() || c.fig5.ap_ap_snr_db.empty())
    throw ConfigError("fig5 sweep is empty");
  if (c.fig5.tau_max_chips < 0.0)
    throw ConfigError("fig5 tau_max_chips must be >= 0");

  if (c.fig9.nc % 4 != 0 || c.fig9.nc < 8)
    throw ConfigError("fig9 nc must be a multiple of 4, >= 8");
  if (c.fig9.guard_chips < 1) throw ConfigError("fig9 guard must be >= 1");
  if (c.fig9.h.size() != c.fig9.delays.size() || c.fig9.h.empty())
    throw ConfigError("fig9 profile: h and delays must match and be non-empty");
  for (double d : c.fig9.delays)
    if (d < 0.0 || d > c.fig9.guard_chips - 1.0)
      throw ConfigError("fig9 delays must lie within the guard window");
  if (c.fig9.snr_db.empty()) throw ConfigError("fig9 sweep is empty");

  if (c.grid.grid_side < 2 || c.grid.n_ut < 1 || c.grid.noise_draws < 1)
    throw ConfigError("grid_cdf dimensions must be positive");
  if (c.grid.n_ut > c.grid.grid_side * c.grid.grid_side)
    throw ConfigError("grid_cdf needs n_ut <= number of APs");
  if (c.grid.diagonal_m <= 0.0 || c.grid.f0_ghz <= 0.0)
    throw ConfigError("grid_cdf geometry must be positive");
  if (c.grid.argos_center < 0 ||
      c.grid.argos_center >= c.grid.grid_side * c.grid.grid_side)
    throw ConfigError("grid_cdf argos_center outside the AP grid");
  if (c.grid.subgraph != "full" && c.grid.subgraph != "star" &&
      c.grid.subgraph != "mst")
    throw ConfigError("grid_cdf subgraph must be full, star, or mst");
  if (c.grid.hw_spread_target < 0.0 || c.grid.hw_spread_target > 1.0)
    throw ConfigError("grid_cdf hw_spread_target outside [0, 1]");

  const std::set<std::string> stages{"pairwise", "crb", "calibration",
                                     "coloring"};
  for (const auto& s : c.custom.pipeline)
    if (!stages.count(s)) throw ConfigError("unknown pipeline stage '" + s + "'");
}

}  // namespace dmimo
