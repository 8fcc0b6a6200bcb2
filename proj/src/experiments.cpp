#include "dmimo/experiments.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "dmimo/calib.hpp"
#include "dmimo/channel.hpp"
#include "dmimo/estimator.hpp"
#include "dmimo/sync.hpp"

namespace dmimo {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::vector<int> spread_subcarriers(int n, int count) {
  std::vector<int> nus(count);
  for (int i = 0; i < count; ++i) nus[i] = -n / 2 + (i * n) / count;
  return nus;
}

Eigen::MatrixXcd random_rayleigh(Rng& rng, int rows, int cols) {
  Eigen::MatrixXcd h(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) h(i, j) = rng.cnormal(1.0);
  return h;
}

struct TrialOutput {
  ResultTable table;
  std::vector<RateReport::Row> rate_rows;
  std::string measurements_csv;
};

template <typename Fn>
ExperimentResult run_parallel(const ExperimentConfig& config, Fn&& trial_fn) {
  const int trials = resolved_trials(config);
  const int threads = std::max(1, std::min(config.threads, trials));
  std::vector<TrialOutput> outputs(trials);
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= trials) return;
      try {
        outputs[t] = trial_fn(static_cast<uint64_t>(t));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  // Merge in trial order so the result is partition-independent.
  ExperimentResult result;
  for (auto& o : outputs) {
    result.table.append(o.table);
    result.rates.rows.insert(result.rates.rows.end(), o.rate_rows.begin(),
                             o.rate_rows.end());
    if (result.measurements_csv.empty() && !o.measurements_csv.empty())
      result.measurements_csv = std::move(o.measurements_csv);
  }
  result.table.sort();
  return result;
}

double mean_over_symbols(const RateResult& rr, int user) {
  return rr.rate.row(user).mean();
}

double sum_rate_at(const RateResult& rr, int symbol_idx) {
  return rr.rate.col(symbol_idx).sum();
}

}  // namespace

ExperimentResult run_fig2(const ExperimentConfig& config) {
  const auto& f = config.fig2;
  const std::vector<int> nus = spread_subcarriers(config.ofdm.n, f.n_subcarriers);
  std::vector<int> symbols(f.symbols);
  for (int m = 0; m < f.symbols; ++m) symbols[m] = m;

  // Representative per-user traces are logged at the sweep point nearest 30 dB.
  size_t report_idx = 0;
  for (size_t i = 0; i < f.snr_db.size(); ++i)
    if (std::abs(f.snr_db[i] - 30.0) <
        std::abs(f.snr_db[report_idx] - 30.0))
      report_idx = i;

  return run_parallel(config, [&](uint64_t t) {
    TrialOutput out;
    Rng rng = Rng::stream(config.seed, "fig2", t);

    std::vector<NodeClock> free_clocks(f.n_ap), ideal_clocks(f.n_ap);
    for (auto& c : free_clocks)
      c.eps = rng.uniform(-f.eps_max_hz, f.eps_max_hz);

    std::vector<Eigen::MatrixXcd> h(nus.size());
    for (auto& m : h) m = random_rayleigh(rng, f.n_ap, f.n_ut);
    std::vector<Eigen::MatrixXcd> h_su(nus.size());
    for (size_t s = 0; s < h.size(); ++s) h_su[s] = h[s].leftCols(1);

    RateEvalInput in;
    in.nu_signed = nus;
    in.calibration = Eigen::VectorXcd::Ones(f.n_ap);
    in.ut_clocks.resize(f.n_ut);
    in.params = config.ofdm;

    struct Variant {
      const char* name;
      bool zf;
      bool free_running;
    };
    const Variant variants[] = {{"zf_ideal", true, false},
                                {"zf_free", true, true},
                                {"conj_ideal", false, false},
                                {"conj_free", false, true}};
    for (const auto& v : variants) {
      // All clocks start aligned at m = 0 (tau = 0), so the m = 0 effective
      // channel equals the physical one and the estimate is exact there.
      in.h_true = v.zf ? h : h_su;
      in.h_est = in.h_true;
      in.ap_clocks = v.free_running ? free_clocks : ideal_clocks;
      in.zero_forcing = v.zf;
      for (size_t i = 0; i < f.snr_db.size(); ++i) {
        in.snr_db = f.snr_db[i];
        const RateResult rr = evaluate_rates(in, symbols);
        double value = 0.0;
        for (int k = 0; k < rr.rate.rows(); ++k)
          value += mean_over_symbols(rr, k);
        out.table.add("fig2", t, "snr_db=" + fmt(f.snr_db[i]),
                      std::string(v.zf ? "sum_rate_" : "rate_su_") + v.name,
                      value);
        if (i == report_idx && std::string(v.name) == "zf_free") {
          for (int k = 0; k < rr.rate.rows(); ++k)
            for (int m = 0; m < f.symbols; m += 10)
              out.rate_rows.push_back({t, k, m, rr.rate(k, m)});
        }
      }
    }
    return out;
  });
}

ExperimentResult run_fig5(const ExperimentConfig& config) {
  const auto& f = config.fig5;
  const int na = f.n_anchors;
  std::vector<NodeId> anchors(na);
  for (int i = 0; i < na; ++i) anchors[i] = i;
  const std::vector<int> nus = spread_subcarriers(config.ofdm.n, f.n_subcarriers);

  struct SweepPoint {
    int nc;
    double snr;
  };
  std::vector<SweepPoint> points;
  std::set<std::pair<int, double>> seen;
  for (double s : f.ap_ap_snr_db)
    if (seen.insert({f.nc_default, s}).second) points.push_back({f.nc_default, s});
  for (int nc : f.nc)
    if (seen.insert({nc, f.ap_ap_snr_default_db}).second)
      points.push_back({nc, f.ap_ap_snr_default_db});

  return run_parallel(config, [&](uint64_t t) {
    TrialOutput out;
    Rng rng = Rng::stream(config.seed, "fig5", t);

    std::vector<NodeClock> clocks(na);
    for (auto& c : clocks) {
      c.tau = rng.uniform(0.0, f.tau_max_chips * config.ofdm.ts());
      c.eps = rng.uniform(-f.eps_max_hz, f.eps_max_hz);
    }
    // Single-path AP-AP links: unit magnitude, random reciprocal phase.
    std::map<std::pair<int, int>, cd> edge_coeff;
    for (int i = 0; i < na; ++i)
      for (int j = i + 1; j < na; ++j)
        edge_coeff[{i, j}] = std::polar(1.0, rng.uniform(-M_PI, M_PI));

    std::vector<Eigen::MatrixXcd> h(nus.size());
    for (auto& m : h) m = random_rayleigh(rng, na, na);

    for (const auto& point : points) {
      PairwiseConfig pc;
      pc.nc = point.nc;
      pc.snr_db = point.snr;
      pc.crb_weights = f.crb_weights;
      pc.pilot_seed = config.seed;

      MeasurementSet ms;
      for (int i = 0; i < na; ++i)
        for (int j = i + 1; j < na; ++j) {
          const cd b = edge_coeff.at({i, j});
          ms.records.push_back(pairwise_measure(i, j, clocks[i], clocks[j], b,
                                                config.ofdm, pc, rng));
          ms.records.push_back(pairwise_measure(j, i, clocks[j], clocks[i], b,
                                                config.ofdm, pc, rng));
        }
      const SyncSolution sol = solve_corrections(ms, anchors, 0);

      RateEvalInput in;
      in.h_true = h;
      in.h_est.resize(h.size());
      for (size_t s = 0; s < h.size(); ++s) {
        // Noiseless TDD channel estimate taken at m = 0 after correction.
        Eigen::VectorXcd phi0(na);
        for (int a = 0; a < na; ++a)
          phi0[a] = phi_entry(clocks[a], config.ofdm, 0, nus[s]);
        in.h_est[s] = phi0.asDiagonal() * h[s];
      }
      in.nu_signed = nus;
      in.calibration = Eigen::VectorXcd::Ones(na);
      in.ap_clocks = clocks;
      in.ut_clocks.resize(na);
      in.ap_delta_corr.resize(na);
      for (int a = 0; a < na; ++a) in.ap_delta_corr[a] = sol.delta_corr.at(a);
      in.zero_forcing = true;
      in.snr_db = f.ap_ut_snr_db;
      in.params = config.ofdm;

      const RateResult rr = evaluate_rates(in, f.symbols);
      const std::string label =
          "nc=" + std::to_string(point.nc) + ";ap_ap_snr_db=" + fmt(point.snr);
      for (size_t mi = 0; mi < f.symbols.size(); ++mi)
        out.table.add("fig5", t,
                      label + ";m=" + std::to_string(f.symbols[mi]),
                      "sum_rate", sum_rate_at(rr, static_cast<int>(mi)));

      if (t == 0 && out.measurements_csv.empty())
        out.measurements_csv = measurements_to_csv(ms);
      if (point.nc == f.nc_default && point.snr == f.ap_ap_snr_default_db)
        for (int k = 0; k < na; ++k)
          for (size_t mi = 0; mi < f.symbols.size(); ++mi)
            out.rate_rows.push_back(
                {t, k, f.symbols[mi], rr.rate(k, static_cast<int>(mi))});
    }
    return out;
  });
}

ExperimentResult run_fig9(const ExperimentConfig& config) {
  const auto& f = config.fig9;
  const int m_len = f.nc + f.guard_chips;
  const Eigen::VectorXcd pilot = make_pilot_burst(f.nc, config.seed);

  struct Variant {
    std::string name;
    Eigen::VectorXcd h;
    std::vector<double> delays;
    Eigen::VectorXcd y0;
    double signal_power;
  };
  // The profile is centered at guard/2 so that every delay hypothesis on the
  // search grid keeps both taps of its triangular pulse inside the
  // observation window; at the window edge the objective is flat in dmu.
  const double delay_offset = f.guard_chips / 2.0;
  std::vector<Variant> variants;
  {
    Variant mp;
    mp.name = "multipath";
    mp.h = Eigen::VectorXd::Map(f.h.data(),
                                static_cast<Eigen::Index>(f.h.size()))
               .cast<cd>();
    for (double d : f.delays) mp.delays.push_back(d + delay_offset);
    variants.push_back(std::move(mp));
    if (f.single_path_variant) {
      Variant sp;
      sp.name = "single";
      sp.h = Eigen::VectorXcd::Ones(1);
      sp.delays = {delay_offset};
      variants.push_back(std::move(sp));
    }
  }
  for (auto& v : variants) {
    v.y0 = build_signal_matrix(0.0, 0.0, pilot, v.delays, m_len) * v.h;
    v.signal_power = v.y0.squaredNorm();
  }

  const GridSpec grid;  // defaults sized for this problem
  ExperimentResult result = run_parallel(config, [&](uint64_t t) {
    TrialOutput out;
    Rng rng = Rng::stream(config.seed, "fig9", t);
    for (const auto& v : variants) {
      for (double snr_db : f.snr_db) {
        const double n0 =
            v.signal_power / (m_len * std::pow(10.0, snr_db / 10.0));
        Eigen::VectorXcd y = v.y0;
        for (int m = 0; m < m_len; ++m) y[m] += rng.cnormal(n0);
        const EstimationResult est = ml_estimate(y, pilot, v.delays, grid);
        const std::string sweep =
            "variant=" + v.name + ";snr_db=" + fmt(snr_db);
        out.table.add("fig9", t, sweep, "sqerr_dxi", est.dxi * est.dxi);
        out.table.add("fig9", t, sweep, "sqerr_dmu", est.dmu * est.dmu);
      }
    }
    return out;
  });

  for (const auto& v : variants)
    for (double snr_db : f.snr_db) {
      const double n0 =
          v.signal_power / (m_len * std::pow(10.0, snr_db / 10.0));
      const CrbResult bound = crb(0.0, 0.0, v.h, pilot, v.delays, m_len, n0);
      const std::string sweep = "variant=" + v.name + ";snr_db=" + fmt(snr_db);
      result.table.add("fig9", 0, sweep, "crb_dxi", bound.var_dxi);
      result.table.add("fig9", 0, sweep, "crb_dmu", bound.var_dmu);
    }
  result.table.sort();
  return result;
}

ExperimentResult run_grid_cdf(const ExperimentConfig& config) {
  const auto& f = config.grid;
  const int n_ap = f.grid_side * f.grid_side;
  const double side = f.diagonal_m / std::sqrt(2.0);
  const double spacing = side / (f.grid_side - 1);

  std::vector<Eigen::Vector2d> ap_pos;
  ap_pos.reserve(n_ap);
  for (int r = 0; r < f.grid_side; ++r)
    for (int c = 0; c < f.grid_side; ++c)
      ap_pos.emplace_back(c * spacing, r * spacing);

  // Link SNRs are referenced to the mean pathloss at the grid spacing, where
  // the calibration SNR is defined.
  const double ref_pl_db = mean_pathloss_db(spacing, f.f0_ghz);
  const NetworkGraph graph = build_graph(
      n_ap, ap_pos, f.graph_snr_threshold_db, [&](NodeId i, NodeId j) {
        const double d = (ap_pos[i] - ap_pos[j]).norm();
        return f.cal_snr_db - (mean_pathloss_db(d, f.f0_ghz) - ref_pl_db);
      });
  const EdgeList ls_edges = build_calibration_subgraph(
      graph, parse_subgraph_strategy(f.subgraph), f.argos_center);
  EdgeList star_edges;
  for (int j = 0; j < n_ap; ++j)
    if (j != f.argos_center)
      star_edges.emplace_back(std::min(j, f.argos_center),
                              std::max(j, f.argos_center));

  const double ref_gain = std::pow(10.0, -ref_pl_db / 10.0);
  const double n0_cal = ref_gain * std::pow(10.0, -f.cal_snr_db / 10.0);
  const bool ul_noise = f.ul_pilot_snr_db > -1000.0;
  const double n0_ul =
      ref_gain * std::pow(10.0, -f.ul_pilot_snr_db / 10.0);
  const double limit = std::pow(10.0, f.per_antenna_limit_db / 10.0);
  const double rho_hw = solve_hw_spread(f.hw_spread_target);

  ChannelConfig cc;
  cc.f0_ghz = f.f0_ghz;
  cc.n_subcarriers = 1;

  return run_parallel(config, [&](uint64_t t) {
    TrialOutput out;
    Rng rng = Rng::stream(config.seed, "grid-cdf", t);

    std::vector<Eigen::Vector2d> ut_pos(f.n_ut);
    for (auto& p : ut_pos)
      p = {rng.uniform(0.0, side), rng.uniform(0.0, side)};
    const ChannelRealization ch = sample_channel(rng, ap_pos, ut_pos, cc);
    const HardwareCoeffs hw =
        sample_hardware_coeffs(rng, n_ap, f.n_ut, rho_hw);
    const CalibrationSolution genie = genie_calibration(hw.ap_tx, hw.ap_rx);

    Eigen::MatrixXcd h_true(n_ap, f.n_ut), h_ul(n_ap, f.n_ut);
    for (int i = 0; i < n_ap; ++i)
      for (int k = 0; k < f.n_ut; ++k) {
        const cd b = ch.ap_ut_gain(i, k) * ch.ap_ut_fading[0](i, k);
        h_true(i, k) = hw.ap_tx[i] * b * hw.ut_rx[k];
        h_ul(i, k) = hw.ap_rx[i] * b * hw.ut_tx[k];
      }

    RateEvalInput in;
    in.h_true = {h_true};
    in.nu_signed = {0};
    in.ap_clocks.resize(n_ap);
    in.ut_clocks.resize(f.n_ut);
    in.per_antenna_limit = limit;
    in.noise_power = 1.0;
    in.params = config.ofdm;

    for (int draw = 0; draw < f.noise_draws; ++draw) {
      const CalibrationObservations obs_ls =
          gather_observations(ch.ap_ap_gain, ch.ap_ap_fading[0], hw.ap_tx,
                              hw.ap_rx, ls_edges, n0_cal, rng);
      const CalibrationObservations obs_star =
          gather_observations(ch.ap_ap_gain, ch.ap_ap_fading[0], hw.ap_tx,
                              hw.ap_rx, star_edges, n0_cal, rng);
      const CalibrationSolution ls = solve_ls_calibration(build_A(obs_ls));
      const CalibrationSolution argos =
          argos_calibration(obs_star, f.argos_center);

      Eigen::MatrixXcd h_est = h_ul;
      if (ul_noise)
        for (int i = 0; i < n_ap; ++i)
          for (int k = 0; k < f.n_ut; ++k) h_est(i, k) += rng.cnormal(n0_ul);
      in.h_est = {h_est};

      const std::pair<const char*, const Eigen::VectorXcd*> methods[] = {
          {"ls", &ls.c}, {"argos", &argos.c}, {"genie", &genie.c}};
      for (const auto& [name, c] : methods) {
        in.calibration = *c;
        for (bool zf : {true, false}) {
          in.zero_forcing = zf;
          const RateResult rr = evaluate_rates(in, {0});
          const std::string sweep = std::string("method=") + name +
                                    ";precoder=" + (zf ? "zfbf" : "conj");
          for (int k = 0; k < f.n_ut; ++k)
            out.table.add("grid-cdf", t, sweep, "user_rate", rr.rate(k, 0));
          if (draw == 0 && zf && std::string(name) == "ls")
            for (int k = 0; k < f.n_ut; ++k)
              out.rate_rows.push_back({t, k, 0, rr.rate(k, 0)});
        }
      }
    }
    return out;
  });
}

ExperimentResult run_custom(const ExperimentConfig& config) {
  return run_parallel(config, [&](uint64_t t) {
    TrialOutput out;
    Rng rng = Rng::stream(config.seed, "custom", t);
    for (const auto& stage : config.custom.pipeline) {
      if (stage == "pairwise") {
        NodeClock tx{0.5 * config.ofdm.ts(), 400.0};
        NodeClock rx{0.0, -400.0};
        const PairwiseConfig pc;
        const PairwiseMeasurement m = pairwise_measure(
            0, 1, tx, rx, cd(1.0, 0.0), config.ofdm, pc, rng);
        out.table.add("custom", t, "stage=pairwise", "d_delta", m.d_delta);
        out.table.add("custom", t, "stage=pairwise", "d_mu", m.d_mu);
      } else if (stage == "crb") {
        const auto& f = config.fig9;
        const Eigen::VectorXcd pilot = make_pilot_burst(f.nc, config.seed);
        const Eigen::VectorXcd h =
            Eigen::VectorXd::Map(f.h.data(), f.h.size()).cast<cd>();
        const int m_len = f.nc + f.guard_chips;
        const double p_sig =
            (build_signal_matrix(0.0, 0.0, pilot, f.delays, m_len) * h)
                .squaredNorm();
        const CrbResult bound =
            crb(0.0, 0.0, h, pilot, f.delays, m_len, p_sig / (m_len * 10.0));
        out.table.add("custom", t, "stage=crb", "crb_dxi", bound.var_dxi);
        out.table.add("custom", t, "stage=crb", "crb_dmu", bound.var_dmu);
      } else if (stage == "calibration") {
        const int n = 8;
        const HardwareCoeffs hw =
            sample_hardware_coeffs(rng, n, 0, solve_hw_spread(0.1));
        Eigen::MatrixXd gain = Eigen::MatrixXd::Ones(n, n);
        Eigen::MatrixXcd fading(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) fading(i, j) = fading(j, i) = rng.cnormal();
        EdgeList edges;
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
        const CalibrationObservations obs = gather_observations(
            gain, fading, hw.ap_tx, hw.ap_rx, edges, 0.0, rng);
        const CalibrationSolution ls = solve_ls_calibration(build_A(obs));
        const CalibrationSolution genie =
            genie_calibration(hw.ap_tx, hw.ap_rx);
        out.table.add("custom", t, "stage=calibration", "genie_alignment",
                      std::abs(ls.c.dot(genie.c)));
        out.table.add("custom", t, "stage=calibration", "residual",
                      ls.residual);
      } else if (stage == "coloring") {
        const int n = 6;
        std::vector<std::vector<NodeId>> adj(n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            if (i != j) adj[i].push_back(j);
        NetworkGraph clique(n, {}, adj, Eigen::MatrixXd::Zero(n, n));
        std::vector<NodeId> all(n);
        for (int i = 0; i < n; ++i) all[i] = i;
        const AnchorSet anchors = validate_anchor_cover(clique, all);
        const PilotAssignment pa = l11_coloring(clique, anchors);
        out.table.add("custom", t, "stage=coloring", "num_colors",
                      pa.num_colors);
      } else {
        throw ConfigError("unknown pipeline stage '" + stage + "'");
      }
    }
    return out;
  });
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  if (config.experiment == "fig2") return run_fig2(config);
  if (config.experiment == "fig5") return run_fig5(config);
  if (config.experiment == "fig9") return run_fig9(config);
  if (config.experiment == "grid-cdf") return run_grid_cdf(config);
  if (config.experiment == "custom") return run_custom(config);
  throw ConfigError("unknown experiment '" + config.experiment + "'");
}

void write_outputs(const ExperimentResult& result,
                   const ExperimentConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + out_dir);

  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream f(fs::path(out_dir) / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write output file: " + name);
    f << text;
  };

  write("results.csv", table_to_csv(result.table, config));
  write("summary.csv", table_summary_csv(result.table, config));
  write("config.json", config_to_json(config) + "\n");
  if (!result.rates.rows.empty()) {
    write("rates.csv", artifact_header(config) + rate_report_to_csv(result.rates));
    write("rates_summary.csv",
          artifact_header(config) + rate_report_summary(result.rates));
  }
  if (!result.measurements_csv.empty())
    write("measurements.csv", artifact_header(config) + result.measurements_csv);
}

}  // namespace dmimo
