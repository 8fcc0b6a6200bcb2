#include "dmimo/mumimo.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace dmimo {

namespace {

Eigen::MatrixXcd normalize_rows(Eigen::MatrixXcd g) {
  for (int u = 0; u < g.rows(); ++u) {
    const double norm = g.row(u).norm();
    if (norm <= 0.0) throw SingularChannel("zero precoder row");
    g.row(u) /= norm;
  }
  return g;
}

}  // namespace

Eigen::MatrixXcd zfbf(const Eigen::MatrixXcd& h, double cond_threshold) {
  if (h.cols() > h.rows())
    throw ConfigError("zero-forcing needs at least as many APs as users");
  const Eigen::MatrixXcd gram = h.adjoint() * h;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram,
                                                     Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0 || hi / lo > cond_threshold)
    throw SingularChannel("channel estimate is rank deficient");
  return normalize_rows(gram.ldlt().solve(h.adjoint()));
}

Eigen::MatrixXcd conjugate_bf(const Eigen::MatrixXcd& h) {
  return normalize_rows(h.adjoint());
}

double power_scale(const Eigen::MatrixXcd& g, double per_antenna_limit) {
  if (per_antenna_limit <= 0.0) throw ConfigError("non-positive power limit");
  double max_power = 0.0;
  for (int a = 0; a < g.cols(); ++a)
    max_power = std::max(max_power, g.col(a).squaredNorm());
  if (max_power <= per_antenna_limit) return 1.0;
  return std::sqrt(per_antenna_limit / max_power);
}

RateResult evaluate_rates(const RateEvalInput& input,
                          const std::vector<int>& symbols) {
  const size_t n_sc = input.h_true.size();
  if (input.h_est.size() != n_sc || input.nu_signed.size() != n_sc)
    throw DimensionMismatch("rate evaluation: subcarrier lists disagree");
  if (n_sc == 0) throw ConfigError("rate evaluation needs a subcarrier");
  const int n_ap = static_cast<int>(input.h_true[0].rows());
  const int n_ut = static_cast<int>(input.h_true[0].cols());
  if (input.calibration.size() != n_ap ||
      static_cast<int>(input.ap_clocks.size()) != n_ap)
    throw DimensionMismatch("rate evaluation: AP count mismatch");
  const std::vector<double>& corr = input.ap_delta_corr;
  if (!corr.empty() && static_cast<int>(corr.size()) != n_ap)
    throw DimensionMismatch("rate evaluation: correction count mismatch");

  const bool absolute = input.per_antenna_limit > 0.0;
  const double rho = std::pow(10.0, input.snr_db / 10.0);

  RateResult result;
  result.symbols = symbols;
  result.rate = Eigen::MatrixXd::Zero(n_ut, static_cast<int>(symbols.size()));

  for (size_t s = 0; s < n_sc; ++s) {
    const int nu = input.nu_signed[s];
    Eigen::MatrixXcd g = input.zero_forcing ? zfbf(input.h_est[s])
                                            : conjugate_bf(input.h_est[s]);
    // The calibration multipliers are part of the transmitted signal, so they
    // are folded into the precoder before the power constraint is applied.
    // A global complex scale on the calibration vector therefore cancels.
    g = g * input.calibration.asDiagonal();
    if (absolute) {
      // Transmit at the full budget: common scaling so the busiest antenna
      // meets the per-antenna power constraint exactly.
      double max_power = 0.0;
      for (int a = 0; a < g.cols(); ++a)
        max_power = std::max(max_power, g.col(a).squaredNorm());
      if (max_power <= 0.0) throw SingularChannel("zero precoder");
      g *= std::sqrt(input.per_antenna_limit / max_power);
    } else {
      g = normalize_rows(std::move(g));
    }

    for (size_t mi = 0; mi < symbols.size(); ++mi) {
      const int m = symbols[mi];
      // Residual AP-side rotation after the applied frequency corrections.
      // UT-side rotations scale whole columns of M and cancel in the SINR.
      Eigen::VectorXcd diag(n_ap);
      for (int a = 0; a < n_ap; ++a) {
        cd r = phi_entry(input.ap_clocks[a], input.params, m, nu);
        if (!corr.empty()) r *= tx_correction(corr[a], input.params, m, nu);
        diag[a] = r;
      }
      const Eigen::MatrixXcd link = g * diag.asDiagonal() * input.h_true[s];
      for (int k = 0; k < n_ut; ++k) {
        const double sig = std::norm(link(k, k));
        double interf = link.col(k).squaredNorm() - sig;
        const double sinr = absolute
                                ? sig / (input.noise_power + interf)
                                : rho * sig / (1.0 + rho * interf);
        result.rate(k, static_cast<int>(mi)) += std::log2(1.0 + sinr) / n_sc;
      }
    }
  }
  return result;
}

std::string rate_report_to_csv(const RateReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "trial,user,m,rate\n";
  for (const auto& r : report.rows)
    os << r.trial << ',' << r.user << ',' << r.symbol << ',' << r.rate << '\n';
  return os.str();
}

std::string rate_report_summary(const RateReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "m,mean_rate,n\n";
  std::map<int, std::pair<double, long>> by_symbol;
  for (const auto& r : report.rows) {
    auto& acc = by_symbol[r.symbol];
    acc.first += r.rate;
    acc.second += 1;
  }
  for (const auto& [m, acc] : by_symbol)
    os << m << ',' << acc.first / acc.second << ',' << acc.second << '\n';
  return os.str();
}

}  // namespace dmimo
