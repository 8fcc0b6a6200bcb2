#include "dmimo/ofdm.hpp"

#include <cmath>

namespace dmimo {

NormalizedOffsets normalized_offsets(const NodeClock& clock,
                                     const OfdmParams& params) {
  NormalizedOffsets off;
  off.mu = params.fs * clock.tau;
  off.delta = params.block_len() * params.ts() * clock.eps;
  off.Delta = params.kappa() * off.delta;
  return off;
}

double signed_subcarrier(int nu, int n) {
  return static_cast<double>(nu) / static_cast<double>(n);
}

int bin_to_signed(int k, int n) { return k < n / 2 ? k : k - n; }

cd effective_rotation(const NodeClock& tx, const NodeClock& rx,
                      const OfdmParams& params, int m, int nu) {
  const auto a = normalized_offsets(tx, params);
  const auto b = normalized_offsets(rx, params);
  const double s = signed_subcarrier(nu, params.n);
  const double phase = -2.0 * M_PI * s * (a.mu - b.mu) +
                       2.0 * M_PI * s * (a.delta - b.delta) * m +
                       2.0 * M_PI * (a.Delta - b.Delta) * m;
  return std::polar(1.0, phase);
}

cd phi_entry(const NodeClock& clock, const OfdmParams& params, int m, int nu) {
  const auto o = normalized_offsets(clock, params);
  const double s = signed_subcarrier(nu, params.n);
  const double phase =
      -2.0 * M_PI * s * o.mu + 2.0 * M_PI * (s * o.delta + o.Delta) * m;
  return std::polar(1.0, phase);
}

cd theta_entry(const NodeClock& clock, const OfdmParams& params, int m,
               int nu) {
  const auto o = normalized_offsets(clock, params);
  const double s = signed_subcarrier(nu, params.n);
  const double phase =
      2.0 * M_PI * s * o.mu - 2.0 * M_PI * (s * o.delta + o.Delta) * m;
  return std::polar(1.0, phase);
}

std::pair<Eigen::VectorXcd, Eigen::VectorXcd> phi_theta_matrices(
    const std::vector<NodeClock>& ap_clocks,
    const std::vector<NodeClock>& ut_clocks, const OfdmParams& params, int m,
    int nu) {
  Eigen::VectorXcd phi(ap_clocks.size()), theta(ut_clocks.size());
  for (size_t i = 0; i < ap_clocks.size(); ++i)
    phi[i] = phi_entry(ap_clocks[i], params, m, nu);
  for (size_t k = 0; k < ut_clocks.size(); ++k)
    theta[k] = theta_entry(ut_clocks[k], params, m, nu);
  return {phi, theta};
}

cd tx_correction(double delta_corr, const OfdmParams& params, int m, int nu) {
  const double s = signed_subcarrier(nu, params.n);
  const double phase =
      -2.0 * M_PI * (1.0 + s / params.kappa()) * delta_corr * m;
  return std::polar(1.0, phase);
}

Eigen::VectorXcd ifft(const Eigen::VectorXcd& freq) {
  const int n = static_cast<int>(freq.size());
  Eigen::VectorXcd out(n);
  for (int k = 0; k < n; ++k) {
    cd acc = 0.0;
    for (int q = 0; q < n; ++q)
      acc += freq[q] * std::polar(1.0, 2.0 * M_PI * q * k / n);
    out[k] = acc / static_cast<double>(n);
  }
  return out;
}

Eigen::VectorXcd fft(const Eigen::VectorXcd& time) {
  const int n = static_cast<int>(time.size());
  Eigen::VectorXcd out(n);
  for (int q = 0; q < n; ++q) {
    cd acc = 0.0;
    for (int k = 0; k < n; ++k)
      acc += time[k] * std::polar(1.0, -2.0 * M_PI * q * k / n);
    out[q] = acc;
  }
  return out;
}

namespace {

// Analog pulse train Pi_i (x) channel taps, evaluated at time t seconds:
// rect of width ts_tx centered on each tap delay.
cd channel_response(const std::vector<MultipathTap>& taps, double t,
                    double ts_tx) {
  cd acc = 0.0;
  for (const auto& tap : taps) {
    const double arg = (t - tap.delay_s) / ts_tx;
    if (arg >= -0.5 && arg <= 0.5) acc += tap.coeff;
  }
  return acc;
}

}  // namespace

Eigen::MatrixXcd synthesize_rx(const std::vector<Eigen::VectorXcd>& tx_symbols,
                               const std::vector<MultipathTap>& taps,
                               const NodeClock& tx_clock,
                               const NodeClock& rx_clock,
                               const OfdmParams& params, double n0, Rng& rng) {
  const int n = params.n;
  const int cp = params.cp;
  const int p = params.oversampling;
  const double ts = params.ts();
  const int n_sym = static_cast<int>(tx_symbols.size());

  double max_delay = 0.0;
  for (const auto& tap : taps) max_delay = std::max(max_delay, tap.delay_s);
  const double budget =
      std::abs(tx_clock.tau - rx_clock.tau) / ts + max_delay / ts;
  if (budget > cp)
    throw TimingOutsideCp("relative timing offset plus delay spread (" +
                          std::to_string(budget) + " chips) exceeds the CP");

  const double ts_tx = 1.0 / (params.fs + tx_clock.eps);
  const double ts_rx = 1.0 / (params.fs + rx_clock.eps);
  const double dtau = tx_clock.tau - rx_clock.tau;
  const double df = params.kappa() * (tx_clock.eps - rx_clock.eps);

  Eigen::MatrixXcd rx(n_sym, p * n);
  for (int m = 0; m < n_sym; ++m) {
    if (tx_symbols[m].size() != n)
      throw DimensionMismatch("synthesize_rx: tx symbol block size");
    const Eigen::VectorXcd chips = ifft(tx_symbols[m]);
    const double block_shift = dtau + m * (n + cp) * (ts_tx - ts_rx);
    for (int q = 0; q < p * n; ++q) {
      cd acc = 0.0;
      for (int k = -cp; k < n; ++k) {
        const double t = (q - k * p) * ts / p - block_shift;
        const cd g = channel_response(taps, t, ts_tx);
        if (g != cd(0.0)) acc += chips[(k % n + n) % n] * g;
      }
      // Chip-rate carrier phase ramp; keeping the q term retains the ICI.
      const double phase =
          2.0 * M_PI * df * ts * (m * (n + cp) + static_cast<double>(q) / p);
      rx(m, q) = acc * std::polar(1.0, phase) + rng.cnormal(n0);
    }
  }
  return rx;
}

Eigen::MatrixXcd demodulate(const Eigen::MatrixXcd& rx_blocks,
                            const OfdmParams& params) {
  if (params.oversampling != 1)
    throw DimensionMismatch("demodulate supports oversampling 1 only");
  const int n = params.n;
  Eigen::MatrixXcd out(rx_blocks.rows(), n);
  for (int m = 0; m < rx_blocks.rows(); ++m)
    out.row(m) = fft(rx_blocks.row(m).transpose()).transpose();
  return out;
}

}  // namespace dmimo
