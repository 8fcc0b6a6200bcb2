#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "dmimo/errors.hpp"
#include "dmimo/rng.hpp"

namespace dmimo {

using cd = std::complex<double>;

struct OfdmParams {
  int n = 64;            // subcarriers
  int cp = 16;           // cyclic prefix, chips
  int oversampling = 1;  // receiver oversampling factor p
  double fs = 40e6;      // nominal sampling rate, Hz
  double f0 = 2.45e9;    // nominal carrier, Hz

  double ts() const { return 1.0 / fs; }
  double kappa() const { return f0 / fs; }
  int block_len() const { return n + cp; }
  double subcarrier_spacing() const { return fs / n; }
};

/// Per-node timing offset (s) and sampling frequency offset (Hz).
struct NodeClock {
  double tau = 0.0;
  double eps = 0.0;
};

/// Dimensionless offsets: mu = fs*tau, delta = (N+L)*Ts*eps, Delta = kappa*delta.
struct NormalizedOffsets {
  double mu = 0.0;
  double delta = 0.0;
  double Delta = 0.0;
};

NormalizedOffsets normalized_offsets(const NodeClock& clock,
                                     const OfdmParams& params);

/// Signed normalized subcarrier index [nu/N] for nu in {-N/2, ..., N/2-1}.
double signed_subcarrier(int nu, int n);

/// Signed subcarrier index from FFT bin k in {0, ..., N-1}.
int bin_to_signed(int k, int n);

/// Combined TO/SFO/CFO rotation E_{i,j}[m, nu] between transmitter i and
/// receiver j (nu is the signed index). Unit modulus.
cd effective_rotation(const NodeClock& tx, const NodeClock& rx,
                      const OfdmParams& params, int m, int nu);

/// AP-side diagonal entry phi_{i,i}[m, nu].
cd phi_entry(const NodeClock& clock, const OfdmParams& params, int m, int nu);

/// UT-side diagonal entry theta_{k,k}[m, nu].
cd theta_entry(const NodeClock& clock, const OfdmParams& params, int m, int nu);

/// Diagonals of the AP and UT rotation matrices at (m, nu).
std::pair<Eigen::VectorXcd, Eigen::VectorXcd> phi_theta_matrices(
    const std::vector<NodeClock>& ap_clocks,
    const std::vector<NodeClock>& ut_clocks, const OfdmParams& params, int m,
    int nu);

/// Transmit-side symbol rotation P_i[m, nu] for frequency correction
/// Delta_corr. The uplink receive compensation is conj(P_i).
cd tx_correction(double delta_corr, const OfdmParams& params, int m, int nu);

/// One multipath tap of the analog channel.
struct MultipathTap {
  cd coeff;
  double delay_s = 0.0;
};

/// Synthesizes the received time-domain sample blocks (after CP removal) for
/// a sequence of OFDM symbols sent from tx to rx, keeping the chip-rate
/// carrier phase ramp inside each symbol so that residual ICI is modeled.
/// tx_symbols[m] holds N frequency-domain symbols in FFT bin order.
/// Returns an M x (p*N) matrix of samples. Noise CN(0, n0) per sample.
Eigen::MatrixXcd synthesize_rx(const std::vector<Eigen::VectorXcd>& tx_symbols,
                               const std::vector<MultipathTap>& taps,
                               const NodeClock& tx_clock,
                               const NodeClock& rx_clock,
                               const OfdmParams& params, double n0, Rng& rng);

/// Plain DFT demodulation (oversampling 1 only): Y[m, k] per FFT bin.
Eigen::MatrixXcd demodulate(const Eigen::MatrixXcd& rx_blocks,
                            const OfdmParams& params);

Eigen::VectorXcd ifft(const Eigen::VectorXcd& freq);
Eigen::VectorXcd fft(const Eigen::VectorXcd& time);

}  // namespace dmimo
