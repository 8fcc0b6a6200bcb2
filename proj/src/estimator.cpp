#include "dmimo/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace dmimo {

Eigen::VectorXcd make_pilot_burst(int nc, uint64_t seed) {
  if (nc % 4 != 0) throw ConfigError("pilot burst length must be divisible by 4");
  const int rep = nc / 4;
  Rng rng = Rng::stream(seed, "pilot-burst", 0);
  Eigen::VectorXcd seq(rep);
  for (int i = 0; i < rep; ++i) {
    const int q = static_cast<int>(rng.uniform_int(4));
    seq[i] = std::polar(1.0, M_PI / 4.0 + q * M_PI / 2.0);
  }
  Eigen::VectorXcd burst = Eigen::VectorXcd::Zero(nc);
  burst.segment(0, rep) = seq;
  burst.segment(rep + nc / 2, rep) = seq;
  return burst;
}

double tri(double t) { return std::max(0.0, 1.0 - std::abs(t)); }

namespace {

// W = S * Tri(dmu): the pilot convolved with the sampled triangular pulse,
// one column per path. W[m, p] = sum_l s_{m-l} tri(l - dmu - rho_p) with the
// lag l restricted to 0 .. m_len - nc (the row range of Tri).
Eigen::MatrixXcd pilot_response(double dmu, const Eigen::VectorXcd& pilot,
                                const std::vector<double>& delay_chips,
                                int m_len) {
  const int nc = static_cast<int>(pilot.size());
  const int np = static_cast<int>(delay_chips.size());
  if (m_len < nc) throw DimensionMismatch("observation window shorter than burst");
  Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(m_len, np);
  for (int p = 0; p < np; ++p) {
    const double shift = dmu + delay_chips[p];
    const int l0 = static_cast<int>(std::floor(shift));
    for (int l : {l0, l0 + 1}) {
      const double weight = tri(l - shift);
      if (weight == 0.0 || l < 0 || l > m_len - nc) continue;
      for (int n = 0; n < nc; ++n) w(l + n, p) += pilot[n] * weight;
    }
  }
  return w;
}

Eigen::VectorXcd rotate_conj(const Eigen::VectorXcd& y, double dxi) {
  Eigen::VectorXcd out(y.size());
  for (int m = 0; m < y.size(); ++m)
    out[m] = y[m] * std::polar(1.0, -2.0 * M_PI * dxi * m);
  return out;
}

struct GramInfo {
  Eigen::MatrixXcd w;
  Eigen::LDLT<Eigen::MatrixXcd> ldlt;
  bool usable = false;
};

GramInfo gram_for(double dmu, const Eigen::VectorXcd& pilot,
                  const std::vector<double>& delay_chips, int m_len,
                  double cond_threshold) {
  GramInfo info;
  info.w = pilot_response(dmu, pilot, delay_chips, m_len);
  const Eigen::MatrixXcd gram = info.w.adjoint() * info.w;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram,
                                                     Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo > 0.0 && hi / lo < cond_threshold) {
    info.ldlt.compute(gram);
    info.usable = true;
  }
  return info;
}

double objective_at(const GramInfo& gram, const Eigen::VectorXcd& y,
                    double dxi) {
  const Eigen::VectorXcd v = gram.w.adjoint() * rotate_conj(y, dxi);
  return v.dot(gram.ldlt.solve(v)).real();
}

}  // namespace

Eigen::MatrixXcd build_signal_matrix(double dxi, double dmu,
                                     const Eigen::VectorXcd& pilot,
                                     const std::vector<double>& delay_chips,
                                     int m_len) {
  Eigen::MatrixXcd gamma = pilot_response(dmu, pilot, delay_chips, m_len);
  for (int m = 0; m < m_len; ++m)
    gamma.row(m) *= std::polar(1.0, 2.0 * M_PI * dxi * m);
  return gamma;
}

double projection_objective(const Eigen::VectorXcd& y,
                            const Eigen::VectorXcd& pilot,
                            const std::vector<double>& delay_chips, double dxi,
                            double dmu) {
  GramInfo gram =
      gram_for(dmu, pilot, delay_chips, static_cast<int>(y.size()), 1e10);
  if (!gram.usable) throw SingularGram("Gram matrix ill-conditioned");
  return objective_at(gram, y, dxi);
}

EstimationResult ml_estimate(const Eigen::VectorXcd& y,
                             const Eigen::VectorXcd& pilot,
                             const std::vector<double>& delay_chips,
                             const GridSpec& grid) {
  const int m_len = static_cast<int>(y.size());
  double dxi_step = grid.dxi_step > 0.0 ? grid.dxi_step : 1.0 / (4.0 * m_len);
  double dmu_step = grid.dmu_step;

  struct Best {
    double f = -1.0;
    double dxi = 0.0;
    double dmu = 0.0;
  } best;

  auto search = [&](const std::vector<double>& dxis,
                    const std::vector<double>& dmus) {
    std::vector<GramInfo> grams;
    grams.reserve(dmus.size());
    bool any_usable = false;
    for (double dmu : dmus) {
      grams.push_back(
          gram_for(dmu, pilot, delay_chips, m_len, grid.gram_cond_threshold));
      any_usable |= grams.back().usable;
    }
    if (!any_usable)
      throw SingularGram("Gram matrix ill-conditioned over the whole grid");
    for (double dxi : dxis) {
      const Eigen::VectorXcd w = rotate_conj(y, dxi);
      for (size_t k = 0; k < dmus.size(); ++k) {
        if (!grams[k].usable) continue;
        const Eigen::VectorXcd v = grams[k].w.adjoint() * w;
        const double f = v.dot(grams[k].ldlt.solve(v)).real();
        if (f > best.f) best = {f, dxi, dmus[k]};
      }
    }
  };

  auto linspace = [](double lo, double hi, double step) {
    std::vector<double> out;
    for (double v = lo; v <= hi + 1e-15; v += step) out.push_back(v);
    return out;
  };

  search(linspace(-grid.dxi_half_range, grid.dxi_half_range, dxi_step),
         linspace(grid.dmu_min, grid.dmu_max, dmu_step));

  // Local refinement around the coarse argmax.
  const int half_pts = 6;
  for (int pass = 0; pass < grid.refine_passes; ++pass) {
    dxi_step /= 8.0;
    dmu_step /= 8.0;
    std::vector<double> dxis, dmus;
    for (int k = -half_pts; k <= half_pts; ++k) {
      const double x = best.dxi + k * dxi_step;
      if (std::abs(x) <= grid.dxi_half_range + 1e-15) dxis.push_back(x);
      const double u = best.dmu + k * dmu_step;
      if (u >= grid.dmu_min - 1e-12 && u <= grid.dmu_max + 1e-12)
        dmus.push_back(u);
    }
    search(dxis, dmus);
  }

  GramInfo gram =
      gram_for(best.dmu, pilot, delay_chips, m_len, grid.gram_cond_threshold);
  if (!gram.usable) throw SingularGram("Gram matrix ill-conditioned at optimum");
  EstimationResult result;
  result.dxi = best.dxi;
  result.dmu = best.dmu;
  result.objective = best.f;
  result.h_hat = gram.ldlt.solve(gram.w.adjoint() * rotate_conj(y, best.dxi));
  return result;
}

CrbResult crb(double dxi, double dmu, const Eigen::VectorXcd& h,
              const Eigen::VectorXcd& pilot,
              const std::vector<double>& delay_chips, int m_len, double n0) {
  const int np = static_cast<int>(delay_chips.size());
  if (h.size() != np) throw DimensionMismatch("crb: h size vs delays");
  const int nc = static_cast<int>(pilot.size());

  const Eigen::MatrixXcd w = pilot_response(dmu, pilot, delay_chips, m_len);

  // S * Tri'(dmu): each Tri' column has exactly two nonzero entries, -1 at
  // floor(dmu + rho_p) and +1 at the next index.
  Eigen::MatrixXcd wprime = Eigen::MatrixXcd::Zero(m_len, np);
  for (int p = 0; p < np; ++p) {
    const int l0 = static_cast<int>(std::floor(dmu + delay_chips[p]));
    for (auto [l, sign] : {std::pair{l0, -1.0}, std::pair{l0 + 1, 1.0}}) {
      if (l < 0 || l > m_len - nc) continue;
      for (int n = 0; n < nc; ++n) wprime(l + n, p) += sign * pilot[n];
    }
  }

  Eigen::VectorXcd xi(m_len);
  for (int m = 0; m < m_len; ++m) xi[m] = std::polar(1.0, 2.0 * M_PI * dxi * m);

  Eigen::MatrixXcd k(m_len, 2 * (np + 1));
  const Eigen::VectorXcd wh = w * h;
  for (int m = 0; m < m_len; ++m)
    k(m, 0) = cd(0.0, 2.0 * M_PI * m) * xi[m] * wh[m];
  k.col(1) = xi.asDiagonal() * (wprime * h);
  for (int p = 0; p < np; ++p) {
    k.col(2 + 2 * p) = xi.asDiagonal() * w.col(p);
    k.col(3 + 2 * p) = cd(0.0, 1.0) * (xi.asDiagonal() * w.col(p));
  }

  CrbResult out;
  out.fisher = (2.0 / n0) * (k.adjoint() * k).real();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(out.fisher);
  if (!lu.isInvertible())
    throw SingularFisher("Fisher information matrix is singular");
  const Eigen::MatrixXd inv = lu.inverse();
  out.var_dxi = inv(0, 0);
  out.var_dmu = inv(1, 1);
  if (out.var_dxi <= 0.0 || out.var_dmu <= 0.0)
    throw SingularFisher("non-positive CRB, unidentifiable configuration");
  return out;
}

PairwiseMeasurement pairwise_measure(NodeId tx_id, NodeId rx_id,
                                     const NodeClock& tx, const NodeClock& rx,
                                     cd h_coeff, const OfdmParams& params,
                                     const PairwiseConfig& config, Rng& rng) {
  const auto otx = normalized_offsets(tx, params);
  const auto orx = normalized_offsets(rx, params);
  const double dxi_true = (otx.Delta - orx.Delta) / params.block_len();
  const double dmu_true = otx.mu - orx.mu;

  const int m_len = config.nc + config.guard_chips;
  const std::vector<double> delays{config.guard_chips / 2.0};
  const Eigen::VectorXcd pilot = make_pilot_burst(config.nc, config.pilot_seed);
  Eigen::VectorXcd h(1);
  h[0] = h_coeff;

  const Eigen::MatrixXcd gamma =
      build_signal_matrix(dxi_true, dmu_true, pilot, delays, m_len);
  Eigen::VectorXcd y = gamma * h;
  const double snr = std::pow(10.0, config.snr_db / 10.0);
  // Receiver SNR is defined over the active pilot chips (half the burst is
  // zeros, which carry no signal energy).
  const double n0 = y.squaredNorm() / ((config.nc / 2) * snr);
  for (int m = 0; m < m_len; ++m) y[m] += rng.cnormal(n0);

  const EstimationResult est = ml_estimate(y, pilot, delays, config.grid);

  PairwiseMeasurement meas;
  meas.rx = rx_id;
  meas.tx = tx_id;
  meas.d_delta = params.block_len() * est.dxi;
  meas.d_mu = est.dmu;
  if (config.crb_weights) {
    const CrbResult bound = crb(0.0, 0.0, h, pilot, delays, m_len, n0);
    meas.beta = 1.0 / (params.block_len() * params.block_len() * bound.var_dxi);
    meas.gamma = 1.0 / bound.var_dmu;
  }
  return meas;
}

}  // namespace dmimo
