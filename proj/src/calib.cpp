#include "dmimo/calib.hpp"

#include <cmath>
#include <sstream>

namespace dmimo {

CalibrationObservations gather_observations(
    const Eigen::MatrixXd& ap_ap_gain, const Eigen::MatrixXcd& ap_ap_fading,
    const Eigen::VectorXcd& ap_tx, const Eigen::VectorXcd& ap_rx,
    const EdgeList& subgraph, double n0, Rng& rng, double pilot_amplitude) {
  const int n_ap = static_cast<int>(ap_tx.size());
  if (ap_rx.size() != n_ap || ap_ap_gain.rows() != n_ap ||
      ap_ap_fading.rows() != n_ap)
    throw DimensionMismatch("calibration inputs disagree on AP count");
  if (pilot_amplitude <= 0.0) throw ConfigError("non-positive pilot amplitude");

  CalibrationObservations obs;
  obs.n_ap = n_ap;
  obs.edges.reserve(subgraph.size());
  for (auto [i, j] : subgraph) {
    if (i < 0 || j >= n_ap || i >= j)
      throw ConfigError("calibration edge outside AP range or not i<j");
    const cd b = ap_ap_gain(i, j) * ap_ap_fading(i, j);  // reciprocal link
    CalibrationObservations::Edge e;
    e.i = i;
    e.j = j;
    e.y_ij = ap_tx[i] * b * ap_rx[j] + rng.cnormal(n0) / pilot_amplitude;
    e.y_ji = ap_tx[j] * b * ap_rx[i] + rng.cnormal(n0) / pilot_amplitude;
    obs.edges.push_back(e);
  }
  return obs;
}

Eigen::MatrixXcd build_A(const CalibrationObservations& observations) {
  const int n = observations.n_ap;
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& e : observations.edges) {
    // |c_i Y_ij - c_j Y_ji|^2 contributes to rows/cols (i, j).
    a(e.i, e.i) += std::norm(e.y_ij);
    a(e.j, e.j) += std::norm(e.y_ji);
    a(e.i, e.j) -= std::conj(e.y_ij) * e.y_ji;
    a(e.j, e.i) -= std::conj(e.y_ji) * e.y_ij;
  }
  return a;
}

double j_cal(const CalibrationObservations& observations,
             const Eigen::VectorXcd& c) {
  if (c.size() != observations.n_ap)
    throw DimensionMismatch("j_cal: c size vs AP count");
  double cost = 0.0;
  for (const auto& e : observations.edges)
    cost += std::norm(c[e.i] * e.y_ij - c[e.j] * e.y_ji);
  return cost;
}

Eigen::VectorXcd gauge_fix(Eigen::VectorXcd c) {
  const double norm = c.norm();
  if (norm <= 0.0) throw DegenerateNullspace("zero calibration vector");
  c /= norm;
  const double mag = std::abs(c[0]);
  if (mag <= 0.0)
    throw DegenerateNullspace("first calibration entry vanishes; gauge undefined");
  c *= std::conj(c[0]) / mag;
  return c;
}

CalibrationSolution solve_ls_calibration(const Eigen::MatrixXcd& a,
                                         double degeneracy_gap) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  if (ev.size() > 1 && (ev[1] - ev[0]) / scale < degeneracy_gap)
    throw DegenerateNullspace(
        "smallest two eigenvalues nearly equal; calibration not identifiable");
  CalibrationSolution sol;
  sol.c = gauge_fix(es.eigenvectors().col(0));
  sol.method = "ls";
  sol.residual = (sol.c.adjoint() * a * sol.c)(0).real();
  return sol;
}

CalibrationSolution argos_calibration(const CalibrationObservations& observations,
                                      NodeId center, double denom_floor) {
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(observations.n_ap);
  Eigen::VectorXd seen = Eigen::VectorXd::Zero(observations.n_ap);
  c[center] = 1.0;
  seen[center] = 1.0;
  for (const auto& e : observations.edges) {
    if (e.i != center && e.j != center) continue;
    // c_j = Y_{center->j} / Y_{j->center}; y_ij is "i transmits, j receives".
    const NodeId other = (e.i == center) ? e.j : e.i;
    const cd from_center = (e.i == center) ? e.y_ij : e.y_ji;
    const cd to_center = (e.i == center) ? e.y_ji : e.y_ij;
    if (std::abs(to_center) < denom_floor)
      throw ZeroDenominator("vanishing return pilot at AP " +
                            std::to_string(other));
    c[other] = from_center / to_center;
    seen[other] = 1.0;
  }
  if (seen.minCoeff() <= 0.0)
    throw ConfigError("star calibration needs an edge from the center to every AP");
  CalibrationSolution sol;
  sol.c = gauge_fix(c);
  sol.method = "argos";
  sol.residual = j_cal(observations, sol.c);
  return sol;
}

CalibrationSolution genie_calibration(const Eigen::VectorXcd& ap_tx,
                                      const Eigen::VectorXcd& ap_rx) {
  if (ap_tx.size() != ap_rx.size())
    throw DimensionMismatch("genie calibration: tx/rx size mismatch");
  CalibrationSolution sol;
  sol.c = gauge_fix(ap_rx.cwiseQuotient(ap_tx));
  sol.method = "genie";
  return sol;
}

Eigen::VectorXcd apply_calibration(const Eigen::VectorXcd& tx,
                                   const Eigen::VectorXcd& c) {
  if (tx.size() != c.size())
    throw DimensionMismatch("apply_calibration: size mismatch");
  return tx.cwiseProduct(c);
}

std::string calibration_to_csv(const CalibrationSolution& solution) {
  std::ostringstream os;
  os.precision(17);
  os << "ap,re,im,method,residual\n";
  for (int i = 0; i < solution.c.size(); ++i)
    os << i << ',' << solution.c[i].real() << ',' << solution.c[i].imag() << ','
       << solution.method << ',' << solution.residual << '\n';
  return os.str();
}

std::string observations_to_csv(const CalibrationObservations& observations) {
  std::ostringstream os;
  os.precision(17);
  os << "i,j,yij_re,yij_im,yji_re,yji_im\n";
  for (const auto& e : observations.edges)
    os << e.i << ',' << e.j << ',' << e.y_ij.real() << ',' << e.y_ij.imag()
       << ',' << e.y_ji.real() << ',' << e.y_ji.imag() << '\n';
  return os.str();
}

}  // namespace dmimo
