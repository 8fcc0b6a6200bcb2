#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dmimo/calib.hpp"
#include "dmimo/channel.hpp"
#include "dmimo/estimator.hpp"
#include "dmimo/experiments.hpp"
#include "dmimo/mumimo.hpp"
#include "dmimo/ofdm.hpp"
#include "dmimo/sync.hpp"
#include "dmimo/topology.hpp"

namespace py = pybind11;
using namespace dmimo;

PYBIND11_MODULE(_dmimo, m) {
  m.doc() = "Distributed MU-MIMO sync/calibration simulation core";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<NumericalError>(m, "NumericalError");

  py::class_<OfdmParams>(m, "OfdmParams")
      .def(py::init<>())
      .def_readwrite("n", &OfdmParams::n)
      .def_readwrite("cp", &OfdmParams::cp)
      .def_readwrite("oversampling", &OfdmParams::oversampling)
      .def_readwrite("fs", &OfdmParams::fs)
      .def_readwrite("f0", &OfdmParams::f0)
      .def("kappa", &OfdmParams::kappa)
      .def("block_len", &OfdmParams::block_len);

  py::class_<NodeClock>(m, "NodeClock")
      .def(py::init<>())
      .def(py::init([](double tau, double eps) {
             return NodeClock{tau, eps};
           }),
           py::arg("tau") = 0.0, py::arg("eps") = 0.0)
      .def_readwrite("tau", &NodeClock::tau)
      .def_readwrite("eps", &NodeClock::eps);

  m.def("normalized_offsets", [](const NodeClock& c, const OfdmParams& p) {
    const auto o = normalized_offsets(c, p);
    return py::make_tuple(o.mu, o.delta, o.Delta);
  });
  m.def("effective_rotation", &effective_rotation);
  m.def("phi_entry", &phi_entry);
  m.def("theta_entry", &theta_entry);
  m.def("tx_correction", &tx_correction);

  m.def("pathloss_db", &pathloss_db, py::arg("d_m"), py::arg("f0_ghz"),
        py::arg("params"), py::arg("shadowing_db") = 0.0);
  py::class_<PathlossParams>(m, "PathlossParams")
      .def_readonly("a", &PathlossParams::a)
      .def_readonly("b", &PathlossParams::b);
  m.attr("INDOOR_LOS") = kIndoorLos;
  m.attr("INDOOR_NLOS") = kIndoorNlos;
  m.def("p_los", &p_los);
  m.def("mean_pathloss_db", &mean_pathloss_db);
  m.def("solve_hw_spread", &solve_hw_spread, py::arg("target_std") = 0.1);

  m.def("make_pilot_burst", &make_pilot_burst);
  m.def("build_signal_matrix", &build_signal_matrix);
  m.def("projection_objective", &projection_objective);
  m.def(
      "ml_estimate",
      [](const Eigen::VectorXcd& y, const Eigen::VectorXcd& pilot,
         const std::vector<double>& delays) {
        const EstimationResult r = ml_estimate(y, pilot, delays, GridSpec{});
        return py::make_tuple(r.dxi, r.dmu, r.h_hat);
      },
      py::arg("y"), py::arg("pilot"), py::arg("delay_chips"));
  m.def("crb", [](double dxi, double dmu, const Eigen::VectorXcd& h,
                  const Eigen::VectorXcd& pilot,
                  const std::vector<double>& delays, int m_len, double n0) {
    const CrbResult r = crb(dxi, dmu, h, pilot, delays, m_len, n0);
    return py::make_tuple(r.var_dxi, r.var_dmu);
  });

  py::class_<PairwiseMeasurement>(m, "PairwiseMeasurement")
      .def(py::init<>())
      .def_readwrite("rx", &PairwiseMeasurement::rx)
      .def_readwrite("tx", &PairwiseMeasurement::tx)
      .def_readwrite("d_delta", &PairwiseMeasurement::d_delta)
      .def_readwrite("d_mu", &PairwiseMeasurement::d_mu)
      .def_readwrite("beta", &PairwiseMeasurement::beta)
      .def_readwrite("gamma", &PairwiseMeasurement::gamma);

  m.def("solve_corrections",
        [](const std::vector<PairwiseMeasurement>& records,
           const std::vector<NodeId>& anchors, NodeId reference) {
          const SyncSolution s =
              solve_corrections(MeasurementSet{records}, anchors, reference);
          return py::make_tuple(s.delta_corr, s.mu_corr);
        });
  m.def("build_weighted_laplacian",
        [](const std::vector<PairwiseMeasurement>& records,
           const std::vector<NodeId>& anchors, bool use_timing) {
          return build_weighted_laplacian(MeasurementSet{records}, anchors,
                                          use_timing);
        });

  m.def("build_A", &build_A);
  m.def("solve_ls_calibration", [](const Eigen::MatrixXcd& a) {
    const CalibrationSolution s = solve_ls_calibration(a);
    return py::make_tuple(s.c, s.residual);
  });
  m.def("genie_calibration",
        [](const Eigen::VectorXcd& tx, const Eigen::VectorXcd& rx) {
          return genie_calibration(tx, rx).c;
        });
  m.def("gauge_fix", &gauge_fix);

  m.def("zfbf", &zfbf, py::arg("h"), py::arg("cond_threshold") = 1e12);
  m.def("conjugate_bf", &conjugate_bf);
  m.def("power_scale", &power_scale);

  m.def("run_experiment_json", [](const std::string& json_text,
                                  const std::string& out_dir) {
    const ExperimentConfig config = parse_config(json_text);
    const ExperimentResult result = run_experiment(config);
    if (!out_dir.empty()) write_outputs(result, config, out_dir);
    py::list rows;
    for (const auto& r : result.table.rows)
      rows.append(py::make_tuple(r.experiment, r.trial, r.sweep, r.metric,
                                 r.value));
    return rows;
  });
  m.def("config_hash_json", [](const std::string& json_text) {
    return config_hash(parse_config(json_text));
  });
  m.attr("ARTIFACT_VERSION") = kArtifactVersion;
}
