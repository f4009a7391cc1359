// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#include "mmwsim/experiments.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace mmw;

namespace {

LinkSetup setup_from_args(int n_bs, int n_ms, int n_rf_bs, int n_rf_ms, int n, int k, int l_d,
                          int n_q, int n_s, const std::string &mode)
{
    ExperimentConfig cfg;
    cfg.n_bs = n_bs;
    cfg.n_ms = n_ms;
    cfg.n_rf_bs = n_rf_bs;
    cfg.n_rf_ms = n_rf_ms;
    cfg.n = n;
    cfg.k = k;
    cfg.l_d = l_d;
    cfg.n_q = n_q;
    cfg.n_s = n_s;
    cfg.codebook = codebook_mode_from_string(mode);
    validate(cfg);
    return make_link_setup(cfg);
}

} // namespace

PYBIND11_MODULE(_mmwsim, m)
{
    m.doc() = "Adaptive hierarchical beam training and hybrid precoding for mmWave MIMO";

    py::class_<PathEntry>(m, "PathEntry")
        .def(py::init<>())
        .def_readwrite("aod", &PathEntry::aod)
        .def_readwrite("aoa", &PathEntry::aoa)
        .def_readwrite("gain", &PathEntry::gain);

    py::class_<PathSet>(m, "PathSet")
        .def(py::init<>())
        .def_readwrite("paths", &PathSet::paths)
        .def_readwrite("pathloss", &PathSet::pathloss)
        .def_readwrite("avg_gain_power", &PathSet::avg_gain_power)
        .def("num_paths", &PathSet::num_paths);

    py::class_<StepCount>(m, "StepCount")
        .def_readonly("measurement_slots", &StepCount::measurement_slots)
        .def_readonly("feedback_bits", &StepCount::feedback_bits);

    py::class_<SinglePathEstimate>(m, "SinglePathEstimate")
        .def_readonly("aod_cell", &SinglePathEstimate::aod_cell)
        .def_readonly("aoa_cell", &SinglePathEstimate::aoa_cell)
        .def_readonly("gain", &SinglePathEstimate::gain);

    py::class_<MultiPathEstimate>(m, "MultiPathEstimate")
        .def_readonly("paths", &MultiPathEstimate::paths)
        .def_readonly("collision_resolved", &MultiPathEstimate::collision_resolved);

    m.def(
        "array_response",
        [](int num_elements, double spacing, double angle) {
            return array_response({num_elements, spacing}, angle);
        },
        py::arg("num_elements"), py::arg("spacing"), py::arg("angle"));

    m.def(
        "build_dictionary",
        [](int num_elements, double spacing, int n) {
            return build_dictionary({num_elements, spacing}, AngleGrid::uniform(n)).matrix;
        },
        py::arg("num_elements"), py::arg("spacing"), py::arg("n"));

    m.def(
        "grid_cell_of",
        [](int n, double spacing, double angle) {
            return grid_cell_of(AngleGrid::uniform(n), spacing, angle);
        },
        py::arg("n"), py::arg("spacing"), py::arg("angle"));

    m.def(
        "representative_angle",
        [](int n, double spacing, int cell) {
            return representative_angle(AngleGrid::uniform(n), spacing, cell);
        },
        py::arg("n"), py::arg("spacing"), py::arg("cell"));

    m.def(
        "sample_pathset",
        [](std::uint64_t seed, int num_paths, double pathloss, double avg_gain_power,
           const std::string &domain) {
            Rng rng(seed);
            return sample_pathset(rng, num_paths, pathloss, avg_gain_power,
                                  domain == "full" ? AngleDomain::Full : AngleDomain::Half);
        },
        py::arg("seed"), py::arg("num_paths"), py::arg("pathloss") = 1.0,
        py::arg("avg_gain_power") = 1.0, py::arg("domain") = "half");

    m.def(
        "assemble_channel",
        [](const PathSet &paths, int n_bs, int n_ms, double spacing) {
            return assemble_channel(paths, {n_bs, spacing}, {n_ms, spacing});
        },
        py::arg("paths"), py::arg("n_bs"), py::arg("n_ms"), py::arg("spacing") = 0.5);

    m.def("average_snr", &average_snr, py::arg("avg_gain_power"), py::arg("pathloss"),
          py::arg("noise_power"));

    m.def(
        "allocate_power_target_error",
        [](double delta, double gamma_bar, int k, const std::vector<double> &gains) {
            const auto [budget, powers] = allocate_power_target_error(delta, gamma_bar, k, gains);
            return py::make_tuple(budget, powers.per_stage);
        },
        py::arg("delta"), py::arg("gamma_bar"), py::arg("k"), py::arg("stage_gains"));

    m.def(
        "allocate_power_budgeted",
        [](double total_power, double gamma_bar, int k, const std::vector<double> &gains) {
            const auto [powers, bound] = allocate_power_budgeted(total_power, gamma_bar, k, gains);
            return py::make_tuple(powers.per_stage, bound);
        },
        py::arg("total_power"), py::arg("gamma_bar"), py::arg("k"), py::arg("stage_gains"));

    m.def(
        "misdetection_bound",
        [](const std::vector<double> &powers, const std::vector<double> &forward_gains,
           const std::vector<double> &betas, double gamma_bar, int k) {
            StagePowers sp;
            sp.per_stage = powers;
            return misdetection_bound(sp, forward_gains, betas, gamma_bar, k);
        },
        py::arg("stage_powers"), py::arg("forward_gains"), py::arg("betas"), py::arg("gamma_bar"),
        py::arg("k"));

    m.def(
        "unconstrained_precoder",
        [](const CMat &channel, int num_streams, const std::string &side) {
            return unconstrained_precoder(channel, num_streams,
                                          side == "ms" ? LinkSide::Ms : LinkSide::Bs);
        },
        py::arg("channel"), py::arg("num_streams"), py::arg("side") = "bs");

    m.def("achievable_rate", &achievable_rate, py::arg("channel"), py::arg("precoder"),
          py::arg("combiner"), py::arg("power"), py::arg("noise_power"), py::arg("num_streams"));

    m.def(
        "pathloss_linear",
        [](double distance, double carrier_hz, double exponent) {
            CellConfig cfg;
            cfg.carrier_hz = carrier_hz;
            cfg.pathloss_exponent = exponent;
            return pathloss_linear(distance, cfg);
        },
        py::arg("distance"), py::arg("carrier_hz") = 28e9, py::arg("exponent") = 3.0);

    // Configured point-to-point system: training codebooks plus the
    // estimation / precoding pipelines behind one handle.
    py::class_<LinkSetup>(m, "LinkSystem")
        .def(py::init(&setup_from_args), py::arg("n_bs") = 64, py::arg("n_ms") = 32,
             py::arg("n_rf_bs") = 10, py::arg("n_rf_ms") = 6, py::arg("n") = 64, py::arg("k") = 2,
             py::arg("l_d") = 1, py::arg("n_q") = 7, py::arg("n_s") = 0,
             py::arg("codebook") = "hybrid")
        .def_property_readonly("num_levels",
                               [](const LinkSetup &s) { return s.layout.num_levels; })
        .def("stage_gains", &LinkSetup::stage_gains)
        .def("codebook_summary",
             [](const LinkSetup &s) {
                 if (s.mode == CodebookMode::Ideal)
                     throw std::invalid_argument("the sector-model setup has no built codebook");
                 py::list rows;
                 for (const auto &r : analyze_codebooks(s.cb_bs, s.cb_ms, s.dict_bs, s.dict_ms))
                     rows.append(py::make_tuple(r.level, r.c_bs, r.c_ms, r.nominal_gain, r.beta));
                 return rows;
             })
        .def(
            "estimate",
            [](const LinkSetup &s, const PathSet &paths, double noise_power, double delta,
               std::uint64_t seed) {
                Rng rng(seed);
                const double gamma_bar =
                    average_snr(paths.avg_gain_power, paths.pathloss, noise_power);
                const StagePowers powers = training_powers(s, gamma_bar, delta);
                auto backend = s.make_backend(paths, noise_power, rng);
                StepCount steps;
                const MultiPathEstimate est = adaptive_estimate(*backend, powers, steps);
                return py::make_tuple(est, steps);
            },
            py::arg("paths"), py::arg("noise_power"), py::arg("delta") = 0.05, py::arg("seed") = 1)
        .def(
            "adaptive_rate",
            [](const LinkSetup &s, const PathSet &paths, double noise_power, double delta,
               double data_power, std::uint64_t seed) {
                Rng rng(seed);
                return adaptive_pipeline_rate(s, paths, noise_power, delta, data_power, rng);
            },
            py::arg("paths"), py::arg("noise_power"), py::arg("delta") = 0.05,
            py::arg("data_power") = 1.0, py::arg("seed") = 1)
        .def(
            "exhaustive_rate",
            [](const LinkSetup &s, const PathSet &paths, double noise_power, double delta,
               double data_power, std::uint64_t seed) {
                Rng rng(seed);
                return exhaustive_pipeline_rate(s, paths, noise_power, delta, data_power, rng);
            },
            py::arg("paths"), py::arg("noise_power"), py::arg("delta") = 0.05,
            py::arg("data_power") = 1.0, py::arg("seed") = 1)
        .def(
            "perfect_csi_rate",
            [](const LinkSetup &s, const CMat &channel, double data_power, double noise_power,
               bool hybrid) {
                return hybrid ? perfect_csi_hybrid_rate(s, channel, data_power, noise_power)
                              : perfect_csi_unconstrained_rate(s, channel, data_power, noise_power);
            },
            py::arg("channel"), py::arg("data_power"), py::arg("noise_power"),
            py::arg("hybrid") = true);

    m.def(
        "run_experiment_file",
        [](const std::string &config_path) {
            const RunResult result = run_experiment(load_config(config_path));
            return result.outputs;
        },
        py::arg("config_path"), "Run a configured experiment; returns the written files.");
}
