// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#ifndef MMWSIM_CELLULAR_HPP
#define MMWSIM_CELLULAR_HPP

#include "mmwsim/estimation.hpp"
#include "mmwsim/precoding.hpp"

namespace mmw {

struct CellConfig {
    double cell_radius = 100.0;       // meters
    double ppp_density = 0.0;         // BS per m^2; 0 -> 1/(pi R_c^2)
    double window_radius = 0.0;       // meters; 0 -> 10 R_c
    double pathloss_exponent = 3.0;   // n_pl
    double carrier_hz = 28e9;
    double bandwidth_hz = 100e6;
    double noise_figure_db = 5.0;
    double tx_power = 1.0;            // watts, every BS transmits the same P

    double density() const;
    double window() const;
    void validate() const;
};

// Thermal noise floor in watts: -174 dBm/Hz + 10 log10(BW) + NF.
double noise_power_watts(const CellConfig &config);

// Linear path loss rho: free-space reference at 1 m, then d^n_pl decay.
double pathloss_linear(double distance, const CellConfig &config);

struct InterferingBs {
    double distance = 0.0;
    double steer_angle = 0.0; // random analog beam direction phi_i
    PathSet channel;
};

struct Deployment {
    double desired_distance = 0.0;
    PathSet desired; // channel of the nearest BS
    std::vector<InterferingBs> interferers;
};

// Poisson field on the window disc; the nearest point becomes the serving BS,
// the rest interfere. Empty realizations are redrawn.
Deployment sample_deployment(Rng &rng, const CellConfig &config, int paths_per_bs,
                             double avg_gain_power, AngleDomain domain = AngleDomain::Half);

// One slot of the out-of-cell interference sum, combined by each column of W:
// entry q is sum_i w_q^H H_i f_i s_i with fresh unit-average-power symbols.
CVec interference_term(const Deployment &deployment, const UlaGeometry &bs_geom,
                       const UlaGeometry &ms_geom, const CMat &combiners, double tx_power,
                       Rng &rng);

// Precomputed per-interferer receive vectors h_i = H_i f_i.
std::vector<CVec> interferer_rx_vectors(const Deployment &deployment, const UlaGeometry &bs_geom,
                                        const UlaGeometry &ms_geom);

// Hook form used during channel training.
InterferenceHook make_interference_hook(std::vector<CVec> rx_vectors, double tx_power);

// sigma^2 I + sum_i P h_i h_i^H: Gaussian-equivalent covariance used in the
// rate computation under interference.
CMat interference_noise_cov(const std::vector<CVec> &rx_vectors, double tx_power,
                            double noise_power, int n_ms);

enum class CoveragePipeline { PerfectCsiHybrid, EstimatedHybrid, AnalogOnly };

// Everything the per-trial pipelines need; codebooks are shared read-only.
struct CellularSystem {
    CellConfig cell;
    UlaGeometry bs_geom{64, 0.5};
    UlaGeometry ms_geom{32, 0.5};
    Dictionary dict_bs;
    Dictionary dict_ms;
    HierarchicalCodebook cb_bs;
    HierarchicalCodebook cb_ms;
    CandidateSet cand_bs; // data-phase analog candidates
    CandidateSet cand_ms;
    int paths_per_bs = 3;       // L
    int estimated_paths = 2;    // L_d
    int num_streams = 2;        // N_s
    int n_rf_bs = 10;
    int n_rf_ms = 6;
    double avg_gain_power = 1.0;
    double delta = 0.05; // training error target for the power allocation
    AngleDomain domain = AngleDomain::Half;
};

struct CoveragePoint {
    double eta = 0.0;
    double coverage = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    long long trials = 0;
};

// One trial's achieved rate under the selected pipeline.
double coverage_trial_rate(const CellularSystem &sys, CoveragePipeline pipeline, Rng &rng);

std::vector<CoveragePoint> coverage_probability(const CellularSystem &sys,
                                                std::span<const double> eta_grid, int trials,
                                                CoveragePipeline pipeline, std::uint64_t seed,
                                                int threads = 1);

} // namespace mmw

#endif
