// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#ifndef MMWSIM_CONFIG_HPP
#define MMWSIM_CONFIG_HPP

#include "mmwsim/cellular.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mmw {

enum class ExperimentKind {
    DesignCodebook,
    SinglePathError,
    SpectralEfficiencySweep,
    QuantizationStudy,
    Coverage,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string &name);

enum class CodebookMode { Ideal, Unconstrained, Hybrid };

std::string to_string(CodebookMode mode);
CodebookMode codebook_mode_from_string(const std::string &name);

// Flat experiment description; defaults follow the reference point-to-point
// setup (64/32 antennas, 10/6 RF chains, 7-bit phases, N = 64, K = 2).
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::SinglePathError;

    // [system]
    int n_bs = 64;
    int n_ms = 32;
    int n_rf_bs = 10;
    int n_rf_ms = 6;
    int n_s = 0; // 0 -> follows l_d
    int n_q = 7;
    double spacing = 0.5;

    // [channel]
    int l = 3;
    int l_d = 1;
    double avg_gain_power = 1.0;
    double pathloss = 1.0;
    AngleDomain domain = AngleDomain::Half;
    bool on_grid = false;

    // [estimation]
    int n = 64;
    int k = 2;
    double delta = 0.05;
    CodebookMode codebook = CodebookMode::Hybrid;
    int parallel_rf = 1;
    std::vector<double> snr_db = {-10.0, -5.0, 0.0, 5.0, 10.0};

    // [sweep]
    std::vector<int> nq_grid = {1, 2, 3, 4, 5, 6, 7};
    std::vector<double> eta_grid = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14};

    // [cellular]
    CellConfig cell;

    // [run]
    long long trials = 500;
    std::uint64_t seed = 1;
    std::string out_dir = "results";
    int threads = 0; // 0 -> hardware concurrency

    int num_streams() const { return n_s > 0 ? n_s : l_d; }
};

// Key/value view used for the manifest and for byte-stable reruns.
std::map<std::string, std::string> flatten(const ExperimentConfig &config);

ExperimentConfig parse_config_text(const std::string &text);
ExperimentConfig load_config(const std::string &path);

// Cross-parameter consistency; throws std::invalid_argument naming the rule.
void validate(const ExperimentConfig &config);

} // namespace mmw

#endif
