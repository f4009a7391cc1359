// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#ifndef MMWSIM_EXPERIMENTS_HPP
#define MMWSIM_EXPERIMENTS_HPP

#include "mmwsim/config.hpp"

#include <memory>
#include <string>
#include <vector>

namespace mmw {

// Point-to-point machinery shared by the experiment runners and the
// acceptance suite: geometries, dictionaries, candidate sets and the two
// training codebooks.
struct LinkSetup {
    UlaGeometry bs_geom;
    UlaGeometry ms_geom;
    AngleGrid grid;
    Dictionary dict_bs;
    Dictionary dict_ms;
    CandidateSet cand_bs;
    CandidateSet cand_ms;
    CodebookLayout layout;
    CodebookMode mode = CodebookMode::Hybrid;
    HierarchicalCodebook cb_bs; // empty in ideal mode
    HierarchicalCodebook cb_ms;
    int n_rf_bs = 0;
    int n_rf_ms = 0;
    int num_streams = 1;

    // G_(s) per level: measured from the codebooks, or the sector-model
    // values (L_d K^s)^2 in ideal mode.
    std::vector<double> stage_gains() const;

    std::unique_ptr<TrainingBackend> make_backend(const PathSet &paths, double noise_power,
                                                  Rng &rng,
                                                  InterferenceHook interference = nullptr) const;
};

LinkSetup make_link_setup(const ExperimentConfig &cfg);
LinkSetup make_link_setup(const ExperimentConfig &cfg, int n_q_override);

// Error-targeted training powers for this setup at the given average SNR
// (the per-stage comparison count is (K L_d)^2).
StagePowers training_powers(const LinkSetup &setup, double gamma_bar, double delta);

// Adaptive estimation followed by hybrid precoding; returns the rate achieved
// on the true channel.
double adaptive_pipeline_rate(const LinkSetup &setup, const PathSet &paths, double noise_power,
                              double delta, double data_power, Rng &rng);

// Exhaustive-search baseline: beam sweep estimation at per-slot power equal
// to the adaptive search's finest stage, then the same precoding path.
double exhaustive_pipeline_rate(const LinkSetup &setup, const PathSet &paths, double noise_power,
                                double delta, double data_power, Rng &rng);

double perfect_csi_hybrid_rate(const LinkSetup &setup, const CMat &channel, double data_power,
                               double noise_power);

double perfect_csi_unconstrained_rate(const LinkSetup &setup, const CMat &channel,
                                      double data_power, double noise_power);

// Single-stream steering toward the strongest true path.
double analog_only_rate(const LinkSetup &setup, const PathSet &paths, const CMat &channel,
                        double data_power, double noise_power);

// Simple CSV assembly: '#'-prefixed schema line, header row, then data rows
// formatted with %.12g.
class CsvTable {
  public:
    CsvTable(std::string schema, std::vector<std::string> columns);

    void add_row(const std::vector<double> &values);
    void add_row_text(const std::vector<std::string> &values);
    std::string to_string() const;
    void write(const std::string &path) const;

  private:
    std::string schema_;
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

struct RunResult {
    std::vector<std::string> outputs; // files written, manifest last
};

// Executes the configured experiment and writes CSV outputs plus a JSON run
// manifest into cfg.out_dir. Identical config and seed give identical CSVs.
RunResult run_experiment(const ExperimentConfig &cfg);

} // namespace mmw

#endif
