// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#ifndef MMWSIM_ESTIMATION_HPP
#define MMWSIM_ESTIMATION_HPP

#include "mmwsim/channel.hpp"
#include "mmwsim/codebook.hpp"
#include "mmwsim/rng.hpp"

#include <functional>
#include <span>
#include <vector>

namespace mmw {

// Additive interference injected into a measurement slot: receives the
// combiner in use and must return the combined interference sample.
using InterferenceHook = std::function<cxd(const CVec &combiner, Rng &rng)>;

struct MeasurementContext {
    const CMat *channel = nullptr; // N_ms x N_bs
    double noise_power = 0.0;      // sigma^2
    InterferenceHook interference; // optional
    Rng *rng = nullptr;
};

// One training slot per combiner column: y_q = sqrt(P) w_q^H H f + w_q^H n_q,
// noise drawn fresh for every column.
CVec measure(MeasurementContext &ctx, const CVec &precoder, const CMat &combiners, double power);

struct StagePowers {
    std::vector<double> per_stage; // P_(s), per-transmission power

    int num_stages() const { return static_cast<int>(per_stage.size()); }
    double at(int stage) const { return per_stage.at(static_cast<std::size_t>(stage - 1)); }
};

// Error-targeted allocation P_(s) = Gamma / G_(s) with
// Gamma = (2/gamma_bar) * ((K^2-1)S/delta - 2); guarantees error <= delta
// in the zero-leakage regime.
std::pair<double, StagePowers> allocate_power_target_error(double delta, double gamma_bar, int k,
                                                           std::span<const double> stage_gains);

// Budgeted allocation P_(s) = P_T / (K^2 sum_n G_(s)/G_(n)) and the resulting
// error bound (K^2-1)S / (P_T*gamma_bar/(2K^2 sum 1/G) + 2).
std::pair<StagePowers, double> allocate_power_budgeted(double total_power, double gamma_bar,
                                                       int k,
                                                       std::span<const double> stage_gains);

// Closed-form upper bound on the average misdetection probability of the
// adaptive single-path search, clamped to [0, 1]. beta_s may be +inf.
double misdetection_bound(const StagePowers &powers, std::span<const double> forward_gains,
                          std::span<const double> betas, double gamma_bar, int k);

struct StepCount {
    long long measurement_slots = 0;
    long long feedback_bits = 0;
};

struct SinglePathEstimate {
    int aod_cell = 0; // 0-based grid indices
    int aoa_cell = 0;
    cxd gain;
};

struct MultiPathEstimate {
    std::vector<SinglePathEstimate> paths;
    std::vector<std::vector<int>> traj_bs; // [path][stage-1]: subset ordinal used
    std::vector<std::vector<int>> traj_ms;
    bool collision_resolved = false; // a duplicate cell was re-selected
};

struct TraceRow {
    int path = 0;
    int stage = 0;
    std::vector<int> bs_subsets;
    std::vector<int> ms_subsets;
    int selected_bs = 0;
    int selected_ms = 0;
    int feedback_bits = 0;
    std::vector<double> entry_power; // |y|^2 after deflation, column-major
};

struct EstimationOptions {
    int parallel_rf = 1; // combiners applied per time slot at the MS
    std::vector<TraceRow> *trace = nullptr;
};

// Measurement source for the adaptive search. The engine only sees stage
// responses and per-cell signatures, so the same bisection logic runs against
// the synthetic zero-leakage model and the physically beamformed one.
class TrainingBackend {
  public:
    virtual ~TrainingBackend() = default;

    virtual const CodebookLayout &layout() const = 0;
    virtual double pathloss() const = 0;
    virtual double stage_gain(int level) const = 0; // G_(s), both sides combined
    // Normalization that makes the least-squares gain estimate consistent
    // with this backend's signature convention.
    virtual double llse_gain() const = 0;

    // Stage response, rows = MS combiners, cols = BS precoders (K*L_d each).
    virtual CMat measure_stage(int level, std::span<const int> bs_subsets,
                               std::span<const int> ms_subsets, double power) = 0;

    // Noise-free response direction of one grid cell pair under the same
    // beams, stacked column-major to match vec(measure_stage()).
    virtual CVec signature(int level, std::span<const int> bs_subsets,
                           std::span<const int> ms_subsets, int bs_cell, int ms_cell) = 0;
};

// Zero-leakage sector model: a beam pair responds with the full nominal gain
// to every cell inside its ranges and exactly zero outside. This is the
// idealized codebook the error-probability analysis assumes.
class IdealTrainingBackend final : public TrainingBackend {
  public:
    IdealTrainingBackend(const CodebookLayout &layout, const AngleGrid &grid, double spacing_bs,
                         double spacing_ms, const PathSet &paths, double noise_power, Rng &rng);

    const CodebookLayout &layout() const override { return layout_; }
    double pathloss() const override { return pathloss_; }
    double stage_gain(int level) const override;
    double llse_gain() const override { return stage_gain(layout_.num_levels); }
    CMat measure_stage(int level, std::span<const int> bs_subsets,
                       std::span<const int> ms_subsets, double power) override;
    CVec signature(int level, std::span<const int> bs_subsets, std::span<const int> ms_subsets,
                   int bs_cell, int ms_cell) override;

  private:
    CodebookLayout layout_;
    std::vector<std::pair<int, int>> cells_; // per path (aod cell, aoa cell)
    std::vector<cxd> gains_;
    double pathloss_ = 1.0;
    double noise_power_ = 0.0;
    Rng *rng_;
};

// Beamformed measurements through the designed training codebooks and a
// geometric channel; supports the cellular interference hook.
class HybridTrainingBackend final : public TrainingBackend {
  public:
    HybridTrainingBackend(const HierarchicalCodebook &cb_bs, const HierarchicalCodebook &cb_ms,
                          const Dictionary &dict_bs, const Dictionary &dict_ms,
                          const PathSet &paths, double noise_power, Rng &rng,
                          InterferenceHook interference = nullptr);

    const CodebookLayout &layout() const override { return cb_bs_->layout; }
    double pathloss() const override { return pathloss_; }
    double stage_gain(int level) const override;
    // The signature already carries the beam responses, so the coefficient of
    // y on g is sqrt(P N_bs N_ms / rho) alpha for any beam quality.
    double llse_gain() const override
    {
        return static_cast<double>(dict_bs_->geometry.num_elements) *
               dict_ms_->geometry.num_elements;
    }
    CMat measure_stage(int level, std::span<const int> bs_subsets,
                       std::span<const int> ms_subsets, double power) override;
    CVec signature(int level, std::span<const int> bs_subsets, std::span<const int> ms_subsets,
                   int bs_cell, int ms_cell) override;

  private:
    std::vector<const HybridVector *> beams(const HierarchicalCodebook &cb, int level,
                                            std::span<const int> subsets) const;

    const HierarchicalCodebook *cb_bs_;
    const HierarchicalCodebook *cb_ms_;
    const Dictionary *dict_bs_;
    const Dictionary *dict_ms_;
    std::vector<CVec> path_steer_bs_;
    std::vector<CVec> path_steer_ms_;
    std::vector<cxd> path_gains_;
    double pathloss_ = 1.0;
    double amp_scale_ = 1.0; // sqrt(N_bs*N_ms/rho)
    double noise_power_ = 0.0;
    Rng *rng_;
    InterferenceHook interference_;
};

// Bisection search over the hierarchical codebook with projection deflation;
// L_d = 1 reduces to the single-path algorithm.
MultiPathEstimate adaptive_estimate(TrainingBackend &backend, const StagePowers &powers,
                                    StepCount &steps, const EstimationOptions &opts = {});

std::pair<SinglePathEstimate, StepCount> estimate_single_path(TrainingBackend &backend,
                                                              const StagePowers &powers,
                                                              const EstimationOptions &opts = {});

// Sweeps every finest-resolution beamsteering pair of the two dictionaries and
// keeps the L_d strongest distinct cells.
MultiPathEstimate exhaustive_estimate(const Dictionary &dict_bs, const Dictionary &dict_ms,
                                      const PathSet &paths, double noise_power, double power,
                                      int num_paths, Rng &rng, StepCount &steps,
                                      InterferenceHook interference = nullptr);

// Candidate beamsteering pair aligned with one propagation direction.
struct AnalogBeamPair {
    CVec precoder;
    CVec combiner;
};

AnalogBeamPair analog_only_pair(const UlaGeometry &geom_bs, const UlaGeometry &geom_ms, double aod,
                                double aoa, const CandidateSet &candidates_bs,
                                const CandidateSet &candidates_ms);

std::string trace_to_csv(const std::vector<TraceRow> &rows);

} // namespace mmw

#endif
