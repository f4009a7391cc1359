// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#ifndef MMWSIM_CODEBOOK_HPP
#define MMWSIM_CODEBOOK_HPP

#include "mmwsim/arrays.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mmw {

// Finite set of analog beamforming vectors the RF stage can realize. Every
// entry has magnitude 1/sqrt(num_elements); columns are distinct (duplicates
// created by coarse phase quantization are dropped).
struct CandidateSet {
    enum class Kind { Beamsteering, QuantizedPhases };

    Kind kind = Kind::Beamsteering;
    int quant_bits = 0; // N_Q, 0 when unquantized
    CMat matrix;        // num_elements x N_can

    int size() const { return static_cast<int>(matrix.cols()); }
};

// N_can steering vectors at angles t*pi/N, t = 0..N_can-1, N the grid size.
CandidateSet make_candidates_beamsteering(const UlaGeometry &geom, int n_can, int grid_n);

// Beamsteering set with every phase rounded to the nearest multiple of
// 2*pi/2^n_q. The literal set of all quantized-phase vectors is combinatorial;
// quantizing the steering set entrywise matches the simulated hardware.
CandidateSet make_candidates_quantized(const UlaGeometry &geom, int n_q, int n_can, int grid_n);

// Hierarchical codebook layout. The multi-path variant (branch_paths L_d > 1)
// has S = log_K(N / L_d) levels; level 1 holds one subset of K*L_d vectors,
// level s > 1 holds L_d*K^(s-1) subsets of K vectors. L_d = 1 recovers the
// single-path structure with S = log_K N.
struct CodebookLayout {
    int grid_n = 0;       // N
    int branching = 0;    // K
    int branch_paths = 1; // L_d
    int num_levels = 0;   // S

    static CodebookLayout make(int grid_n, int branching, int branch_paths);

    int subset_count(int level) const;           // levels are 1-based
    int vectors_per_subset(int level) const;     // K*L_d at level 1, else K
    int support_size(int level) const;           // N / (L_d * K^level)
    // Ordinal of the level-(s+1) subset refined from vector m of subset k.
    int child_subset(int level, int subset, int vector_index) const;
};

// Zero/one design target for one subset: column m carries ones on the
// contiguous grid range assigned to beamforming vector m.
struct SubsetMask {
    int level = 0;
    int subset = 0;
    int grid_n = 0;
    std::vector<std::pair<int, int>> col_ranges; // 0-based [lo, hi) per column

    int num_columns() const { return static_cast<int>(col_ranges.size()); }
    bool contains(int column, int cell) const
    {
        const auto &r = col_ranges.at(static_cast<std::size_t>(column));
        return cell >= r.first && cell < r.second;
    }
    std::pair<int, int> subset_range() const
    {
        return {col_ranges.front().first, col_ranges.back().second};
    }
};

SubsetMask subset_mask(const CodebookLayout &layout, int level, int subset);
SubsetMask subset_mask(int grid_n, int branching, int branch_paths, int level, int subset);

// Dense N x M 0/1 matrix form of the mask.
CMat mask_matrix(const SubsetMask &mask);

// Least-squares solution of A^H F = G (unnormalized): (A A^H)^{-1} A G.
// Throws if the Gram matrix stays unusable even after diagonal loading.
CMat ideal_precoder(const Dictionary &dict, const SubsetMask &mask);

// Cached Gram solver so codebook construction factors A A^H only once.
// Mirrored grid angles share a steering column, which leaves A A^H with a
// cluster of (near-)zero eigenvalues; the solve truncates those directions
// and returns the min-norm least-squares solution.
class DictionarySolver {
  public:
    explicit DictionarySolver(const Dictionary &dict);

    const Dictionary &dictionary() const { return *dict_; }
    CMat least_squares(const CMat &targets) const; // pinv(A^H) * targets
    double condition() const { return condition_; } // over the kept eigenspace

  private:
    const Dictionary *dict_;
    CMat basis_;
    Eigen::VectorXd inv_eigs_;
    double condition_ = 0.0;
};

// One training vector: selected RF candidate columns, baseband combining
// weights (scaled so ||F_rf * f_bb|| = 1) and the achieved projection level.
struct HybridVector {
    std::vector<int> rf_columns;
    CVec baseband;
    double c_norm = 0.0; // C_s of this vector: 1 / ||F_rf f_bb|| before scaling
    bool rank_deficient = false;
    CVec dense; // F_rf * f_bb, unit norm

    CVec assemble(const CandidateSet &candidates) const;
};

// Greedy OMP fit of `target` over the candidate columns with at most n_rf
// RF chains, then unit-norm scaling.
HybridVector omp_hybrid_design(const CVec &target, const CandidateSet &candidates, int n_rf);

enum class RfMode {
    Hybrid,        // OMP over the candidate set, at most N_RF chains
    Unconstrained, // digitally exact: normalized least-squares vector
};

struct HierarchicalCodebook {
    struct Level {
        double c_nominal = 0.0; // min per-vector C over the level
        std::vector<std::vector<HybridVector>> subsets;
    };

    CodebookLayout layout;
    RfMode rf_mode = RfMode::Hybrid;
    int n_rf = 0;
    CandidateSet candidates;
    std::vector<Level> levels; // [0] is level 1

    const HybridVector &vec(int level, int subset, int column) const
    {
        return levels.at(static_cast<std::size_t>(level - 1))
            .subsets.at(static_cast<std::size_t>(subset - 1))
            .at(static_cast<std::size_t>(column));
    }
    double level_gain(int num_elements, int level) const
    {
        const double c = levels.at(static_cast<std::size_t>(level - 1)).c_nominal;
        return num_elements * c * c; // G_(s) for this side
    }
};

HierarchicalCodebook build_codebook(const Dictionary &dict, const CandidateSet &candidates,
                                    const CodebookLayout &layout, int n_rf,
                                    RfMode mode = RfMode::Hybrid);

// Per-side projection error of one subset: E = A^H F - C_s G.
CMat subset_error_matrix(const Dictionary &dict, const HierarchicalCodebook &cb, int level,
                         int subset);

// Forward/backward gain study of one (level, subset pair). Directions are
// restricted to the subset pair's covered range, where exactly one
// beam pair is "forward" for each direction.
struct PairGainAnalysis {
    int level = 0;
    int subset_bs = 0;
    int subset_ms = 0;
    double nominal_gain = 0.0;                // G_(s) = N_bs C_bs^2 * N_ms C_ms^2
    Eigen::MatrixXd forward;                  // per direction (u_local, v_local)
    std::vector<Eigen::MatrixXd> backward;    // per other beam pair, same shape
    double beta_min = 0.0;                    // min over directions/pairs of G_F/G_B
    double forward_at_beta_min = 0.0;
};

PairGainAnalysis pair_gain_analysis(const HierarchicalCodebook &cb_bs,
                                    const HierarchicalCodebook &cb_ms,
                                    const Dictionary &dict_bs, const Dictionary &dict_ms,
                                    int level, int subset_bs, int subset_ms);

// Worst case over all subset pairs of a level.
struct LevelGainSummary {
    int level = 0;
    double c_bs = 0.0;
    double c_ms = 0.0;
    double nominal_gain = 0.0;
    double beta = 0.0;            // min over subset pairs / directions / beams
    double forward_at_beta = 0.0; // G_F at the minimizer
};

LevelGainSummary analyze_level(const HierarchicalCodebook &cb_bs, const HierarchicalCodebook &cb_ms,
                               const Dictionary &dict_bs, const Dictionary &dict_ms, int level);

std::vector<LevelGainSummary> analyze_codebooks(const HierarchicalCodebook &cb_bs,
                                                const HierarchicalCodebook &cb_ms,
                                                const Dictionary &dict_bs,
                                                const Dictionary &dict_ms);

// JSON serialization; complex values survive the round trip losslessly.
std::string codebook_to_json(const HierarchicalCodebook &cb);
HierarchicalCodebook codebook_from_json(const std::string &text);
void save_codebook(const HierarchicalCodebook &cb, const std::string &path);
HierarchicalCodebook load_codebook(const std::string &path);

} // namespace mmw

#endif
