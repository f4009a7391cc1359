// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#ifndef MMWSIM_PRECODING_HPP
#define MMWSIM_PRECODING_HPP

#include "mmwsim/codebook.hpp"
#include "mmwsim/estimation.hpp"

namespace mmw {

// Data-phase hybrid precoder (or combiner): N_RF analog candidate columns plus
// the digital mixing matrix, scaled so ||F_rf F_bb||_F^2 = N_s.
struct HybridPrecoder {
    std::vector<int> rf_columns;
    CMat baseband; // N_rf x N_s
    CMat dense;    // num_elements x N_s
    bool rank_deficient = false;
};

// H_hat = A_ms_hat diag(alpha_hat) A_bs_hat^H with the sqrt(N_bs N_ms / rho)
// structural factor restored (the gain estimator removed it).
CMat reconstruct_channel(const MultiPathEstimate &estimate, const Dictionary &dict_bs,
                         const Dictionary &dict_ms, double pathloss);

enum class LinkSide { Bs, Ms };

// Top-N_s singular vectors: right ones for the BS precoder, left ones for the
// MS combiner. degenerate is set when sigma_{N_s} and sigma_{N_s + 1} tie.
CMat unconstrained_precoder(const CMat &channel, int num_streams, LinkSide side,
                            bool *degenerate = nullptr);

// Matrix OMP fit of an unconstrained precoder over the analog candidates.
HybridPrecoder hybrid_approx(const CMat &f_opt, const CandidateSet &candidates, int n_rf,
                             int num_streams);

// log2 det(I + (P/N_s) R_n^{-1} W^H H F F^H H^H W) with R_n = W^H C_noise W.
// C_noise is the pre-combining noise (+ interference) covariance.
double achievable_rate_cov(const CMat &channel, const CMat &precoder, const CMat &combiner,
                           double power, int num_streams, const CMat &noise_cov);

// Thermal-noise-only rate, C_noise = sigma^2 I.
double achievable_rate(const CMat &channel, const CMat &precoder, const CMat &combiner,
                       double power, double noise_power, int num_streams);

} // namespace mmw

#endif
