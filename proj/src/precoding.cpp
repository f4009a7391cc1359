// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#include "mmwsim/precoding.hpp"

#include <cmath>
#include <stdexcept>

namespace mmw {

CMat reconstruct_channel(const MultiPathEstimate &estimate, const Dictionary &dict_bs,
                         const Dictionary &dict_ms, double pathloss)
{
    if (estimate.paths.empty())
        throw std::invalid_argument("empty estimate");
    const double scale = std::sqrt(static_cast<double>(dict_bs.geometry.num_elements) *
                                   dict_ms.geometry.num_elements / pathloss);
    CMat h = CMat::Zero(dict_ms.geometry.num_elements, dict_bs.geometry.num_elements);
    for (const auto &p : estimate.paths)
        h.noalias() += (scale * p.gain) *
                       (dict_ms.matrix.col(p.aoa_cell) * dict_bs.matrix.col(p.aod_cell).adjoint());
    return h;
}

CMat unconstrained_precoder(const CMat &channel, int num_streams, LinkSide side, bool *degenerate)
{
    const int max_streams = static_cast<int>(std::min(channel.rows(), channel.cols()));
    if (num_streams < 1 || num_streams > max_streams)
        throw std::invalid_argument("num_streams exceeds the channel rank bound");
    Eigen::JacobiSVD<CMat> svd(channel, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (degenerate != nullptr)
    {
        *degenerate = false;
        if (num_streams < max_streams)
        {
            const double a = svd.singularValues()(num_streams - 1);
            const double b = svd.singularValues()(num_streams);
            if (a > 0.0 && (a - b) <= 1e-9 * a)
                *degenerate = true;
        }
    }
    if (side == LinkSide::Bs)
        return svd.matrixV().leftCols(num_streams);
    return svd.matrixU().leftCols(num_streams);
}

HybridPrecoder hybrid_approx(const CMat &f_opt, const CandidateSet &candidates, int n_rf,
                             int num_streams)
{
    if (num_streams != f_opt.cols())
        throw std::invalid_argument("target column count must equal num_streams");
    if (n_rf < num_streams)
        throw std::invalid_argument("need at least as many RF chains as streams");
    if (candidates.size() == 0)
        throw std::invalid_argument("empty candidate set");

    HybridPrecoder out;
    const double target_norm = f_opt.norm();
    CMat residual = f_opt;
    CMat selected(f_opt.rows(), 0);
    std::vector<bool> used(static_cast<std::size_t>(candidates.size()), false);

    for (int it = 0; it < n_rf; ++it)
    {
        if (residual.norm() < 1e-13 * target_norm)
            break;
        // Candidate with the largest total squared correlation against the
        // residual matrix (diagonal of Phi Phi^H).
        int best = -1;
        double best_corr = -1.0;
        for (int c = 0; c < candidates.size(); ++c)
        {
            if (used[static_cast<std::size_t>(c)])
                continue;
            const double corr = (candidates.matrix.col(c).adjoint() * residual).squaredNorm();
            if (corr > best_corr)
            {
                best_corr = corr;
                best = c;
            }
        }
        if (best < 0)
            break;
        used[static_cast<std::size_t>(best)] = true;
        out.rf_columns.push_back(best);
        selected.conservativeResize(Eigen::NoChange, selected.cols() + 1);
        selected.col(selected.cols() - 1) = candidates.matrix.col(best);

        Eigen::CompleteOrthogonalDecomposition<CMat> cod(selected);
        out.baseband = cod.solve(f_opt);
        out.rank_deficient = cod.rank() < selected.cols();

        residual = f_opt - selected * out.baseband;
        const double rn = residual.norm();
        if (rn > 0.0)
            residual /= rn;
    }

    CMat combined = selected * out.baseband;
    const double norm = combined.norm();
    if (!(norm > 0.0))
        throw std::runtime_error("hybrid approximation collapsed to zero");
    const double scale = std::sqrt(static_cast<double>(num_streams)) / norm;
    out.baseband *= scale;
    out.dense = combined * scale;
    return out;
}

double achievable_rate_cov(const CMat &channel, const CMat &precoder, const CMat &combiner,
                           double power, int num_streams, const CMat &noise_cov)
{
    if (channel.cols() != precoder.rows() || channel.rows() != combiner.rows())
        throw std::invalid_argument("rate dimensions are inconsistent");
    if (noise_cov.rows() != channel.rows() || noise_cov.cols() != channel.rows())
        throw std::invalid_argument("noise covariance must be N_ms x N_ms");

    const CMat rn = combiner.adjoint() * noise_cov * combiner;
    Eigen::LLT<CMat> llt(rn);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("singular post-combining noise covariance");
    // Whitened effective channel keeps the determinant Hermitian.
    const CMat effective = llt.matrixL().solve(combiner.adjoint() * channel * precoder);
    const CMat gram = (power / num_streams) * (effective * effective.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> eig(gram);
    double rate = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
        rate += std::log2(1.0 + std::max(0.0, eig.eigenvalues()(i)));
    return rate;
}

double achievable_rate(const CMat &channel, const CMat &precoder, const CMat &combiner,
                       double power, double noise_power, int num_streams)
{
    const CMat cov = noise_power * CMat::Identity(channel.rows(), channel.rows());
    return achievable_rate_cov(channel, precoder, combiner, power, num_streams, cov);
}

} // namespace mmw
