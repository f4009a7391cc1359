// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#include "mmwsim/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mmw {

CVec measure(MeasurementContext &ctx, const CVec &precoder, const CMat &combiners, double power)
{
    if (ctx.channel == nullptr || ctx.rng == nullptr)
        throw std::invalid_argument("measurement context is incomplete");
    const CMat &h = *ctx.channel;
    if (h.cols() != precoder.size() || h.rows() != combiners.rows())
        throw std::invalid_argument("measurement dimensions are inconsistent");

    const CVec through = std::sqrt(power) * (h * precoder);
    CVec y(combiners.cols());
    for (Eigen::Index q = 0; q < combiners.cols(); ++q)
    {
        CVec noise(h.rows());
        for (Eigen::Index i = 0; i < noise.size(); ++i)
            noise(i) = ctx.rng->cgauss(ctx.noise_power);
        y(q) = combiners.col(q).dot(through) + combiners.col(q).dot(noise);
        if (ctx.interference)
            y(q) += ctx.interference(combiners.col(q), *ctx.rng);
    }
    return y;
}

std::pair<double, StagePowers> allocate_power_target_error(double delta, double gamma_bar, int k,
                                                           std::span<const double> stage_gains)
{
    if (!(delta > 0.0) || !(delta < 1.0))
        throw std::invalid_argument("delta must be in (0, 1)");
    if (!(gamma_bar > 0.0))
        throw std::invalid_argument("gamma_bar must be positive");
    const auto s = static_cast<double>(stage_gains.size());
    const double paren = (static_cast<double>(k) * k - 1.0) * s / delta - 2.0;
    if (!(paren > 0.0))
        throw std::invalid_argument("delta too large: (K^2-1)S/delta must exceed 2");
    const double gamma_budget = 2.0 / gamma_bar * paren;
    StagePowers powers;
    powers.per_stage.reserve(stage_gains.size());
    for (double g : stage_gains)
    {
        if (!(g > 0.0))
            throw std::invalid_argument("stage gains must be positive");
        powers.per_stage.push_back(gamma_budget / g);
    }
    return {gamma_budget, powers};
}

std::pair<StagePowers, double> allocate_power_budgeted(double total_power, double gamma_bar,
                                                       int k,
                                                       std::span<const double> stage_gains)
{
    if (!(total_power > 0.0))
        throw std::invalid_argument("total power must be positive");
    const double k2 = static_cast<double>(k) * k;
    double inv_gain_sum = 0.0;
    for (double g : stage_gains)
    {
        if (!(g > 0.0))
            throw std::invalid_argument("stage gains must be positive");
        inv_gain_sum += 1.0 / g;
    }
    StagePowers powers;
    powers.per_stage.reserve(stage_gains.size());
    for (double g : stage_gains)
        powers.per_stage.push_back(total_power / (k2 * g * inv_gain_sum));
    const double s = static_cast<double>(stage_gains.size());
    const double bound = (k2 - 1.0) * s / (total_power * gamma_bar / (2.0 * k2 * inv_gain_sum) + 2.0);
    return {powers, std::min(1.0, bound)};
}

double misdetection_bound(const StagePowers &powers, std::span<const double> forward_gains,
                          std::span<const double> betas, double gamma_bar, int k)
{
    const std::size_t s = powers.per_stage.size();
    if (forward_gains.size() != s || betas.size() != s)
        throw std::invalid_argument("per-stage inputs must have equal length");
    double sum = 0.0;
    for (std::size_t i = 0; i < s; ++i)
    {
        const double inv_beta = std::isinf(betas[i]) ? 0.0 : 1.0 / betas[i];
        const double x = powers.per_stage[i] * forward_gains[i] * gamma_bar;
        const double inner = 1.0 + 0.5 * (1.0 + inv_beta) * x +
                             x * x * (1.0 - inv_beta) * (1.0 - inv_beta) / 16.0;
        sum += 1.0 - (1.0 - inv_beta) * x / (4.0 * std::sqrt(inner));
    }
    const double bound = (static_cast<double>(k) * k - 1.0) / 2.0 * sum;
    return std::clamp(bound, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Backends

IdealTrainingBackend::IdealTrainingBackend(const CodebookLayout &layout, const AngleGrid &grid,
                                           double spacing_bs, double spacing_ms,
                                           const PathSet &paths, double noise_power, Rng &rng)
    : layout_(layout), pathloss_(paths.pathloss), noise_power_(noise_power), rng_(&rng)
{
    if (grid.resolution != layout.grid_n)
        throw std::invalid_argument("grid resolution does not match layout");
    cells_.reserve(paths.paths.size());
    gains_.reserve(paths.paths.size());
    for (const auto &p : paths.paths)
    {
        cells_.emplace_back(grid_cell_of(grid, spacing_bs, p.aod),
                            grid_cell_of(grid, spacing_ms, p.aoa));
        gains_.push_back(p.gain);
    }
}

double IdealTrainingBackend::stage_gain(int level) const
{
    const double per_side = static_cast<double>(layout_.grid_n) / layout_.support_size(level);
    return per_side * per_side;
}

namespace {

// Column ranges of the beams measured at one stage: the single level-1 subset
// already carries K*L_d vectors, deeper stages concatenate the K vectors of
// each listed subset.
std::vector<std::pair<int, int>> stage_ranges(const CodebookLayout &layout, int level,
                                              std::span<const int> subsets)
{
    std::vector<std::pair<int, int>> ranges;
    for (int k : subsets)
    {
        const SubsetMask mask = subset_mask(layout, level, k);
        for (const auto &r : mask.col_ranges)
            ranges.push_back(r);
    }
    return ranges;
}

} // namespace

CMat IdealTrainingBackend::measure_stage(int level, std::span<const int> bs_subsets,
                                         std::span<const int> ms_subsets, double power)
{
    const auto r_bs = stage_ranges(layout_, level, bs_subsets);
    const auto r_ms = stage_ranges(layout_, level, ms_subsets);
    const double amp = std::sqrt(power * stage_gain(level) / pathloss_);
    CMat y(static_cast<Eigen::Index>(r_ms.size()), static_cast<Eigen::Index>(r_bs.size()));
    for (std::size_t p = 0; p < r_bs.size(); ++p)
        for (std::size_t q = 0; q < r_ms.size(); ++q)
        {
            cxd sum = 0.0;
            for (std::size_t l = 0; l < cells_.size(); ++l)
            {
                const auto [u, v] = cells_[l];
                if (u >= r_bs[p].first && u < r_bs[p].second && v >= r_ms[q].first &&
                    v < r_ms[q].second)
                    sum += gains_[l];
            }
            y(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p)) =
                amp * sum + rng_->cgauss(noise_power_);
        }
    return y;
}

CVec IdealTrainingBackend::signature(int level, std::span<const int> bs_subsets,
                                     std::span<const int> ms_subsets, int bs_cell, int ms_cell)
{
    const auto r_bs = stage_ranges(layout_, level, bs_subsets);
    const auto r_ms = stage_ranges(layout_, level, ms_subsets);
    CVec g = CVec::Zero(static_cast<Eigen::Index>(r_bs.size() * r_ms.size()));
    for (std::size_t p = 0; p < r_bs.size(); ++p)
        for (std::size_t q = 0; q < r_ms.size(); ++q)
        {
            const bool hit = bs_cell >= r_bs[p].first && bs_cell < r_bs[p].second &&
                             ms_cell >= r_ms[q].first && ms_cell < r_ms[q].second;
            if (hit)
                g(static_cast<Eigen::Index>(p * r_ms.size() + q)) = 1.0;
        }
    return g;
}

HybridTrainingBackend::HybridTrainingBackend(const HierarchicalCodebook &cb_bs,
                                             const HierarchicalCodebook &cb_ms,
                                             const Dictionary &dict_bs, const Dictionary &dict_ms,
                                             const PathSet &paths, double noise_power, Rng &rng,
                                             InterferenceHook interference)
    : cb_bs_(&cb_bs), cb_ms_(&cb_ms), dict_bs_(&dict_bs), dict_ms_(&dict_ms),
      pathloss_(paths.pathloss), noise_power_(noise_power), rng_(&rng),
      interference_(std::move(interference))
{
    if (cb_bs.layout.grid_n != cb_ms.layout.grid_n ||
        cb_bs.layout.branching != cb_ms.layout.branching ||
        cb_bs.layout.branch_paths != cb_ms.layout.branch_paths)
        throw std::invalid_argument("BS/MS codebooks must share the layout");
    for (const auto &p : paths.paths)
    {
        path_steer_bs_.push_back(array_response(dict_bs.geometry, p.aod));
        path_steer_ms_.push_back(array_response(dict_ms.geometry, p.aoa));
        path_gains_.push_back(p.gain);
    }
    amp_scale_ = std::sqrt(static_cast<double>(dict_bs.geometry.num_elements) *
                           dict_ms.geometry.num_elements / paths.pathloss);
}

double HybridTrainingBackend::stage_gain(int level) const
{
    return cb_bs_->level_gain(dict_bs_->geometry.num_elements, level) *
           cb_ms_->level_gain(dict_ms_->geometry.num_elements, level);
}

std::vector<const HybridVector *> HybridTrainingBackend::beams(const HierarchicalCodebook &cb,
                                                               int level,
                                                               std::span<const int> subsets) const
{
    std::vector<const HybridVector *> out;
    for (int k : subsets)
    {
        const auto &vecs = cb.levels.at(static_cast<std::size_t>(level - 1))
                               .subsets.at(static_cast<std::size_t>(k - 1));
        for (const auto &v : vecs)
            out.push_back(&v);
    }
    return out;
}

CMat HybridTrainingBackend::measure_stage(int level, std::span<const int> bs_subsets,
                                          std::span<const int> ms_subsets, double power)
{
    const auto f = beams(*cb_bs_, level, bs_subsets);
    const auto w = beams(*cb_ms_, level, ms_subsets);
    const std::size_t num_paths = path_gains_.size();

    // Per-beam responses of each propagation path.
    CMat resp_bs(static_cast<Eigen::Index>(num_paths), static_cast<Eigen::Index>(f.size()));
    CMat resp_ms(static_cast<Eigen::Index>(num_paths), static_cast<Eigen::Index>(w.size()));
    for (std::size_t l = 0; l < num_paths; ++l)
    {
        for (std::size_t p = 0; p < f.size(); ++p)
            resp_bs(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(p)) =
                path_steer_bs_[l].dot(f[p]->dense); // a^H f
        for (std::size_t q = 0; q < w.size(); ++q)
            resp_ms(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(q)) =
                w[q]->dense.dot(path_steer_ms_[l]); // w^H a
    }

    const double amp = std::sqrt(power) * amp_scale_;
    CMat y(static_cast<Eigen::Index>(w.size()), static_cast<Eigen::Index>(f.size()));
    for (std::size_t p = 0; p < f.size(); ++p)
        for (std::size_t q = 0; q < w.size(); ++q)
        {
            cxd sum = 0.0;
            for (std::size_t l = 0; l < num_paths; ++l)
                sum += path_gains_[l] * resp_ms(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(q)) *
                       resp_bs(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(p));
            cxd sample = amp * sum + rng_->cgauss(noise_power_ * w[q]->dense.squaredNorm());
            if (interference_)
                sample += interference_(w[q]->dense, *rng_);
            y(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p)) = sample;
        }
    return y;
}

CVec HybridTrainingBackend::signature(int level, std::span<const int> bs_subsets,
                                      std::span<const int> ms_subsets, int bs_cell, int ms_cell)
{
    const auto f = beams(*cb_bs_, level, bs_subsets);
    const auto w = beams(*cb_ms_, level, ms_subsets);
    const CVec a_bs = dict_bs_->matrix.col(bs_cell);
    const CVec a_ms = dict_ms_->matrix.col(ms_cell);
    CVec g(static_cast<Eigen::Index>(f.size() * w.size()));
    for (std::size_t p = 0; p < f.size(); ++p)
    {
        const cxd fb = a_bs.dot(f[p]->dense);
        for (std::size_t q = 0; q < w.size(); ++q)
            g(static_cast<Eigen::Index>(p * w.size() + q)) = fb * w[q]->dense.dot(a_ms);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Adaptive search

namespace {

struct Selection {
    int q = 0; // MS combiner index
    int p = 0; // BS precoder index
};

// Argmax of |y|^2 with ties broken toward the lowest (m_MS, m_BS).
Selection select_max_power(const CMat &y)
{
    Selection best;
    double best_pow = -1.0;
    for (Eigen::Index q = 0; q < y.rows(); ++q)
        for (Eigen::Index p = 0; p < y.cols(); ++p)
        {
            const double val = std::norm(y(q, p));
            if (val > best_pow)
            {
                best_pow = val;
                best = {static_cast<int>(q), static_cast<int>(p)};
            }
        }
    return best;
}

std::vector<int> measured_subsets(const CodebookLayout &layout, int level, int cur,
                                  const std::vector<std::vector<int>> &traj, int iteration)
{
    if (level == 1)
        return {1};
    std::vector<int> subs;
    subs.reserve(static_cast<std::size_t>(layout.branch_paths));
    subs.push_back(cur);
    for (int p = 0; p < iteration && static_cast<int>(subs.size()) < layout.branch_paths; ++p)
        subs.push_back(traj[static_cast<std::size_t>(p)][static_cast<std::size_t>(level - 1)]);
    while (static_cast<int>(subs.size()) < layout.branch_paths)
        subs.push_back(1); // unassigned trajectory slots stay at the initial subset
    return subs;
}

// Grid cell implied by choosing beam `index` of the measured stage-S list.
int implied_cell(const CodebookLayout &layout, int level, std::span<const int> subsets, int index)
{
    const int per_subset = layout.vectors_per_subset(level);
    const int slot = index / per_subset;
    const int within = index % per_subset;
    return layout.child_subset(level, subsets[static_cast<std::size_t>(slot)], within) - 1;
}

} // namespace

MultiPathEstimate adaptive_estimate(TrainingBackend &backend, const StagePowers &powers,
                                    StepCount &steps, const EstimationOptions &opts)
{
    const CodebookLayout &layout = backend.layout();
    const int num_stages = layout.num_levels;
    if (powers.num_stages() != num_stages)
        throw std::invalid_argument("power allocation does not match the number of stages");
    if (opts.parallel_rf < 1)
        throw std::invalid_argument("parallel_rf must be at least 1");

    const int beams_per_side = layout.branching * layout.branch_paths;
    const long long slots_per_stage =
        static_cast<long long>(beams_per_side) *
        ((beams_per_side + opts.parallel_rf - 1) / opts.parallel_rf);
    int feedback_per_stage = 0;
    while ((1 << feedback_per_stage) < beams_per_side)
        ++feedback_per_stage;

    MultiPathEstimate est;
    steps = {};

    for (int iter = 0; iter < layout.branch_paths; ++iter)
    {
        int cur_bs = 1;
        int cur_ms = 1;
        std::vector<int> own_traj_bs(static_cast<std::size_t>(num_stages));
        std::vector<int> own_traj_ms(static_cast<std::size_t>(num_stages));
        CMat y_final;
        std::vector<int> subs_bs_final, subs_ms_final;

        for (int s = 1; s <= num_stages; ++s)
        {
            const std::vector<int> subs_bs = measured_subsets(layout, s, cur_bs, est.traj_bs, iter);
            const std::vector<int> subs_ms = measured_subsets(layout, s, cur_ms, est.traj_ms, iter);
            own_traj_bs[static_cast<std::size_t>(s - 1)] = cur_bs;
            own_traj_ms[static_cast<std::size_t>(s - 1)] = cur_ms;

            CMat y = backend.measure_stage(s, subs_bs, subs_ms, powers.at(s));
            steps.measurement_slots += slots_per_stage;
            steps.feedback_bits += feedback_per_stage;

            // Project out the contribution of every already-estimated path.
            Eigen::Map<CVec> yv(y.data(), y.size());
            for (int p = 0; p < iter; ++p)
            {
                const CVec g = backend.signature(s, subs_bs, subs_ms,
                                                 est.paths[static_cast<std::size_t>(p)].aod_cell,
                                                 est.paths[static_cast<std::size_t>(p)].aoa_cell);
                const double denom = g.squaredNorm();
                if (denom > 0.0)
                    yv -= (g.dot(yv) / denom) * g;
            }

            const Selection sel = select_max_power(y);
            if (opts.trace)
            {
                TraceRow row;
                row.path = iter + 1;
                row.stage = s;
                row.bs_subsets = subs_bs;
                row.ms_subsets = subs_ms;
                row.selected_bs = sel.p;
                row.selected_ms = sel.q;
                row.feedback_bits = feedback_per_stage;
                row.entry_power.reserve(static_cast<std::size_t>(y.size()));
                for (Eigen::Index p = 0; p < y.cols(); ++p)
                    for (Eigen::Index q = 0; q < y.rows(); ++q)
                        row.entry_power.push_back(std::norm(y(q, p)));
                opts.trace->push_back(std::move(row));
            }

            const int per_subset = layout.vectors_per_subset(s);
            const int slot_bs = sel.p / per_subset;
            const int slot_ms = sel.q / per_subset;
            cur_bs = layout.child_subset(s, subs_bs[static_cast<std::size_t>(slot_bs)],
                                         sel.p % per_subset);
            cur_ms = layout.child_subset(s, subs_ms[static_cast<std::size_t>(slot_ms)],
                                         sel.q % per_subset);

            if (s == num_stages)
            {
                y_final = y;
                subs_bs_final = subs_bs;
                subs_ms_final = subs_ms;
            }
        }

        // cur_* now hold 1-based grid indices at resolution N.
        int cell_bs = cur_bs - 1;
        int cell_ms = cur_ms - 1;

        auto collides = [&est](int ub, int um) {
            for (const auto &p : est.paths)
                if (p.aod_cell == ub && p.aoa_cell == um)
                    return true;
            return false;
        };

        if (collides(cell_bs, cell_ms))
        {
            // Duplicate of an earlier path: fall back to the next-strongest
            // final-stage cell that is still unclaimed.
            est.collision_resolved = true;
            std::vector<std::pair<double, std::pair<int, int>>> ordered;
            for (Eigen::Index q = 0; q < y_final.rows(); ++q)
                for (Eigen::Index p = 0; p < y_final.cols(); ++p)
                {
                    const int ub = implied_cell(layout, num_stages, subs_bs_final,
                                                static_cast<int>(p));
                    const int um = implied_cell(layout, num_stages, subs_ms_final,
                                                static_cast<int>(q));
                    ordered.push_back({std::norm(y_final(q, p)), {ub, um}});
                }
            std::stable_sort(ordered.begin(), ordered.end(),
                             [](const auto &a, const auto &b) { return a.first > b.first; });
            for (const auto &cand : ordered)
                if (!collides(cand.second.first, cand.second.second))
                {
                    cell_bs = cand.second.first;
                    cell_ms = cand.second.second;
                    break;
                }
        }

        // Path gain by least squares against the cell's response signature.
        SinglePathEstimate path;
        path.aod_cell = cell_bs;
        path.aoa_cell = cell_ms;
        const CVec g = backend.signature(num_stages, subs_bs_final, subs_ms_final, cell_bs, cell_ms);
        const double denom = g.squaredNorm();
        const Eigen::Map<const CVec> yv(y_final.data(), y_final.size());
        const cxd coeff = denom > 0.0 ? g.dot(yv) / denom : cxd(0.0);
        path.gain = std::sqrt(backend.pathloss() / (powers.at(num_stages) * backend.llse_gain())) *
                    coeff;
        est.paths.push_back(path);
        est.traj_bs.push_back(std::move(own_traj_bs));
        est.traj_ms.push_back(std::move(own_traj_ms));
    }
    return est;
}

std::pair<SinglePathEstimate, StepCount> estimate_single_path(TrainingBackend &backend,
                                                              const StagePowers &powers,
                                                              const EstimationOptions &opts)
{
    if (backend.layout().branch_paths != 1)
        throw std::invalid_argument("single-path estimation needs an L_d = 1 codebook");
    StepCount steps;
    const MultiPathEstimate est = adaptive_estimate(backend, powers, steps, opts);
    return {est.paths.front(), steps};
}

MultiPathEstimate exhaustive_estimate(const Dictionary &dict_bs, const Dictionary &dict_ms,
                                      const PathSet &paths, double noise_power, double power,
                                      int num_paths, Rng &rng, StepCount &steps,
                                      InterferenceHook interference)
{
    const int n = dict_bs.grid_size();
    if (dict_ms.grid_size() != n)
        throw std::invalid_argument("dictionaries must share the grid resolution");
    if (num_paths < 1)
        throw std::invalid_argument("need at least one path to estimate");

    steps = {};
    const double amp = std::sqrt(power * dict_bs.geometry.num_elements *
                                 dict_ms.geometry.num_elements / paths.pathloss);
    // Rank-L response over all beam pairs, rows = MS cells, cols = BS cells.
    CMat y = CMat::Zero(n, n);
    for (const auto &p : paths.paths)
    {
        const CVec resp_ms = dict_ms.matrix.adjoint() * array_response(dict_ms.geometry, p.aoa);
        const CVec resp_bs = dict_bs.matrix.adjoint() * array_response(dict_bs.geometry, p.aod);
        y.noalias() += (amp * p.gain) * (resp_ms * resp_bs.adjoint());
    }
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
        {
            y(v, u) += rng.cgauss(noise_power);
            if (interference)
                y(v, u) += interference(dict_ms.matrix.col(v), rng);
        }

    steps.measurement_slots = static_cast<long long>(n) * n;

    // Strongest distinct cells with successive cancellation: an off-grid
    // path leaks into the cells around its peak, so each found path's
    // predicted response field is removed before the next pick.
    MultiPathEstimate est;
    const double gain_scale = std::sqrt(
        paths.pathloss /
        (power * dict_bs.geometry.num_elements * dict_ms.geometry.num_elements));
    auto taken = [&est](int u, int v) {
        for (const auto &p : est.paths)
            if (p.aod_cell == u && p.aoa_cell == v)
                return true;
        return false;
    };
    for (int l = 0; l < num_paths; ++l)
    {
        int best_u = 0, best_v = 0;
        double best_pow = -1.0;
        for (int v = 0; v < n; ++v)
            for (int u = 0; u < n; ++u)
            {
                const double val = std::norm(y(v, u));
                if (val > best_pow && !taken(u, v))
                {
                    best_pow = val;
                    best_u = u;
                    best_v = v;
                }
            }
        // Response field of a unit amplitude at the picked cell and its
        // least-squares amplitude over the whole sweep.
        const CVec p_ms = dict_ms.matrix.adjoint() * dict_ms.matrix.col(best_v);
        const CVec q_bs = dict_bs.matrix.adjoint() * dict_bs.matrix.col(best_u);
        const CMat field = p_ms * q_bs.adjoint();
        const cxd amp = (p_ms.adjoint() * y * q_bs)(0) / field.squaredNorm();

        SinglePathEstimate p;
        p.aod_cell = best_u;
        p.aoa_cell = best_v;
        p.gain = gain_scale * amp;
        est.paths.push_back(p);
        y.noalias() -= amp * field;
    }
    return est;
}

AnalogBeamPair analog_only_pair(const UlaGeometry &geom_bs, const UlaGeometry &geom_ms, double aod,
                                double aoa, const CandidateSet &candidates_bs,
                                const CandidateSet &candidates_ms)
{
    auto best_column = [](const CandidateSet &set, const CVec &steer) {
        int best = 0;
        double best_corr = -1.0;
        for (int c = 0; c < set.size(); ++c)
        {
            const double corr = std::norm(set.matrix.col(c).dot(steer));
            if (corr > best_corr)
            {
                best_corr = corr;
                best = c;
            }
        }
        return set.matrix.col(best).eval();
    };
    AnalogBeamPair pair;
    pair.precoder = best_column(candidates_bs, array_response(geom_bs, aod));
    pair.combiner = best_column(candidates_ms, array_response(geom_ms, aoa));
    return pair;
}

std::string trace_to_csv(const std::vector<TraceRow> &rows)
{
    std::ostringstream out;
    out << "# schema=mmwsim.trace.v1\n";
    out << "path,stage,bs_subsets,ms_subsets,selected_bs,selected_ms,feedback_bits,entry_power\n";
    auto join = [](const auto &values) {
        std::ostringstream s;
        for (std::size_t i = 0; i < values.size(); ++i)
        {
            if (i)
                s << ';';
            s << values[i];
        }
        return s.str();
    };
    for (const auto &r : rows)
    {
        out << r.path << ',' << r.stage << ',' << join(r.bs_subsets) << ',' << join(r.ms_subsets)
            << ',' << r.selected_bs << ',' << r.selected_ms << ',' << r.feedback_bits << ','
            << join(r.entry_power) << '\n';
    }
    return out.str();
}

} // namespace mmw
