// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#include "mmwsim/cellular.hpp"
#include "mmwsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mmw {

double CellConfig::density() const
{
    return ppp_density > 0.0 ? ppp_density : 1.0 / (std::numbers::pi * cell_radius * cell_radius);
}

double CellConfig::window() const
{
    return window_radius > 0.0 ? window_radius : 10.0 * cell_radius;
}

void CellConfig::validate() const
{
    if (!(cell_radius > 0.0) || !(density() > 0.0))
        throw std::invalid_argument("cell radius and density must be positive");
    if (window() < 3.0 * cell_radius)
        throw std::invalid_argument("window radius must be at least 3 cell radii");
    if (!(carrier_hz > 0.0) || !(bandwidth_hz > 0.0) || !(tx_power > 0.0))
        throw std::invalid_argument("carrier, bandwidth and transmit power must be positive");
}

double noise_power_watts(const CellConfig &config)
{
    const double dbm = -174.0 + 10.0 * std::log10(config.bandwidth_hz) + config.noise_figure_db;
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

double pathloss_linear(double distance, const CellConfig &config)
{
    if (!(distance > 0.0))
        throw std::invalid_argument("distance must be positive");
    constexpr double c = 299792458.0;
    const double fspl_1m = std::pow(4.0 * std::numbers::pi * config.carrier_hz / c, 2.0);
    return fspl_1m * std::pow(distance, config.pathloss_exponent);
}

Deployment sample_deployment(Rng &rng, const CellConfig &config, int paths_per_bs,
                             double avg_gain_power, AngleDomain domain)
{
    config.validate();
    const double w = config.window();
    const double mean = config.density() * std::numbers::pi * w * w;

    std::vector<double> distances;
    do
    {
        const int count = rng.poisson(mean);
        distances.clear();
        distances.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i)
            distances.push_back(w * std::sqrt(rng.uniform())); // uniform in the disc
    } while (distances.empty());

    const auto nearest = std::min_element(distances.begin(), distances.end());
    Deployment dep;
    dep.desired_distance = *nearest;
    dep.desired = sample_pathset(rng, paths_per_bs, pathloss_linear(*nearest, config),
                                 avg_gain_power, domain);
    for (auto it = distances.begin(); it != distances.end(); ++it)
    {
        if (it == nearest)
            continue;
        InterferingBs bs;
        bs.distance = *it;
        bs.steer_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        bs.channel = sample_pathset(rng, paths_per_bs, pathloss_linear(*it, config),
                                    avg_gain_power, domain);
        dep.interferers.push_back(std::move(bs));
    }
    return dep;
}

std::vector<CVec> interferer_rx_vectors(const Deployment &deployment, const UlaGeometry &bs_geom,
                                        const UlaGeometry &ms_geom)
{
    std::vector<CVec> rx;
    rx.reserve(deployment.interferers.size());
    for (const auto &bs : deployment.interferers)
    {
        const CMat h = assemble_channel(bs.channel, bs_geom, ms_geom);
        rx.push_back(h * array_response(bs_geom, bs.steer_angle));
    }
    return rx;
}

CVec interference_term(const Deployment &deployment, const UlaGeometry &bs_geom,
                       const UlaGeometry &ms_geom, const CMat &combiners, double tx_power,
                       Rng &rng)
{
    const auto rx = interferer_rx_vectors(deployment, bs_geom, ms_geom);
    CVec out = CVec::Zero(combiners.cols());
    for (const auto &h : rx)
    {
        const cxd symbol = rng.cgauss(tx_power);
        out += symbol * (combiners.adjoint() * h);
    }
    return out;
}

InterferenceHook make_interference_hook(std::vector<CVec> rx_vectors, double tx_power)
{
    return [rx = std::move(rx_vectors), tx_power](const CVec &combiner, Rng &rng) {
        cxd sum = 0.0;
        for (const auto &h : rx)
            sum += rng.cgauss(tx_power) * combiner.dot(h);
        return sum;
    };
}

CMat interference_noise_cov(const std::vector<CVec> &rx_vectors, double tx_power,
                            double noise_power, int n_ms)
{
    CMat cov = noise_power * CMat::Identity(n_ms, n_ms);
    for (const auto &h : rx_vectors)
        cov.noalias() += tx_power * (h * h.adjoint());
    return cov;
}

namespace {

std::vector<double> codebook_stage_gains(const CellularSystem &sys)
{
    std::vector<double> gains;
    gains.reserve(static_cast<std::size_t>(sys.cb_bs.layout.num_levels));
    for (int s = 1; s <= sys.cb_bs.layout.num_levels; ++s)
        gains.push_back(sys.cb_bs.level_gain(sys.bs_geom.num_elements, s) *
                        sys.cb_ms.level_gain(sys.ms_geom.num_elements, s));
    return gains;
}

} // namespace

double coverage_trial_rate(const CellularSystem &sys, CoveragePipeline pipeline, Rng &rng)
{
    const double sigma2 = noise_power_watts(sys.cell);
    const Deployment dep = sample_deployment(rng, sys.cell, sys.paths_per_bs, sys.avg_gain_power,
                                             sys.domain);
    const CMat h_true = assemble_channel(dep.desired, sys.bs_geom, sys.ms_geom);
    const auto rx = interferer_rx_vectors(dep, sys.bs_geom, sys.ms_geom);
    const CMat noise_cov =
        interference_noise_cov(rx, sys.cell.tx_power, sigma2, sys.ms_geom.num_elements);

    CMat channel_for_design = h_true;
    MultiPathEstimate est;
    if (pipeline != CoveragePipeline::PerfectCsiHybrid)
    {
        // Train through the hierarchical codebook with the cellular
        // interference corrupting every measurement slot. Both the estimated
        // hybrid pipeline and the analog baseline work from this estimate,
        // so all three pipelines differ only in their precoding front end.
        const double gamma_bar =
            average_snr(sys.avg_gain_power, dep.desired.pathloss, sigma2);
        const auto gains = codebook_stage_gains(sys);
        const int k_eff = sys.cb_bs.layout.branching * sys.cb_bs.layout.branch_paths;
        const auto [gamma_budget, powers] =
            allocate_power_target_error(sys.delta, gamma_bar, k_eff, gains);
        (void)gamma_budget;

        HybridTrainingBackend backend(sys.cb_bs, sys.cb_ms, sys.dict_bs, sys.dict_ms, dep.desired,
                                      sigma2, rng,
                                      make_interference_hook(rx, sys.cell.tx_power));
        StepCount steps;
        est = adaptive_estimate(backend, powers, steps);
        channel_for_design = reconstruct_channel(est, sys.dict_bs, sys.dict_ms,
                                                 dep.desired.pathloss);
    }

    if (pipeline == CoveragePipeline::AnalogOnly)
    {
        int best = 0;
        for (int l = 1; l < static_cast<int>(est.paths.size()); ++l)
            if (std::norm(est.paths[static_cast<std::size_t>(l)].gain) >
                std::norm(est.paths[static_cast<std::size_t>(best)].gain))
                best = l;
        const auto &path = est.paths[static_cast<std::size_t>(best)];
        const AnalogBeamPair pair = analog_only_pair(
            sys.bs_geom, sys.ms_geom, representative_angle(sys.dict_bs.grid, sys.bs_geom.spacing, path.aod_cell),
            representative_angle(sys.dict_ms.grid, sys.ms_geom.spacing, path.aoa_cell),
            sys.cand_bs, sys.cand_ms);
        return achievable_rate_cov(h_true, pair.precoder, pair.combiner, sys.cell.tx_power, 1,
                                   noise_cov);
    }

    const CMat f_opt = unconstrained_precoder(channel_for_design, sys.num_streams, LinkSide::Bs);
    const CMat w_opt = unconstrained_precoder(channel_for_design, sys.num_streams, LinkSide::Ms);
    const HybridPrecoder f = hybrid_approx(f_opt, sys.cand_bs, sys.n_rf_bs, sys.num_streams);
    const HybridPrecoder w = hybrid_approx(w_opt, sys.cand_ms, sys.n_rf_ms, sys.num_streams);
    return achievable_rate_cov(h_true, f.dense, w.dense, sys.cell.tx_power, sys.num_streams,
                               noise_cov);
}

std::vector<CoveragePoint> coverage_probability(const CellularSystem &sys,
                                                std::span<const double> eta_grid, int trials,
                                                CoveragePipeline pipeline, std::uint64_t seed,
                                                int threads)
{
    if (trials < 1)
        throw std::invalid_argument("need at least one trial");
    std::vector<double> rates(static_cast<std::size_t>(trials));
    parallel_for(trials, threads, [&](long long t) {
        Rng rng = Rng::for_trial(seed, static_cast<std::uint64_t>(t));
        rates[static_cast<std::size_t>(t)] = coverage_trial_rate(sys, pipeline, rng);
    });

    std::vector<CoveragePoint> points;
    points.reserve(eta_grid.size());
    for (double eta : eta_grid)
    {
        long long hits = 0;
        for (double r : rates)
            if (r >= eta)
                ++hits;
        CoveragePoint pt;
        pt.eta = eta;
        pt.trials = trials;
        pt.coverage = static_cast<double>(hits) / trials;
        const double se = std::sqrt(std::max(pt.coverage * (1.0 - pt.coverage), 1e-12) / trials);
        pt.ci_low = std::max(0.0, pt.coverage - 1.96 * se);
        pt.ci_high = std::min(1.0, pt.coverage + 1.96 * se);
        points.push_back(pt);
    }
    return points;
}

} // namespace mmw
