// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#include "mmwsim/cellular.hpp"
#include "mmwsim/experiments.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace mmw;

TEST_CASE("path loss: Friis reference and exponent scaling")
{
    CellConfig cfg;
    cfg.pathloss_exponent = 3.0;

    // Doubling the distance scales rho by 2^n_pl = 8.
    CHECK(pathloss_linear(100.0, cfg) / pathloss_linear(50.0, cfg) == doctest::Approx(8.0));

    // One meter: free-space reference (4 pi f / c)^2.
    const double fspl = std::pow(4.0 * std::numbers::pi * cfg.carrier_hz / 299792458.0, 2.0);
    CHECK(pathloss_linear(1.0, cfg) == doctest::Approx(fspl));

    // Exponent 2 reduces to pure free space at any distance.
    cfg.pathloss_exponent = 2.0;
    CHECK(pathloss_linear(250.0, cfg) == doctest::Approx(fspl * 250.0 * 250.0));

    CHECK_THROWS_AS(pathloss_linear(0.0, cfg), std::invalid_argument);
}

TEST_CASE("noise floor from bandwidth and noise figure")
{
    CellConfig cfg; // 100 MHz, NF 5 dB: -174 + 80 + 5 = -89 dBm
    CHECK(10.0 * std::log10(noise_power_watts(cfg)) + 30.0 == doctest::Approx(-89.0).epsilon(1e-9));
}

TEST_CASE("deployment: Poisson count, nearest-first and distance law")
{
    CellConfig cfg;
    cfg.cell_radius = 100.0;
    Rng rng(31);

    const double mean = cfg.density() * std::numbers::pi * cfg.window() * cfg.window();
    CHECK(mean == doctest::Approx(100.0));

    const int draws = 3000;
    double count_acc = 0.0;
    std::vector<double> nearest;
    nearest.reserve(draws);
    for (int i = 0; i < draws; ++i)
    {
        const Deployment dep = sample_deployment(rng, cfg, 1, 1.0);
        count_acc += 1.0 + static_cast<double>(dep.interferers.size());
        nearest.push_back(dep.desired_distance);
        for (const auto &bs : dep.interferers)
            CHECK(bs.distance >= dep.desired_distance);
    }
    // Sample mean of the Poisson count within 3 sigma.
    CHECK(std::abs(count_acc / draws - mean) < 3.0 * std::sqrt(mean / draws));

    // Kolmogorov-Smirnov test of the nearest-BS distance against
    // F(r) = 1 - exp(-lambda pi r^2) at the 1% level.
    std::sort(nearest.begin(), nearest.end());
    double d_stat = 0.0;
    const double lam = cfg.density();
    for (int i = 0; i < draws; ++i)
    {
        const double fr = 1.0 - std::exp(-lam * std::numbers::pi * nearest[i] * nearest[i]);
        const double lo = static_cast<double>(i) / draws;
        const double hi = static_cast<double>(i + 1) / draws;
        d_stat = std::max({d_stat, std::abs(fr - lo), std::abs(fr - hi)});
    }
    CHECK(d_stat < 1.628 / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("interference term: empty field and symmetric single interferer")
{
    const UlaGeometry bs{16, 0.5};
    const UlaGeometry ms{8, 0.5};
    Rng rng(32);

    Deployment empty;
    empty.desired_distance = 50.0;
    empty.desired = sample_pathset(rng, 1, 1.0, 1.0);
    CMat w(8, 2);
    w.col(0) = array_response(ms, 0.4);
    w.col(1) = array_response(ms, 1.1);
    CHECK(interference_term(empty, bs, ms, w, 1.0, rng).norm() == doctest::Approx(0.0));

    // An interferer with the desired BS's channel and steering produces the
    // same average received power as the desired signal under any combiner.
    PathSet ch = sample_pathset(rng, 3, 7.0, 1.0);
    Deployment dep;
    dep.desired_distance = 50.0;
    dep.desired = ch;
    InterferingBs twin;
    twin.distance = 50.0;
    twin.steer_angle = 0.9;
    twin.channel = ch;
    dep.interferers = {twin};

    const CMat h = assemble_channel(ch, bs, ms);
    const CVec f = array_response(bs, 0.9);
    const double p = 2.0;
    const double desired_power = p * std::norm(w.col(0).dot(h * f));
    double acc = 0.0;
    const int draws = 20000;
    for (int i = 0; i < draws; ++i)
        acc += std::norm(interference_term(dep, bs, ms, w, p, rng)(0));
    CHECK(std::abs(acc / draws - desired_power) < 3.0 * desired_power * std::sqrt(2.0 / draws));
}

TEST_CASE("interference average power matches the direct oracle")
{
    const UlaGeometry bs{8, 0.5};
    const UlaGeometry ms{4, 0.5};
    Rng rng(33);
    CellConfig cfg;
    const Deployment dep = sample_deployment(rng, cfg, 2, 1.0);
    const CMat w = array_response(ms, 0.7);

    // Oracle: sum_i P |w^H H_i f_i|^2 from the deterministic rx vectors.
    const auto rx = interferer_rx_vectors(dep, bs, ms);
    double oracle = 0.0;
    for (const auto &h : rx)
        oracle += 2.0 * std::norm(w.col(0).dot(h));

    double acc = 0.0;
    const int draws = 20000;
    for (int i = 0; i < draws; ++i)
        acc += std::norm(interference_term(dep, bs, ms, w, 2.0, rng)(0));
    CHECK(std::abs(acc / draws - oracle) < 4.0 * oracle / std::sqrt(static_cast<double>(draws) /
                                                                    (1.0 + rx.size())));

    // Hook and covariance agree with the same statistics.
    auto hook = make_interference_hook(rx, 2.0);
    double acc_hook = 0.0;
    for (int i = 0; i < draws; ++i)
        acc_hook += std::norm(hook(w.col(0), rng));
    CHECK(std::abs(acc_hook / draws - oracle) < 4.0 * oracle / std::sqrt(static_cast<double>(draws) /
                                                                         (1.0 + rx.size())));

    const CMat cov = interference_noise_cov(rx, 2.0, 0.5, 4);
    CHECK((w.col(0).adjoint() * cov * w.col(0))(0).real() ==
          doctest::Approx(oracle + 0.5 * w.col(0).squaredNorm()).epsilon(1e-9));
}

namespace {

CellularSystem small_system()
{
    ExperimentConfig cfg;
    cfg.n_bs = 16;
    cfg.n_ms = 8;
    cfg.n_rf_bs = 4;
    cfg.n_rf_ms = 3;
    cfg.n = 16;
    cfg.k = 2;
    cfg.l = 2;
    cfg.l_d = 2;
    cfg.n_s = 2;
    cfg.codebook = CodebookMode::Hybrid;
    const LinkSetup setup = make_link_setup(cfg);

    CellularSystem sys;
    sys.cell.tx_power = 2.0;
    sys.bs_geom = setup.bs_geom;
    sys.ms_geom = setup.ms_geom;
    sys.dict_bs = setup.dict_bs;
    sys.dict_ms = setup.dict_ms;
    sys.cb_bs = setup.cb_bs;
    sys.cb_ms = setup.cb_ms;
    sys.cand_bs = setup.cand_bs;
    sys.cand_ms = setup.cand_ms;
    sys.paths_per_bs = 2;
    sys.estimated_paths = 2;
    sys.num_streams = 2;
    sys.n_rf_bs = 4;
    sys.n_rf_ms = 3;
    return sys;
}

} // namespace

TEST_CASE("coverage curves are survival functions with the expected ordering")
{
    const CellularSystem sys = small_system();
    const std::vector<double> etas = {0.0, 1.0, 2.0, 4.0, 8.0, 12.0};
    const int trials = 150;

    const auto perfect = coverage_probability(sys, etas, trials,
                                              CoveragePipeline::PerfectCsiHybrid, 5, 2);
    const auto estimated = coverage_probability(sys, etas, trials,
                                                CoveragePipeline::EstimatedHybrid, 5, 2);
    const auto analog = coverage_probability(sys, etas, trials, CoveragePipeline::AnalogOnly, 5, 2);

    CHECK(perfect.front().coverage == doctest::Approx(1.0)); // eta = 0
    for (std::size_t i = 0; i < etas.size(); ++i)
    {
        CHECK(perfect[i].coverage >= 0.0);
        CHECK(perfect[i].coverage <= 1.0);
        if (i > 0)
        {
            CHECK(perfect[i].coverage <= perfect[i - 1].coverage + 1e-12);
            CHECK(estimated[i].coverage <= estimated[i - 1].coverage + 1e-12);
            CHECK(analog[i].coverage <= analog[i - 1].coverage + 1e-12);
        }
        // Ordering within the binomial confidence band.
        const double slack = 1.96 * std::sqrt(0.25 / trials) * 2.0;
        CHECK(perfect[i].coverage + slack >= estimated[i].coverage);
        CHECK(estimated[i].coverage + slack >= analog[i].coverage);
    }
}

TEST_CASE("coverage is deterministic across thread counts")
{
    const CellularSystem sys = small_system();
    const std::vector<double> etas = {1.0, 4.0};
    const auto a = coverage_probability(sys, etas, 60, CoveragePipeline::PerfectCsiHybrid, 9, 1);
    const auto b = coverage_probability(sys, etas, 60, CoveragePipeline::PerfectCsiHybrid, 9, 4);
    for (std::size_t i = 0; i < etas.size(); ++i)
        CHECK(a[i].coverage == b[i].coverage);
}

TEST_CASE("removing interference weakly improves the rate")
{
    const CellularSystem sys = small_system();
    Rng rng(35);
    const double sigma2 = noise_power_watts(sys.cell);
    for (int trial = 0; trial < 25; ++trial)
    {
        const Deployment dep = sample_deployment(rng, sys.cell, sys.paths_per_bs, 1.0);
        const CMat h = assemble_channel(dep.desired, sys.bs_geom, sys.ms_geom);
        const auto rx = interferer_rx_vectors(dep, sys.bs_geom, sys.ms_geom);
        const CMat f_opt = unconstrained_precoder(h, sys.num_streams, LinkSide::Bs);
        const CMat w_opt = unconstrained_precoder(h, sys.num_streams, LinkSide::Ms);
        const HybridPrecoder f = hybrid_approx(f_opt, sys.cand_bs, sys.n_rf_bs, sys.num_streams);
        const HybridPrecoder w = hybrid_approx(w_opt, sys.cand_ms, sys.n_rf_ms, sys.num_streams);
        const CMat cov_int =
            interference_noise_cov(rx, sys.cell.tx_power, sigma2, sys.ms_geom.num_elements);
        const double with_int = achievable_rate_cov(h, f.dense, w.dense, sys.cell.tx_power,
                                                    sys.num_streams, cov_int);
        const double without = achievable_rate(h, f.dense, w.dense, sys.cell.tx_power, sigma2,
                                               sys.num_streams);
        CHECK(without >= with_int - 1e-9);
    }
}

TEST_CASE("cell config validation")
{
    CellConfig bad;
    bad.window_radius = 150.0; // < 3 R_c
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CellConfig ok;
    CHECK_NOTHROW(ok.validate());
}
