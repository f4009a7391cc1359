// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#include "mmwsim/codebook.hpp"
#include "mmwsim/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace mmw;

namespace {

// Independent least-squares oracle: QR on the stacked system A^H f = g
// instead of the Gram-solve route used by the implementation.
CVec lstsq_oracle(const CMat &dict, const CVec &g)
{
    return dict.adjoint().colPivHouseholderQr().solve(g);
}

} // namespace

TEST_CASE("beamsteering candidates are constant modulus")
{
    const UlaGeometry geom{16, 0.5};
    const CandidateSet set = make_candidates_beamsteering(geom, 32, 32);
    CHECK(set.size() >= 1);
    const double mag = 1.0 / std::sqrt(16.0);
    for (int c = 0; c < set.size(); ++c)
        for (int r = 0; r < 16; ++r)
            CHECK(std::abs(std::abs(set.matrix(r, c)) - mag) < 1e-12);

    const CandidateSet single = make_candidates_beamsteering(geom, 1, 32);
    CHECK(single.size() == 1);
    CHECK((single.matrix.col(0) - array_response(geom, 0.0)).norm() < 1e-14);
}

TEST_CASE("quantized candidates: rounding bound, one-bit set and distinct columns")
{
    const UlaGeometry geom{8, 0.5};

    // Many bits: quantized set converges to the unquantized one.
    const CandidateSet fine = make_candidates_quantized(geom, 16, 16, 16);
    const CandidateSet raw = make_candidates_beamsteering(geom, 16, 16);
    REQUIRE(fine.size() == raw.size());
    const double phase_step = 2.0 * std::numbers::pi / std::pow(2.0, 16);
    for (int c = 0; c < fine.size(); ++c)
        for (int r = 0; r < 8; ++r)
        {
            const double dphi = std::abs(std::arg(fine.matrix(r, c) / raw.matrix(r, c)));
            CHECK(dphi <= phase_step / 2.0 + 1e-12);
        }

    // One bit: entries collapse onto {+1, -1}/sqrt(N).
    const CandidateSet coarse = make_candidates_quantized(geom, 1, 16, 16);
    const double mag = 1.0 / std::sqrt(8.0);
    for (int c = 0; c < coarse.size(); ++c)
        for (int r = 0; r < 8; ++r)
        {
            CHECK(std::abs(coarse.matrix(r, c).imag()) < 1e-12);
            CHECK(std::abs(std::abs(coarse.matrix(r, c).real()) - mag) < 1e-12);
        }

    // Distinct columns after quantization.
    for (int a = 0; a < coarse.size(); ++a)
        for (int b = a + 1; b < coarse.size(); ++b)
            CHECK((coarse.matrix.col(a) - coarse.matrix.col(b)).norm() > 1e-12);
}

TEST_CASE("codebook layout and subset masks")
{
    // Single-path structure at N=8, K=2: supports {0..3},{4..7} on level 1.
    const CodebookLayout sp = CodebookLayout::make(8, 2, 1);
    CHECK(sp.num_levels == 3);
    CHECK(sp.subset_count(1) == 1);
    CHECK(sp.subset_count(2) == 2);
    CHECK(sp.subset_count(3) == 4);

    const SubsetMask top = subset_mask(8, 2, 1, 1, 1);
    REQUIRE(top.num_columns() == 2);
    CHECK(top.col_ranges[0] == std::pair<int, int>{0, 4});
    CHECK(top.col_ranges[1] == std::pair<int, int>{4, 8});

    // Finest level: singleton supports.
    const SubsetMask fine = subset_mask(8, 2, 1, 3, 1);
    CHECK(fine.col_ranges[0] == std::pair<int, int>{0, 1});
    CHECK(fine.col_ranges[1] == std::pair<int, int>{1, 2});

    // Multi-path variant: one level-1 subset of K*L_d vectors, width N/(K*L_d).
    const SubsetMask multi = subset_mask(64, 2, 2, 1, 1);
    REQUIRE(multi.num_columns() == 4);
    for (int m = 0; m < 4; ++m)
        CHECK(multi.col_ranges[static_cast<std::size_t>(m)] ==
              std::pair<int, int>{16 * m, 16 * (m + 1)});

    const CodebookLayout mp = CodebookLayout::make(64, 2, 2);
    CHECK(mp.num_levels == 5);
    CHECK(mp.subset_count(2) == 4);

    // Non-divisible resolutions are rejected.
    CHECK_THROWS_AS(CodebookLayout::make(60, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(CodebookLayout::make(64, 2, 3), std::invalid_argument);
}

TEST_CASE("mask tiling across a level")
{
    const CodebookLayout layout = CodebookLayout::make(64, 2, 2);
    for (int s = 1; s <= layout.num_levels; ++s)
    {
        std::vector<int> hits(64, 0);
        for (int k = 1; k <= layout.subset_count(s); ++k)
        {
            const SubsetMask mask = subset_mask(layout, s, k);
            for (const auto &r : mask.col_ranges)
                for (int u = r.first; u < r.second; ++u)
                    ++hits[static_cast<std::size_t>(u)];
        }
        for (int u = 0; u < 64; ++u)
            CHECK(hits[static_cast<std::size_t>(u)] == 1);
    }
}

TEST_CASE("child subset recursion refines to grid cells")
{
    const CodebookLayout layout = CodebookLayout::make(16, 2, 1);
    // Following vector m at every stage lands on the grid index built from
    // the binary expansion of the choices.
    int subset = 1;
    subset = layout.child_subset(1, subset, 1); // choose the upper half
    subset = layout.child_subset(2, subset, 0);
    subset = layout.child_subset(3, subset, 1);
    subset = layout.child_subset(4, subset, 0);
    // Ranges: {8..15} -> {8..11} -> {10..11} -> {10}.
    CHECK(subset - 1 == 10);
}

TEST_CASE("ideal precoder is the least-squares optimum")
{
    const Dictionary dict = build_dictionary({8, 0.5}, AngleGrid::uniform(16));
    const SubsetMask mask = subset_mask(16, 2, 1, 2, 1);
    const CMat f = ideal_precoder(dict, mask);
    const CMat g = mask_matrix(mask);
    for (int m = 0; m < g.cols(); ++m)
    {
        const CVec oracle = lstsq_oracle(dict.matrix, g.col(m));
        const double res_impl = (dict.matrix.adjoint() * f.col(m) - g.col(m)).norm();
        const double res_oracle = (dict.matrix.adjoint() * oracle - g.col(m)).norm();
        CHECK(res_impl <= res_oracle + 1e-9);
        CHECK(res_oracle <= res_impl + 1e-9);
    }
}

TEST_CASE("ideal precoder solves consistent square systems exactly")
{
    // N = 5 keeps all grid sines distinct, so the square dictionary has full
    // rank and A^H F = G exactly.
    const Dictionary dict = build_dictionary({5, 0.5}, AngleGrid::uniform(5));
    SubsetMask mask;
    mask.level = 1;
    mask.subset = 1;
    mask.grid_n = 5;
    mask.col_ranges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}};
    const CMat f = ideal_precoder(dict, mask);
    CHECK((dict.matrix.adjoint() * f - mask_matrix(mask)).norm() < 1e-8);
}

TEST_CASE("omp selects an exact candidate and is monotone")
{
    const UlaGeometry geom{16, 0.5};
    const CandidateSet set = make_candidates_quantized(geom, 7, 32, 32);

    // Target inside the candidate set: one chain, zero residual.
    const CVec target = set.matrix.col(5);
    const HybridVector hv = omp_hybrid_design(target, set, 1);
    REQUIRE(hv.rf_columns.size() == 1);
    CHECK(hv.rf_columns[0] == 5);
    CHECK((hv.dense - target).norm() < 1e-10);
    CHECK(std::abs(hv.c_norm - 1.0) < 1e-10);

    // Residual norms are non-increasing in the iteration count.
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial)
    {
        CVec t(16);
        for (int i = 0; i < 16; ++i)
            t(i) = rng.cgauss(1.0);
        double prev = t.norm();
        for (int chains = 1; chains <= 5; ++chains)
        {
            const HybridVector h = omp_hybrid_design(t, set, chains);
            // Reconstruct the unscaled residual of the least-squares fit.
            const double res = (t - h.dense / h.c_norm).norm();
            CHECK(res <= prev + 1e-9);
            prev = res;
        }
    }
}

TEST_CASE("hybrid vectors satisfy the hardware constraints")
{
    const UlaGeometry geom{32, 0.5};
    const Dictionary dict = build_dictionary(geom, AngleGrid::uniform(32));
    const CandidateSet set = make_candidates_quantized(geom, 7, 32, 32);
    const CodebookLayout layout = CodebookLayout::make(32, 2, 1);
    const HierarchicalCodebook cb = build_codebook(dict, set, layout, 6);

    const double mag = 1.0 / std::sqrt(32.0);
    for (const auto &level : cb.levels)
        for (const auto &subset : level.subsets)
            for (const auto &hv : subset)
            {
                CHECK(std::abs(hv.dense.norm() - 1.0) < 1e-10);
                for (int idx : hv.rf_columns)
                    for (int r = 0; r < 32; ++r)
                        CHECK(std::abs(std::abs(set.matrix(r, idx)) - mag) < 1e-12);
            }
}

TEST_CASE("beam approximation improves with more RF chains")
{
    // 32-antenna second-level beam of an N=256 codebook, 5/10/15 chains.
    const UlaGeometry geom{32, 0.5};
    const Dictionary dict = build_dictionary(geom, AngleGrid::uniform(256));
    const CandidateSet set = make_candidates_quantized(geom, 7, 256, 256);
    const CMat ideal = ideal_precoder(dict, subset_mask(256, 2, 1, 2, 1));
    const CVec target = ideal.col(0);
    const CVec pattern_ref = dict.matrix.adjoint() * (target / target.norm());

    double prev_res = 1e300;
    std::vector<double> pattern_dev;
    for (int chains : {5, 10, 15})
    {
        const HybridVector hv = omp_hybrid_design(target, set, chains);
        const double res = (target - hv.dense / hv.c_norm).norm();
        CHECK(res < prev_res);
        prev_res = res;
        pattern_dev.push_back((dict.matrix.adjoint() * hv.dense - pattern_ref).norm());
    }
    CHECK(pattern_dev.back() < pattern_dev.front());
}

TEST_CASE("codebook structure matches the layout")
{
    const UlaGeometry geom{8, 0.5};
    const Dictionary dict = build_dictionary(geom, AngleGrid::uniform(8));
    const CandidateSet set = make_candidates_quantized(geom, 7, 8, 8);

    const HierarchicalCodebook sp = build_codebook(dict, set, CodebookLayout::make(8, 2, 1), 4);
    REQUIRE(sp.levels.size() == 3);
    CHECK(sp.levels[0].subsets.size() == 1);
    CHECK(sp.levels[1].subsets.size() == 2);
    CHECK(sp.levels[2].subsets.size() == 4);
    CHECK(sp.levels[0].subsets[0].size() == 2);

    CHECK(CodebookLayout::make(64, 2, 1).num_levels == 6);

    const Dictionary dict64 = build_dictionary({16, 0.5}, AngleGrid::uniform(64));
    const CandidateSet set64 = make_candidates_quantized({16, 0.5}, 7, 64, 64);
    const HierarchicalCodebook mp = build_codebook(dict64, set64, CodebookLayout::make(64, 2, 2), 4);
    REQUIRE(mp.levels.size() == 5);
    CHECK(mp.levels[0].subsets.size() == 1);
    CHECK(mp.levels[0].subsets[0].size() == 4);
    CHECK(mp.levels[1].subsets.size() == 4);
    CHECK(mp.levels[1].subsets[0].size() == 2);
}

TEST_CASE("gain analysis on an exactly representable codebook")
{
    // Square full-rank dictionary (N = 5, distinct sines) with singleton
    // supports: the design equations are consistent, so E = 0, the forward
    // gain equals the nominal gain and every backward gain vanishes.
    const UlaGeometry geom{5, 0.5};
    const Dictionary dict = build_dictionary(geom, AngleGrid::uniform(5));
    const CodebookLayout layout = CodebookLayout::make(5, 5, 1);
    CHECK(layout.num_levels == 1);
    const CandidateSet set = make_candidates_beamsteering(geom, 5, 5);
    const HierarchicalCodebook cb = build_codebook(dict, set, layout, 5, RfMode::Unconstrained);

    const CMat err = subset_error_matrix(dict, cb, 1, 1);
    // The nominal C is the level minimum; per-vector C can exceed it, so only
    // off-support entries are guaranteed to vanish.
    for (int u = 0; u < 5; ++u)
        for (int m = 0; m < 5; ++m)
            if (u != m)
                CHECK(std::abs(err(u, m)) < 1e-8);

    const PairGainAnalysis pga = pair_gain_analysis(cb, cb, dict, dict, 1, 1, 1);
    for (int iu = 0; iu < 5; ++iu)
        for (int iv = 0; iv < 5; ++iv)
            CHECK(pga.forward(iu, iv) >= pga.nominal_gain - 1e-6);
}

TEST_CASE("combined mask has one forward beam per in-range direction")
{
    // Level 1 covers the full grid: every direction lies in exactly one
    // beam-pair support on each side.
    const CodebookLayout layout = CodebookLayout::make(16, 2, 2);
    const SubsetMask mask = subset_mask(layout, 1, 1);
    for (int u = 0; u < 16; ++u)
    {
        int count = 0;
        for (int m = 0; m < mask.num_columns(); ++m)
            if (mask.contains(m, u))
                ++count;
        CHECK(count == 1);
    }
}

TEST_CASE("level analysis produces finite betas for a real codebook")
{
    const UlaGeometry bs{16, 0.5};
    const UlaGeometry ms{8, 0.5};
    const Dictionary dict_bs = build_dictionary(bs, AngleGrid::uniform(16));
    const Dictionary dict_ms = build_dictionary(ms, AngleGrid::uniform(16));
    const CandidateSet cand_bs = make_candidates_quantized(bs, 7, 16, 16);
    const CandidateSet cand_ms = make_candidates_quantized(ms, 7, 16, 16);
    const CodebookLayout layout = CodebookLayout::make(16, 2, 1);
    const HierarchicalCodebook cb_bs = build_codebook(dict_bs, cand_bs, layout, 4);
    const HierarchicalCodebook cb_ms = build_codebook(dict_ms, cand_ms, layout, 4);

    const auto summary = analyze_codebooks(cb_bs, cb_ms, dict_bs, dict_ms);
    REQUIRE(summary.size() == 4);
    for (const auto &row : summary)
    {
        CHECK(row.nominal_gain > 0.0);
        CHECK(row.beta > 0.0);
        CHECK(row.forward_at_beta > 0.0);
    }
}

TEST_CASE("codebook serialization round trip")
{
    const UlaGeometry geom{16, 0.5};
    const Dictionary dict = build_dictionary(geom, AngleGrid::uniform(16));
    const CandidateSet set = make_candidates_quantized(geom, 5, 16, 16);
    const HierarchicalCodebook cb = build_codebook(dict, set, CodebookLayout::make(16, 2, 1), 4);

    const HierarchicalCodebook back = codebook_from_json(codebook_to_json(cb));
    CHECK(back.layout.grid_n == cb.layout.grid_n);
    CHECK(back.layout.num_levels == cb.layout.num_levels);
    CHECK(back.n_rf == cb.n_rf);
    for (std::size_t s = 0; s < cb.levels.size(); ++s)
    {
        CHECK(back.levels[s].c_nominal == cb.levels[s].c_nominal); // bit-exact
        for (std::size_t k = 0; k < cb.levels[s].subsets.size(); ++k)
            for (std::size_t m = 0; m < cb.levels[s].subsets[k].size(); ++m)
            {
                const auto &a = cb.levels[s].subsets[k][m];
                const auto &b = back.levels[s].subsets[k][m];
                CHECK(a.rf_columns == b.rf_columns);
                REQUIRE(a.baseband.size() == b.baseband.size());
                for (Eigen::Index i = 0; i < a.baseband.size(); ++i)
                    CHECK(std::abs(a.baseband(i) - b.baseband(i)) <=
                          1e-15 * std::abs(a.baseband(i)));
            }
    }
}

TEST_CASE("reference codebook gain analysis regression")
{
    // 64/32-element arrays, N=64, K=2, 10/6 chains, 7-bit phases. Frozen
    // from the implementation itself; levels 2..6 have beta > 1, the widest
    // level sits just below 1 (its sector-edge dip is comparable to the
    // worst sidelobe at this chain budget).
    const UlaGeometry bs{64, 0.5};
    const UlaGeometry ms{32, 0.5};
    const AngleGrid grid = AngleGrid::uniform(64);
    const Dictionary dict_bs = build_dictionary(bs, grid);
    const Dictionary dict_ms = build_dictionary(ms, grid);
    const CandidateSet cand_bs = make_candidates_quantized(bs, 7, 128, 64);
    const CandidateSet cand_ms = make_candidates_quantized(ms, 7, 128, 64);
    const CodebookLayout layout = CodebookLayout::make(64, 2, 1);
    const HierarchicalCodebook cb_bs = build_codebook(dict_bs, cand_bs, layout, 10);
    const HierarchicalCodebook cb_ms = build_codebook(dict_ms, cand_ms, layout, 6);

    const auto rows = analyze_codebooks(cb_bs, cb_ms, dict_bs, dict_ms);
    REQUIRE(rows.size() == 6);
    const double beta_expected[6] = {0.980638537647, 1.13953889884, 1.66769659892,
                                     2.52493013422, 3.61540491203, 2.46541994384};
    const double gain_expected[6] = {0.821734188766, 5.99597761875, 35.4568938902,
                                     135.19283156, 527.18715555, 2048.0};
    for (int s = 0; s < 6; ++s)
    {
        CHECK(rows[static_cast<std::size_t>(s)].beta ==
              doctest::Approx(beta_expected[s]).epsilon(1e-9));
        CHECK(rows[static_cast<std::size_t>(s)].nominal_gain ==
              doctest::Approx(gain_expected[s]).epsilon(1e-9));
        CHECK(std::isfinite(rows[static_cast<std::size_t>(s)].beta));
        if (s > 0)
            CHECK(rows[static_cast<std::size_t>(s)].beta > 1.0);
    }
}

TEST_CASE("coarser phase quantization does not improve beta (reference codebook)")
{
    // At the 64/32-element reference instance the worst-case forward/backward
    // ratio grows with the phase resolution level by level; 2% slack absorbs
    // greedy-OMP noise in the worst-case direction, and the min over levels
    // is monotone outright.
    const UlaGeometry bs{64, 0.5};
    const UlaGeometry ms{32, 0.5};
    const AngleGrid grid = AngleGrid::uniform(64);
    const Dictionary dict_bs = build_dictionary(bs, grid);
    const Dictionary dict_ms = build_dictionary(ms, grid);
    const CodebookLayout layout = CodebookLayout::make(64, 2, 1);

    std::vector<std::vector<double>> betas;
    std::vector<double> worst;
    for (int n_q : {2, 3, 5, 7})
    {
        const CandidateSet cand_bs = make_candidates_quantized(bs, n_q, 128, 64);
        const CandidateSet cand_ms = make_candidates_quantized(ms, n_q, 128, 64);
        const HierarchicalCodebook cb_bs = build_codebook(dict_bs, cand_bs, layout, 10);
        const HierarchicalCodebook cb_ms = build_codebook(dict_ms, cand_ms, layout, 6);
        std::vector<double> level_betas;
        double w = 1e300;
        for (const auto &row : analyze_codebooks(cb_bs, cb_ms, dict_bs, dict_ms))
        {
            level_betas.push_back(row.beta);
            w = std::min(w, row.beta);
        }
        betas.push_back(level_betas);
        worst.push_back(w);
    }
    for (std::size_t q = 1; q < betas.size(); ++q)
    {
        for (std::size_t s = 0; s < betas[q].size(); ++s)
            CHECK(betas[q][s] >= betas[q - 1][s] / 1.02);
        CHECK(worst[q] >= worst[q - 1]);
    }
}
