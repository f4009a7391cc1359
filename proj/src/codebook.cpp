// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#include "mmwsim/codebook.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace mmw {

namespace {

// The full-circle grid maps mirrored angles onto identical steering columns,
// so A A^H carries a cluster of (near-)zero eigenvalues well separated from
// the informative ones (observed gap: below 1e-5 vs above 1e-1 of lambda_max).
// The solve runs on the dominant eigenspace only; keeping the tiny directions
// would let the least-squares solution blow up along them and bury the beam.
constexpr double kGramEigRelTol = 1e-4;

bool columns_equal(const CMat &m, int a, int b)
{
    return (m.col(a) - m.col(b)).cwiseAbs().maxCoeff() < 1e-14;
}

CMat dedupe_columns(const CMat &m)
{
    std::vector<int> keep;
    for (int c = 0; c < m.cols(); ++c)
    {
        bool dup = false;
        for (int k : keep)
            if (columns_equal(m, c, k))
            {
                dup = true;
                break;
            }
        if (!dup)
            keep.push_back(c);
    }
    CMat out(m.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i)
        out.col(static_cast<Eigen::Index>(i)) = m.col(keep[i]);
    return out;
}

} // namespace

CandidateSet make_candidates_beamsteering(const UlaGeometry &geom, int n_can, int grid_n)
{
    validate(geom);
    if (n_can < 1 || grid_n < 1)
        throw std::invalid_argument("candidate count and grid size must be positive");
    CandidateSet set;
    set.kind = CandidateSet::Kind::Beamsteering;
    set.matrix.resize(geom.num_elements, n_can);
    // Steering directions at pi/N spacing in the same phase domain as the
    // dictionary grid, i.e. half a grid cell apart.
    for (int t = 0; t < n_can; ++t)
        set.matrix.col(t) = steering_from_phase(geom, t * std::numbers::pi / grid_n);
    set.matrix = dedupe_columns(set.matrix);
    return set;
}

CandidateSet make_candidates_quantized(const UlaGeometry &geom, int n_q, int n_can, int grid_n)
{
    if (n_q < 1)
        throw std::invalid_argument("need at least one quantization bit");
    CandidateSet set = make_candidates_beamsteering(geom, n_can, grid_n);
    set.kind = CandidateSet::Kind::QuantizedPhases;
    set.quant_bits = n_q;
    const double levels = static_cast<double>(1u << n_q);
    const double step = 2.0 * std::numbers::pi / levels;
    const double mag = 1.0 / std::sqrt(static_cast<double>(geom.num_elements));
    for (int c = 0; c < set.matrix.cols(); ++c)
        for (int r = 0; r < set.matrix.rows(); ++r)
        {
            const double phase = std::arg(set.matrix(r, c));
            const double q = std::round(phase / step) * step;
            set.matrix(r, c) = std::polar(mag, q);
        }
    set.matrix = dedupe_columns(set.matrix);
    return set;
}

CodebookLayout CodebookLayout::make(int grid_n, int branching, int branch_paths)
{
    if (grid_n < 1 || branching < 2 || branch_paths < 1)
        throw std::invalid_argument("invalid codebook parameters");
    if (grid_n % branch_paths != 0)
        throw std::invalid_argument("grid resolution N must be divisible by L_d");
    int levels = 0;
    long long span = branch_paths;
    while (span < grid_n)
    {
        span *= branching;
        ++levels;
    }
    if (span != grid_n || levels < 1)
        throw std::invalid_argument("grid resolution N must equal L_d * K^S for an integer S >= 1");
    CodebookLayout layout;
    layout.grid_n = grid_n;
    layout.branching = branching;
    layout.branch_paths = branch_paths;
    layout.num_levels = levels;
    return layout;
}

int CodebookLayout::subset_count(int level) const
{
    if (level < 1 || level > num_levels)
        throw std::invalid_argument("level out of range");
    if (level == 1)
        return 1;
    int count = branch_paths;
    for (int s = 1; s < level; ++s)
        count *= branching;
    return count;
}

int CodebookLayout::vectors_per_subset(int level) const
{
    return level == 1 ? branching * branch_paths : branching;
}

int CodebookLayout::support_size(int level) const
{
    int denom = branch_paths;
    for (int s = 0; s < level; ++s)
        denom *= branching;
    return grid_n / denom;
}

int CodebookLayout::child_subset(int level, int subset, int vector_index) const
{
    // Level-(s+1) subsets tile at the granularity of level-s vectors, so the
    // child ordinal is K*(k-1)+m on inner levels and simply m at level 1.
    (void)level;
    return branching * (subset - 1) + vector_index + 1;
}

SubsetMask subset_mask(const CodebookLayout &layout, int level, int subset)
{
    if (subset < 1 || subset > layout.subset_count(level))
        throw std::invalid_argument("subset index out of range");
    SubsetMask mask;
    mask.level = level;
    mask.subset = subset;
    mask.grid_n = layout.grid_n;
    const int cols = layout.vectors_per_subset(level);
    const int width = layout.support_size(level);
    const int base = (subset - 1) * cols * width;
    mask.col_ranges.reserve(static_cast<std::size_t>(cols));
    for (int m = 0; m < cols; ++m)
        mask.col_ranges.emplace_back(base + m * width, base + (m + 1) * width);
    return mask;
}

SubsetMask subset_mask(int grid_n, int branching, int branch_paths, int level, int subset)
{
    return subset_mask(CodebookLayout::make(grid_n, branching, branch_paths), level, subset);
}

CMat mask_matrix(const SubsetMask &mask)
{
    CMat g = CMat::Zero(mask.grid_n, mask.num_columns());
    for (int m = 0; m < mask.num_columns(); ++m)
        for (int u = mask.col_ranges[static_cast<std::size_t>(m)].first;
             u < mask.col_ranges[static_cast<std::size_t>(m)].second; ++u)
            g(u, m) = 1.0;
    return g;
}

DictionarySolver::DictionarySolver(const Dictionary &dict) : dict_(&dict)
{
    const CMat gram = dict.matrix * dict.matrix.adjoint();
    Eigen::SelfAdjointEigenSolver<CMat> eig(gram);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("dictionary Gram matrix eigendecomposition failed");
    const Eigen::VectorXd &ev = eig.eigenvalues();
    const double emax = ev.maxCoeff();
    if (!(emax > 0.0))
        throw std::runtime_error("dictionary Gram matrix is zero");
    basis_ = eig.eigenvectors();
    inv_eigs_.resize(ev.size());
    double emin_kept = emax;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
    {
        if (ev(i) > kGramEigRelTol * emax)
        {
            inv_eigs_(i) = 1.0 / ev(i);
            emin_kept = std::min(emin_kept, ev(i));
        }
        else
        {
            inv_eigs_(i) = 0.0;
        }
    }
    condition_ = emax / emin_kept;
}

CMat DictionarySolver::least_squares(const CMat &targets) const
{
    // Min-norm solution over the informative eigenspace of A A^H.
    return basis_ * (inv_eigs_.asDiagonal() * (basis_.adjoint() * (dict_->matrix * targets)));
}

CMat ideal_precoder(const Dictionary &dict, const SubsetMask &mask)
{
    if (dict.grid_size() != mask.grid_n)
        throw std::invalid_argument("mask and dictionary grid sizes differ");
    DictionarySolver solver(dict);
    return solver.least_squares(mask_matrix(mask));
}

CVec HybridVector::assemble(const CandidateSet &candidates) const
{
    if (rf_columns.empty())
        return baseband;
    CVec v = CVec::Zero(candidates.matrix.rows());
    for (std::size_t i = 0; i < rf_columns.size(); ++i)
        v += baseband(static_cast<Eigen::Index>(i)) * candidates.matrix.col(rf_columns[i]);
    return v;
}

HybridVector omp_hybrid_design(const CVec &target, const CandidateSet &candidates, int n_rf)
{
    if (n_rf < 1)
        throw std::invalid_argument("need at least one RF chain");
    if (candidates.size() == 0)
        throw std::invalid_argument("empty candidate set");

    HybridVector out;
    const double target_norm = target.norm();
    if (!(target_norm > 0.0))
        throw std::invalid_argument("zero design target");

    CVec residual = target;
    CMat selected(target.size(), 0);
    std::vector<bool> used(static_cast<std::size_t>(candidates.size()), false);

    for (int it = 0; it < n_rf; ++it)
    {
        if (residual.norm() < 1e-13 * target_norm)
            break; // target already represented; fewer chains suffice

        // Largest |correlation|^2 against the residual, ties to lowest index.
        int best = -1;
        double best_corr = -1.0;
        for (int c = 0; c < candidates.size(); ++c)
        {
            if (used[static_cast<std::size_t>(c)])
                continue;
            const double corr = std::norm(candidates.matrix.col(c).dot(residual));
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
        out.baseband = cod.solve(target);
        out.rank_deficient = cod.rank() < selected.cols();

        residual = target - selected * out.baseband;
        const double rn = residual.norm();
        if (rn > 0.0)
            residual /= rn;
    }

    CVec combined = selected * out.baseband;
    const double norm = combined.norm();
    if (!(norm > 0.0))
        throw std::runtime_error("hybrid design collapsed to the zero vector");
    out.c_norm = 1.0 / norm;
    out.baseband *= out.c_norm;
    out.dense = combined * out.c_norm;
    return out;
}

HierarchicalCodebook build_codebook(const Dictionary &dict, const CandidateSet &candidates,
                                    const CodebookLayout &layout, int n_rf, RfMode mode)
{
    if (dict.grid_size() != layout.grid_n)
        throw std::invalid_argument("dictionary grid does not match codebook layout");
    if (mode == RfMode::Hybrid && n_rf < 1)
        throw std::invalid_argument("hybrid codebook needs at least one RF chain");

    DictionarySolver solver(dict);
    HierarchicalCodebook cb;
    cb.layout = layout;
    cb.rf_mode = mode;
    cb.n_rf = n_rf;
    cb.candidates = candidates;
    cb.levels.resize(static_cast<std::size_t>(layout.num_levels));

    for (int s = 1; s <= layout.num_levels; ++s)
    {
        auto &level = cb.levels[static_cast<std::size_t>(s - 1)];
        const int subsets = layout.subset_count(s);
        level.subsets.resize(static_cast<std::size_t>(subsets));
        double c_min = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= subsets; ++k)
        {
            const SubsetMask mask = subset_mask(layout, s, k);
            const CMat ideal = solver.least_squares(mask_matrix(mask));
            auto &vecs = level.subsets[static_cast<std::size_t>(k - 1)];
            vecs.reserve(static_cast<std::size_t>(ideal.cols()));
            for (int m = 0; m < ideal.cols(); ++m)
            {
                HybridVector hv;
                if (mode == RfMode::Hybrid)
                {
                    // Each vector is used in its own slot, so it gets the
                    // full RF budget independently of its subset siblings.
                    hv = omp_hybrid_design(ideal.col(m), candidates, n_rf);
                }
                else
                {
                    const double norm = ideal.col(m).norm();
                    if (!(norm > 0.0))
                        throw std::runtime_error("degenerate unconstrained training vector");
                    hv.c_norm = 1.0 / norm;
                    hv.baseband = ideal.col(m) * hv.c_norm;
                    hv.dense = hv.baseband;
                }
                // The over-complete design system is inconsistent, so the
                // normalization scalar alone does not tell how much of the
                // target projection the unit-norm beam realizes. Record the
                // measured support-averaged projection as this vector's C;
                // the error matrix then carries only ripple and leakage.
                const auto &range = mask.col_ranges[static_cast<std::size_t>(m)];
                cxd proj = 0.0;
                for (int u = range.first; u < range.second; ++u)
                    proj += dict.matrix.col(u).dot(hv.dense);
                hv.c_norm = std::abs(proj) / (range.second - range.first);
                c_min = std::min(c_min, hv.c_norm);
                vecs.push_back(std::move(hv));
            }
        }
        level.c_nominal = c_min;
    }
    return cb;
}

CMat subset_error_matrix(const Dictionary &dict, const HierarchicalCodebook &cb, int level,
                         int subset)
{
    const SubsetMask mask = subset_mask(cb.layout, level, subset);
    const auto &vecs = cb.levels.at(static_cast<std::size_t>(level - 1))
                           .subsets.at(static_cast<std::size_t>(subset - 1));
    CMat f(dict.geometry.num_elements, static_cast<Eigen::Index>(vecs.size()));
    for (std::size_t m = 0; m < vecs.size(); ++m)
        f.col(static_cast<Eigen::Index>(m)) = vecs[m].dense;
    const double c = cb.levels.at(static_cast<std::size_t>(level - 1)).c_nominal;
    return dict.matrix.adjoint() * f - c * mask_matrix(mask);
}

PairGainAnalysis pair_gain_analysis(const HierarchicalCodebook &cb_bs,
                                    const HierarchicalCodebook &cb_ms,
                                    const Dictionary &dict_bs, const Dictionary &dict_ms,
                                    int level, int subset_bs, int subset_ms)
{
    const SubsetMask mask_bs = subset_mask(cb_bs.layout, level, subset_bs);
    const SubsetMask mask_ms = subset_mask(cb_ms.layout, level, subset_ms);
    const CMat e_bs = subset_error_matrix(dict_bs, cb_bs, level, subset_bs);
    const CMat e_ms = subset_error_matrix(dict_ms, cb_ms, level, subset_ms);
    const double c_bs = cb_bs.levels.at(static_cast<std::size_t>(level - 1)).c_nominal;
    const double c_ms = cb_ms.levels.at(static_cast<std::size_t>(level - 1)).c_nominal;
    const double n_bs = dict_bs.geometry.num_elements;
    const double n_ms = dict_ms.geometry.num_elements;

    PairGainAnalysis out;
    out.level = level;
    out.subset_bs = subset_bs;
    out.subset_ms = subset_ms;
    out.nominal_gain = n_bs * c_bs * c_bs * n_ms * c_ms * c_ms;

    const auto [lo_bs, hi_bs] = mask_bs.subset_range();
    const auto [lo_ms, hi_ms] = mask_ms.subset_range();
    const int r_bs = hi_bs - lo_bs;
    const int r_ms = hi_ms - lo_ms;
    const int m_bs = mask_bs.num_columns();
    const int m_ms = mask_ms.num_columns();
    const int width_bs = r_bs / m_bs;
    const int width_ms = r_ms / m_ms;
    const double sqrt_nn = std::sqrt(n_bs * n_ms);
    const double sqrt_gain = std::sqrt(out.nominal_gain);

    // Combined two-sided subset error:
    //   E = E_bs ox E_ms + E_bs ox C_ms*G_ms + C_bs*G_bs ox E_ms
    auto combined_error = [&](int u, int v, int mb, int mm) -> cxd {
        const cxd eb = e_bs(u, mb);
        const cxd em = e_ms(v, mm);
        const double gb = mask_bs.contains(mb, u) ? 1.0 : 0.0;
        const double gm = mask_ms.contains(mm, v) ? 1.0 : 0.0;
        return eb * em + eb * (c_ms * gm) + (c_bs * gb) * em;
    };

    out.forward.resize(r_bs, r_ms);
    out.backward.assign(static_cast<std::size_t>(m_bs * m_ms - 1),
                        Eigen::MatrixXd(r_bs, r_ms));
    out.beta_min = std::numeric_limits<double>::infinity();
    out.forward_at_beta_min = out.nominal_gain;

    for (int iu = 0; iu < r_bs; ++iu)
    {
        const int u = lo_bs + iu;
        const int fwd_mb = iu / width_bs;
        for (int iv = 0; iv < r_ms; ++iv)
        {
            const int v = lo_ms + iv;
            const int fwd_mm = iv / width_ms;
            const double g_f = std::norm(sqrt_gain + sqrt_nn * combined_error(u, v, fwd_mb, fwd_mm));
            out.forward(iu, iv) = g_f;
            int slot = 0;
            for (int mb = 0; mb < m_bs; ++mb)
                for (int mm = 0; mm < m_ms; ++mm)
                {
                    if (mb == fwd_mb && mm == fwd_mm)
                        continue;
                    const double g_b = n_bs * n_ms * std::norm(combined_error(u, v, mb, mm));
                    out.backward[static_cast<std::size_t>(slot)](iu, iv) = g_b;
                    ++slot;
                    if (g_b > 0.0)
                    {
                        const double beta = g_f / g_b;
                        if (beta < out.beta_min)
                        {
                            out.beta_min = beta;
                            out.forward_at_beta_min = g_f;
                        }
                    }
                }
        }
    }
    return out;
}

LevelGainSummary analyze_level(const HierarchicalCodebook &cb_bs, const HierarchicalCodebook &cb_ms,
                               const Dictionary &dict_bs, const Dictionary &dict_ms, int level)
{
    if (cb_bs.layout.grid_n != cb_ms.layout.grid_n || cb_bs.layout.branching != cb_ms.layout.branching ||
        cb_bs.layout.branch_paths != cb_ms.layout.branch_paths)
        throw std::invalid_argument("codebooks must share grid, K and L_d");

    LevelGainSummary sum;
    sum.level = level;
    sum.c_bs = cb_bs.levels.at(static_cast<std::size_t>(level - 1)).c_nominal;
    sum.c_ms = cb_ms.levels.at(static_cast<std::size_t>(level - 1)).c_nominal;
    sum.nominal_gain = cb_bs.level_gain(dict_bs.geometry.num_elements, level) *
                       cb_ms.level_gain(dict_ms.geometry.num_elements, level);
    sum.beta = std::numeric_limits<double>::infinity();
    sum.forward_at_beta = sum.nominal_gain;

    const int subsets = cb_bs.layout.subset_count(level);
    for (int kb = 1; kb <= subsets; ++kb)
        for (int km = 1; km <= subsets; ++km)
        {
            const PairGainAnalysis pga =
                pair_gain_analysis(cb_bs, cb_ms, dict_bs, dict_ms, level, kb, km);
            if (pga.beta_min < sum.beta)
            {
                sum.beta = pga.beta_min;
                sum.forward_at_beta = pga.forward_at_beta_min;
            }
        }
    return sum;
}

std::vector<LevelGainSummary> analyze_codebooks(const HierarchicalCodebook &cb_bs,
                                                const HierarchicalCodebook &cb_ms,
                                                const Dictionary &dict_bs,
                                                const Dictionary &dict_ms)
{
    std::vector<LevelGainSummary> out;
    out.reserve(static_cast<std::size_t>(cb_bs.layout.num_levels));
    for (int s = 1; s <= cb_bs.layout.num_levels; ++s)
        out.push_back(analyze_level(cb_bs, cb_ms, dict_bs, dict_ms, s));
    return out;
}

namespace {

nlohmann::json complex_vec_to_json(const CVec &v)
{
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        arr.push_back({v(i).real(), v(i).imag()});
    return arr;
}

CVec complex_vec_from_json(const nlohmann::json &arr)
{
    CVec v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = cxd(arr[i][0].get<double>(), arr[i][1].get<double>());
    return v;
}

} // namespace

std::string codebook_to_json(const HierarchicalCodebook &cb)
{
    nlohmann::json j;
    j["schema"] = "mmwsim.codebook.v1";
    j["grid_n"] = cb.layout.grid_n;
    j["branching"] = cb.layout.branching;
    j["branch_paths"] = cb.layout.branch_paths;
    j["n_rf"] = cb.n_rf;
    j["rf_mode"] = cb.rf_mode == RfMode::Hybrid ? "hybrid" : "unconstrained";
    j["candidates"] = {
        {"kind", cb.candidates.kind == CandidateSet::Kind::Beamsteering ? "beamsteering" : "quantized"},
        {"quant_bits", cb.candidates.quant_bits},
        {"num_elements", cb.candidates.matrix.rows()},
        {"columns", nlohmann::json::array()},
    };
    for (int c = 0; c < cb.candidates.size(); ++c)
        j["candidates"]["columns"].push_back(complex_vec_to_json(cb.candidates.matrix.col(c)));

    j["levels"] = nlohmann::json::array();
    for (std::size_t s = 0; s < cb.levels.size(); ++s)
    {
        nlohmann::json jl;
        jl["level"] = s + 1;
        jl["c_nominal"] = cb.levels[s].c_nominal;
        jl["subsets"] = nlohmann::json::array();
        for (const auto &subset : cb.levels[s].subsets)
        {
            nlohmann::json js = nlohmann::json::array();
            for (const auto &hv : subset)
                js.push_back({{"rf_columns", hv.rf_columns},
                              {"baseband", complex_vec_to_json(hv.baseband)},
                              {"c_norm", hv.c_norm},
                              {"rank_deficient", hv.rank_deficient}});
            jl["subsets"].push_back(std::move(js));
        }
        j["levels"].push_back(std::move(jl));
    }
    return j.dump();
}

HierarchicalCodebook codebook_from_json(const std::string &text)
{
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("schema").get<std::string>() != "mmwsim.codebook.v1")
        throw std::invalid_argument("unknown codebook schema");

    HierarchicalCodebook cb;
    cb.layout = CodebookLayout::make(j.at("grid_n").get<int>(), j.at("branching").get<int>(),
                                     j.at("branch_paths").get<int>());
    cb.n_rf = j.at("n_rf").get<int>();
    cb.rf_mode = j.at("rf_mode").get<std::string>() == "hybrid" ? RfMode::Hybrid : RfMode::Unconstrained;

    const auto &jc = j.at("candidates");
    cb.candidates.kind = jc.at("kind").get<std::string>() == "beamsteering"
                             ? CandidateSet::Kind::Beamsteering
                             : CandidateSet::Kind::QuantizedPhases;
    cb.candidates.quant_bits = jc.at("quant_bits").get<int>();
    const auto rows = jc.at("num_elements").get<Eigen::Index>();
    const auto &cols = jc.at("columns");
    cb.candidates.matrix.resize(rows, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
        cb.candidates.matrix.col(static_cast<Eigen::Index>(c)) = complex_vec_from_json(cols[c]);

    for (const auto &jl : j.at("levels"))
    {
        HierarchicalCodebook::Level level;
        level.c_nominal = jl.at("c_nominal").get<double>();
        for (const auto &js : jl.at("subsets"))
        {
            std::vector<HybridVector> vecs;
            for (const auto &jv : js)
            {
                HybridVector hv;
                hv.rf_columns = jv.at("rf_columns").get<std::vector<int>>();
                hv.baseband = complex_vec_from_json(jv.at("baseband"));
                hv.c_norm = jv.at("c_norm").get<double>();
                hv.rank_deficient = jv.at("rank_deficient").get<bool>();
                hv.dense = hv.assemble(cb.candidates);
                vecs.push_back(std::move(hv));
            }
            level.subsets.push_back(std::move(vecs));
        }
        cb.levels.push_back(std::move(level));
    }
    return cb;
}

void save_codebook(const HierarchicalCodebook &cb, const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out << codebook_to_json(cb);
}

HierarchicalCodebook load_codebook(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return codebook_from_json(buf.str());
}

} // namespace mmw
