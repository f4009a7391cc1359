// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#include "mmwsim/experiments.hpp"
#include "mmwsim/parallel.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mmw {

std::vector<double> LinkSetup::stage_gains() const
{
    std::vector<double> gains;
    gains.reserve(static_cast<std::size_t>(layout.num_levels));
    for (int s = 1; s <= layout.num_levels; ++s)
    {
        if (mode == CodebookMode::Ideal)
        {
            const double per_side = static_cast<double>(layout.grid_n) / layout.support_size(s);
            gains.push_back(per_side * per_side);
        }
        else
        {
            gains.push_back(cb_bs.level_gain(bs_geom.num_elements, s) *
                            cb_ms.level_gain(ms_geom.num_elements, s));
        }
    }
    return gains;
}

std::unique_ptr<TrainingBackend> LinkSetup::make_backend(const PathSet &paths, double noise_power,
                                                         Rng &rng,
                                                         InterferenceHook interference) const
{
    if (mode == CodebookMode::Ideal)
    {
        if (interference)
            throw std::invalid_argument("the sector-model backend has no physical combiners "
                                        "to apply interference to");
        return std::make_unique<IdealTrainingBackend>(layout, grid, bs_geom.spacing,
                                                      ms_geom.spacing, paths, noise_power, rng);
    }
    return std::make_unique<HybridTrainingBackend>(cb_bs, cb_ms, dict_bs, dict_ms, paths,
                                                   noise_power, rng, std::move(interference));
}

LinkSetup make_link_setup(const ExperimentConfig &cfg) { return make_link_setup(cfg, cfg.n_q); }

LinkSetup make_link_setup(const ExperimentConfig &cfg, int n_q_override)
{
    LinkSetup s;
    s.bs_geom = {cfg.n_bs, cfg.spacing};
    s.ms_geom = {cfg.n_ms, cfg.spacing};
    s.grid = AngleGrid::uniform(cfg.n);
    s.dict_bs = build_dictionary(s.bs_geom, s.grid);
    s.dict_ms = build_dictionary(s.ms_geom, s.grid);
    // Steering candidates at the t*pi/N spacing need 2N angles to fan over
    // the whole circle; N of them would leave half the grid unreachable.
    s.cand_bs = make_candidates_quantized(s.bs_geom, n_q_override, 2 * cfg.n, cfg.n);
    s.cand_ms = make_candidates_quantized(s.ms_geom, n_q_override, 2 * cfg.n, cfg.n);
    s.layout = CodebookLayout::make(cfg.n, cfg.k, cfg.l_d);
    s.mode = cfg.codebook;
    s.n_rf_bs = cfg.n_rf_bs;
    s.n_rf_ms = cfg.n_rf_ms;
    s.num_streams = cfg.num_streams();
    if (cfg.codebook != CodebookMode::Ideal)
    {
        const RfMode rf = cfg.codebook == CodebookMode::Hybrid ? RfMode::Hybrid
                                                               : RfMode::Unconstrained;
        s.cb_bs = build_codebook(s.dict_bs, s.cand_bs, s.layout, cfg.n_rf_bs, rf);
        s.cb_ms = build_codebook(s.dict_ms, s.cand_ms, s.layout, cfg.n_rf_ms, rf);
    }
    return s;
}

StagePowers training_powers(const LinkSetup &setup, double gamma_bar, double delta)
{
    const auto gains = setup.stage_gains();
    const int k_eff = setup.layout.branching * setup.layout.branch_paths;
    return allocate_power_target_error(delta, gamma_bar, k_eff, gains).second;
}

namespace {

double precode_and_rate(const LinkSetup &setup, const CMat &design_channel,
                        const CMat &true_channel, double data_power, double noise_power)
{
    const CMat f_opt = unconstrained_precoder(design_channel, setup.num_streams, LinkSide::Bs);
    const CMat w_opt = unconstrained_precoder(design_channel, setup.num_streams, LinkSide::Ms);
    const HybridPrecoder f = hybrid_approx(f_opt, setup.cand_bs, setup.n_rf_bs, setup.num_streams);
    const HybridPrecoder w = hybrid_approx(w_opt, setup.cand_ms, setup.n_rf_ms, setup.num_streams);
    return achievable_rate(true_channel, f.dense, w.dense, data_power, noise_power,
                           setup.num_streams);
}

} // namespace

double adaptive_pipeline_rate(const LinkSetup &setup, const PathSet &paths, double noise_power,
                              double delta, double data_power, Rng &rng)
{
    const double gamma_bar = average_snr(paths.avg_gain_power, paths.pathloss, noise_power);
    const StagePowers powers = training_powers(setup, gamma_bar, delta);
    auto backend = setup.make_backend(paths, noise_power, rng);
    StepCount steps;
    const MultiPathEstimate est = adaptive_estimate(*backend, powers, steps);
    const CMat h_hat = reconstruct_channel(est, setup.dict_bs, setup.dict_ms, paths.pathloss);
    const CMat h_true = assemble_channel(paths, setup.bs_geom, setup.ms_geom);
    return precode_and_rate(setup, h_hat, h_true, data_power, noise_power);
}

double exhaustive_pipeline_rate(const LinkSetup &setup, const PathSet &paths, double noise_power,
                                double delta, double data_power, Rng &rng)
{
    const double gamma_bar = average_snr(paths.avg_gain_power, paths.pathloss, noise_power);
    const StagePowers powers = training_powers(setup, gamma_bar, delta);
    StepCount steps;
    const MultiPathEstimate est =
        exhaustive_estimate(setup.dict_bs, setup.dict_ms, paths, noise_power,
                            powers.per_stage.back(), setup.layout.branch_paths, rng, steps);
    const CMat h_hat = reconstruct_channel(est, setup.dict_bs, setup.dict_ms, paths.pathloss);
    const CMat h_true = assemble_channel(paths, setup.bs_geom, setup.ms_geom);
    return precode_and_rate(setup, h_hat, h_true, data_power, noise_power);
}

double perfect_csi_hybrid_rate(const LinkSetup &setup, const CMat &channel, double data_power,
                               double noise_power)
{
    return precode_and_rate(setup, channel, channel, data_power, noise_power);
}

double perfect_csi_unconstrained_rate(const LinkSetup &setup, const CMat &channel,
                                      double data_power, double noise_power)
{
    // Orthonormal columns already satisfy ||F||_F^2 = N_s.
    const CMat f = unconstrained_precoder(channel, setup.num_streams, LinkSide::Bs);
    const CMat w = unconstrained_precoder(channel, setup.num_streams, LinkSide::Ms);
    return achievable_rate(channel, f, w, data_power, noise_power, setup.num_streams);
}

double analog_only_rate(const LinkSetup &setup, const PathSet &paths, const CMat &channel,
                        double data_power, double noise_power)
{
    const auto &best = paths.paths[static_cast<std::size_t>(paths.strongest_path())];
    const AnalogBeamPair pair = analog_only_pair(setup.bs_geom, setup.ms_geom, best.aod, best.aoa,
                                                 setup.cand_bs, setup.cand_ms);
    return achievable_rate(channel, pair.precoder, pair.combiner, data_power, noise_power, 1);
}

// ---------------------------------------------------------------------------
// CSV / manifest plumbing

CsvTable::CsvTable(std::string schema, std::vector<std::string> columns)
    : schema_(std::move(schema)), columns_(std::move(columns))
{
}

namespace {

std::string fmt_double(double v)
{
    if (!std::isfinite(v))
        throw std::runtime_error("refusing to emit a non-finite value");
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

void CsvTable::add_row(const std::vector<double> &values)
{
    std::vector<std::string> row;
    row.reserve(values.size());
    for (double v : values)
        row.push_back(fmt_double(v));
    add_row_text(row);
}

void CsvTable::add_row_text(const std::vector<std::string> &values)
{
    if (values.size() != columns_.size())
        throw std::invalid_argument("CSV row width mismatch");
    rows_.push_back(values);
}

std::string CsvTable::to_string() const
{
    std::ostringstream out;
    out << "# schema=" << schema_ << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i)
        out << (i ? "," : "") << columns_[i];
    out << "\n";
    for (const auto &row : rows_)
    {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << row[i];
        out << "\n";
    }
    return out.str();
}

void CsvTable::write(const std::string &path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out << to_string();
}

namespace {

struct MeanSem {
    double mean = 0.0;
    double sem = 0.0;
};

MeanSem mean_sem(const std::vector<double> &values)
{
    MeanSem out;
    const double n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : values)
        var += (v - out.mean) * (v - out.mean);
    var /= std::max(1.0, n - 1.0);
    out.sem = std::sqrt(var / n);
    return out;
}

PathSet draw_channel(const ExperimentConfig &cfg, const LinkSetup &setup, Rng &rng)
{
    PathSet ps = sample_pathset(rng, cfg.l, cfg.pathloss, cfg.avg_gain_power, cfg.domain);
    if (cfg.on_grid)
        ps = snap_to_grid(ps, setup.grid, setup.bs_geom.spacing);
    return ps;
}

void write_manifest(const ExperimentConfig &cfg, const std::vector<std::string> &outputs,
                    double wall_seconds, const std::string &path)
{
    nlohmann::json j;
    j["schema"] = "mmwsim.manifest.v1";
    j["version"] = "0.1.0";
    j["experiment"] = to_string(cfg.experiment);
    j["seed"] = cfg.seed;
    j["wall_time_s"] = wall_seconds;
    j["config"] = flatten(cfg);
    j["outputs"] = outputs;
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

std::vector<std::string> run_design_codebook(const ExperimentConfig &cfg, const std::string &dir)
{
    const LinkSetup setup = make_link_setup(cfg);
    if (setup.mode == CodebookMode::Ideal)
        throw std::invalid_argument("design-codebook needs a physical codebook mode");

    const std::string bs_path = dir + "/codebook_bs.json";
    const std::string ms_path = dir + "/codebook_ms.json";
    save_codebook(setup.cb_bs, bs_path);
    save_codebook(setup.cb_ms, ms_path);

    CsvTable table("mmwsim.codebook_gains.v1",
                   {"level", "c_bs", "c_ms", "nominal_gain", "beta", "forward_gain_at_beta"});
    for (const auto &row : analyze_codebooks(setup.cb_bs, setup.cb_ms, setup.dict_bs, setup.dict_ms))
        table.add_row({static_cast<double>(row.level), row.c_bs, row.c_ms, row.nominal_gain,
                       std::isinf(row.beta) ? -1.0 : row.beta, row.forward_at_beta});
    const std::string gains_path = dir + "/codebook_gains.csv";
    table.write(gains_path);
    return {bs_path, ms_path, gains_path};
}

std::vector<std::string> run_single_path_error(const ExperimentConfig &cfg, const std::string &dir)
{
    ExperimentConfig point_cfg = cfg;
    point_cfg.l = 1;
    point_cfg.l_d = 1;
    const LinkSetup setup = make_link_setup(point_cfg);
    const auto gains = setup.stage_gains();
    const int k_eff = setup.layout.branching;

    std::vector<double> gf(gains.begin(), gains.end());
    std::vector<double> betas(gains.size(), std::numeric_limits<double>::infinity());
    if (setup.mode != CodebookMode::Ideal)
    {
        const auto summary = analyze_codebooks(setup.cb_bs, setup.cb_ms, setup.dict_bs, setup.dict_ms);
        for (std::size_t s = 0; s < summary.size(); ++s)
        {
            betas[s] = summary[s].beta;
            gf[s] = summary[s].forward_at_beta;
        }
    }

    CsvTable table("mmwsim.single_path_error.v1",
                   {"snr_db", "gamma_bar", "trials", "err", "binomial_sigma", "bound", "delta"});
    for (double snr_db : cfg.snr_db)
    {
        const double gamma_bar = std::pow(10.0, snr_db / 10.0);
        const double sigma2 = cfg.avg_gain_power / (cfg.pathloss * gamma_bar);
        const auto [gamma_budget, powers] =
            allocate_power_target_error(cfg.delta, gamma_bar, k_eff, gains);
        (void)gamma_budget;
        const double bound = misdetection_bound(powers, gf, betas, gamma_bar, k_eff);

        std::vector<int> exact(static_cast<std::size_t>(cfg.trials));
        parallel_for(cfg.trials, cfg.threads, [&](long long t) {
            Rng rng = Rng::for_trial(cfg.seed, static_cast<std::uint64_t>(t) * 1000003ULL +
                                                   static_cast<std::uint64_t>(snr_db * 1000.0 + 1e6));
            const PathSet ps = sample_pathset_on_grid(rng, 1, cfg.pathloss, cfg.avg_gain_power,
                                                      setup.grid, setup.bs_geom.spacing,
                                                      cfg.domain);
            auto backend = setup.make_backend(ps, sigma2, rng);
            const auto [est, steps] = estimate_single_path(*backend, powers,
                                                           {.parallel_rf = cfg.parallel_rf});
            (void)steps;
            const int true_u = grid_cell_of(setup.grid, setup.bs_geom.spacing, ps.paths[0].aod);
            const int true_v = grid_cell_of(setup.grid, setup.ms_geom.spacing, ps.paths[0].aoa);
            exact[static_cast<std::size_t>(t)] =
                (est.aod_cell == true_u && est.aoa_cell == true_v) ? 1 : 0;
        });
        const double n_trials = static_cast<double>(cfg.trials);
        const double err = 1.0 - std::accumulate(exact.begin(), exact.end(), 0.0) / n_trials;
        const double sigma_bin = std::sqrt(std::max(cfg.delta * (1.0 - cfg.delta), 1e-12) / n_trials);
        table.add_row({snr_db, gamma_bar, n_trials, err, sigma_bin, bound, cfg.delta});
    }
    const std::string path = dir + "/single_path_error.csv";
    table.write(path);

    // Stage-by-stage trace of one run at the first sweep point, for protocol
    // debugging and overhead analysis.
    {
        const double gamma_bar = std::pow(10.0, cfg.snr_db.front() / 10.0);
        const double sigma2 = cfg.avg_gain_power / (cfg.pathloss * gamma_bar);
        const auto [gamma_budget, powers] =
            allocate_power_target_error(cfg.delta, gamma_bar, k_eff, gains);
        (void)gamma_budget;
        Rng rng = Rng::for_trial(cfg.seed, 0);
        const PathSet ps = sample_pathset_on_grid(rng, 1, cfg.pathloss, cfg.avg_gain_power,
                                                  setup.grid, setup.bs_geom.spacing, cfg.domain);
        auto backend = setup.make_backend(ps, sigma2, rng);
        std::vector<TraceRow> trace;
        EstimationOptions opts;
        opts.parallel_rf = cfg.parallel_rf;
        opts.trace = &trace;
        estimate_single_path(*backend, powers, opts);
        const std::string trace_path = dir + "/trace.csv";
        std::ofstream out(trace_path, std::ios::binary);
        out << trace_to_csv(trace);
    }
    return {path, dir + "/trace.csv"};
}

std::vector<std::string> run_spectral_efficiency(const ExperimentConfig &cfg,
                                                 const std::string &dir)
{
    const LinkSetup setup = make_link_setup(cfg);
    CsvTable table("mmwsim.spectral_efficiency.v1",
                   {"snr_db", "trials", "rate_adaptive", "sem_adaptive", "rate_exhaustive",
                    "sem_exhaustive", "rate_perfect_hybrid", "sem_perfect_hybrid",
                    "rate_unconstrained", "sem_unconstrained", "rate_analog", "sem_analog"});

    for (double snr_db : cfg.snr_db)
    {
        const double data_power = 1.0;
        const double sigma2 = data_power / std::pow(10.0, snr_db / 10.0);
        std::vector<double> r_ad(static_cast<std::size_t>(cfg.trials));
        std::vector<double> r_ex(static_cast<std::size_t>(cfg.trials));
        std::vector<double> r_ph(static_cast<std::size_t>(cfg.trials));
        std::vector<double> r_un(static_cast<std::size_t>(cfg.trials));
        std::vector<double> r_an(static_cast<std::size_t>(cfg.trials));
        parallel_for(cfg.trials, cfg.threads, [&](long long t) {
            Rng rng = Rng::for_trial(cfg.seed, static_cast<std::uint64_t>(t) * 7919ULL +
                                                   static_cast<std::uint64_t>(snr_db * 100.0 + 1e6));
            const PathSet ps = draw_channel(cfg, setup, rng);
            const CMat h = assemble_channel(ps, setup.bs_geom, setup.ms_geom);
            const auto idx = static_cast<std::size_t>(t);
            r_ad[idx] = adaptive_pipeline_rate(setup, ps, sigma2, cfg.delta, data_power, rng);
            r_ex[idx] = exhaustive_pipeline_rate(setup, ps, sigma2, cfg.delta, data_power, rng);
            r_ph[idx] = perfect_csi_hybrid_rate(setup, h, data_power, sigma2);
            r_un[idx] = perfect_csi_unconstrained_rate(setup, h, data_power, sigma2);
            r_an[idx] = analog_only_rate(setup, ps, h, data_power, sigma2);
        });
        const auto ad = mean_sem(r_ad);
        const auto ex = mean_sem(r_ex);
        const auto ph = mean_sem(r_ph);
        const auto un = mean_sem(r_un);
        const auto an = mean_sem(r_an);
        table.add_row({snr_db, static_cast<double>(cfg.trials), ad.mean, ad.sem, ex.mean, ex.sem,
                       ph.mean, ph.sem, un.mean, un.sem, an.mean, an.sem});
    }
    const std::string path = dir + "/spectral_efficiency.csv";
    table.write(path);
    return {path};
}

std::vector<std::string> run_quantization_study(const ExperimentConfig &cfg,
                                                const std::string &dir)
{
    CsvTable table("mmwsim.quantization_study.v1",
                   {"n_q", "snr_db", "trials", "rate_adaptive", "sem_adaptive",
                    "rate_unconstrained", "sem_unconstrained"});
    const double snr_db = cfg.snr_db.front();
    const double data_power = 1.0;
    const double sigma2 = data_power / std::pow(10.0, snr_db / 10.0);

    for (int n_q : cfg.nq_grid)
    {
        const LinkSetup setup = make_link_setup(cfg, n_q);
        std::vector<double> r_ad(static_cast<std::size_t>(cfg.trials));
        std::vector<double> r_un(static_cast<std::size_t>(cfg.trials));
        parallel_for(cfg.trials, cfg.threads, [&](long long t) {
            // Common random numbers across the N_Q settings.
            Rng rng = Rng::for_trial(cfg.seed, static_cast<std::uint64_t>(t));
            const PathSet ps = draw_channel(cfg, setup, rng);
            const CMat h = assemble_channel(ps, setup.bs_geom, setup.ms_geom);
            const auto idx = static_cast<std::size_t>(t);
            r_ad[idx] = adaptive_pipeline_rate(setup, ps, sigma2, cfg.delta, data_power, rng);
            r_un[idx] = perfect_csi_unconstrained_rate(setup, h, data_power, sigma2);
        });
        const auto ad = mean_sem(r_ad);
        const auto un = mean_sem(r_un);
        table.add_row({static_cast<double>(n_q), snr_db, static_cast<double>(cfg.trials), ad.mean,
                       ad.sem, un.mean, un.sem});
    }
    const std::string path = dir + "/quantization_study.csv";
    table.write(path);
    return {path};
}

std::vector<std::string> run_coverage(const ExperimentConfig &cfg, const std::string &dir)
{
    CellularSystem sys;
    sys.cell = cfg.cell;
    sys.bs_geom = {cfg.n_bs, cfg.spacing};
    sys.ms_geom = {cfg.n_ms, cfg.spacing};
    const LinkSetup setup = make_link_setup(cfg);
    if (setup.mode == CodebookMode::Ideal)
        throw std::invalid_argument("coverage needs a physical codebook mode");
    sys.dict_bs = setup.dict_bs;
    sys.dict_ms = setup.dict_ms;
    sys.cb_bs = setup.cb_bs;
    sys.cb_ms = setup.cb_ms;
    sys.cand_bs = setup.cand_bs;
    sys.cand_ms = setup.cand_ms;
    sys.paths_per_bs = cfg.l;
    sys.estimated_paths = cfg.l_d;
    sys.num_streams = cfg.num_streams();
    sys.n_rf_bs = cfg.n_rf_bs;
    sys.n_rf_ms = cfg.n_rf_ms;
    sys.avg_gain_power = cfg.avg_gain_power;
    sys.delta = cfg.delta;
    sys.domain = cfg.domain;

    CsvTable table("mmwsim.coverage.v1",
                   {"pipeline", "eta", "coverage", "ci_low", "ci_high", "trials"});
    const std::pair<CoveragePipeline, std::string> pipelines[] = {
        {CoveragePipeline::PerfectCsiHybrid, "perfect-csi-hybrid"},
        {CoveragePipeline::EstimatedHybrid, "estimated-hybrid"},
        {CoveragePipeline::AnalogOnly, "analog-only"},
    };
    for (const auto &[pipeline, name] : pipelines)
    {
        const auto points = coverage_probability(sys, cfg.eta_grid, static_cast<int>(cfg.trials),
                                                 pipeline, cfg.seed, cfg.threads);
        for (const auto &pt : points)
            table.add_row_text({name, fmt_double(pt.eta), fmt_double(pt.coverage),
                                fmt_double(pt.ci_low), fmt_double(pt.ci_high),
                                std::to_string(pt.trials)});
    }
    const std::string path = dir + "/coverage.csv";
    table.write(path);
    return {path};
}

} // namespace

RunResult run_experiment(const ExperimentConfig &cfg)
{
    validate(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    const auto start = std::chrono::steady_clock::now();

    std::vector<std::string> outputs;
    switch (cfg.experiment)
    {
    case ExperimentKind::DesignCodebook:
        outputs = run_design_codebook(cfg, cfg.out_dir);
        break;
    case ExperimentKind::SinglePathError:
        outputs = run_single_path_error(cfg, cfg.out_dir);
        break;
    case ExperimentKind::SpectralEfficiencySweep:
        outputs = run_spectral_efficiency(cfg, cfg.out_dir);
        break;
    case ExperimentKind::QuantizationStudy:
        outputs = run_quantization_study(cfg, cfg.out_dir);
        break;
    case ExperimentKind::Coverage:
        outputs = run_coverage(cfg, cfg.out_dir);
        break;
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string manifest_path = cfg.out_dir + "/manifest.json";
    write_manifest(cfg, outputs, wall, manifest_path);

    RunResult result;
    result.outputs = outputs;
    result.outputs.push_back(manifest_path);
    return result;
}

} // namespace mmw
