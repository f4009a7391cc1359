// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#include "mmwsim/experiments.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mmw;

namespace {

std::string slurp(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ExperimentConfig tiny_error_config(const std::string &out)
{
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::SinglePathError;
    cfg.n_bs = 16;
    cfg.n_ms = 16;
    cfg.n_rf_bs = 4;
    cfg.n_rf_ms = 4;
    cfg.n = 16;
    cfg.k = 2;
    cfg.l = 1;
    cfg.l_d = 1;
    cfg.codebook = CodebookMode::Ideal;
    cfg.snr_db = {0.0};
    cfg.trials = 300;
    cfg.seed = 11;
    cfg.threads = 2;
    cfg.out_dir = out;
    return cfg;
}

} // namespace

TEST_CASE("config parsing: sections, defaults and rejects")
{
    const std::string text = R"(
# point-to-point defaults
[run]
experiment = single-path-error
trials = 123
seed = 99

[system]
n_bs = 32
n_ms = 16
n_rf_bs = 6
n_rf_ms = 4

[estimation]
n = 32
k = 2
codebook = ideal
snr_db = -5, 0, 5
)";
    const ExperimentConfig cfg = parse_config_text(text);
    CHECK(cfg.experiment == ExperimentKind::SinglePathError);
    CHECK(cfg.trials == 123);
    CHECK(cfg.seed == 99);
    CHECK(cfg.n_bs == 32);
    CHECK(cfg.n == 32);
    CHECK(cfg.snr_db == std::vector<double>{-5.0, 0.0, 5.0});
    CHECK(cfg.n_q == 7); // untouched default

    CHECK_THROWS_AS(parse_config_text("[estimation]\nnn = 3\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[estimation]\nn = abc\n"), std::invalid_argument);
    CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("validation names the divisibility rule")
{
    ExperimentConfig cfg = tiny_error_config("unused");
    cfg.n = 60;
    cfg.n_bs = 16;
    try
    {
        validate(cfg);
        FAIL("expected a validation error");
    }
    catch (const std::invalid_argument &e)
    {
        CHECK(std::string(e.what()).find("N must equal L_d * K^S") != std::string::npos);
    }

    // Stream/chain ordering.
    ExperimentConfig bad = tiny_error_config("unused");
    bad.n_s = 8;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);

    // Over-completeness.
    ExperimentConfig small = tiny_error_config("unused");
    small.n = 8;
    small.k = 2;
    CHECK_THROWS_AS(validate(small), std::invalid_argument);
}

TEST_CASE("experiment reruns are byte-identical")
{
    const std::string dir_a = "test_out/rerun_a";
    const std::string dir_b = "test_out/rerun_b";
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);

    ExperimentConfig cfg = tiny_error_config(dir_a);
    run_experiment(cfg);
    cfg.out_dir = dir_b;
    cfg.threads = 4; // thread count must not change the bytes
    run_experiment(cfg);

    CHECK(slurp(dir_a + "/single_path_error.csv") == slurp(dir_b + "/single_path_error.csv"));
}

TEST_CASE("csv output is finite, schema-tagged and manifest-complete")
{
    const std::string dir = "test_out/schema";
    std::filesystem::remove_all(dir);
    run_experiment(tiny_error_config(dir));

    const std::string csv = slurp(dir + "/single_path_error.csv");
    CHECK(csv.rfind("# schema=mmwsim.single_path_error.v1", 0) == 0);
    CHECK(csv.find("nan") == std::string::npos);
    CHECK(csv.find("inf") == std::string::npos);

    const std::string manifest = slurp(dir + "/manifest.json");
    CHECK(manifest.find("\"schema\": \"mmwsim.manifest.v1\"") != std::string::npos);
    CHECK(manifest.find("\"run.seed\": \"11\"") != std::string::npos);
    CHECK(manifest.find("single_path_error.csv") != std::string::npos);
}

TEST_CASE("design-codebook experiment writes a loadable codebook")
{
    const std::string dir = "test_out/design";
    std::filesystem::remove_all(dir);
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::DesignCodebook;
    cfg.n_bs = 16;
    cfg.n_ms = 8;
    cfg.n_rf_bs = 4;
    cfg.n_rf_ms = 3;
    cfg.n = 16;
    cfg.k = 2;
    cfg.l_d = 1;
    cfg.n_s = 1;
    cfg.out_dir = dir;
    run_experiment(cfg);

    const HierarchicalCodebook cb = load_codebook(dir + "/codebook_bs.json");
    CHECK(cb.layout.grid_n == 16);
    CHECK(cb.layout.num_levels == 4);
    const std::string gains = slurp(dir + "/codebook_gains.csv");
    CHECK(gains.find("# schema=mmwsim.codebook_gains.v1") == 0);
}

TEST_CASE("tiny spectral-efficiency sweep runs end to end")
{
    const std::string dir = "test_out/sweep";
    std::filesystem::remove_all(dir);
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::SpectralEfficiencySweep;
    cfg.n_bs = 16;
    cfg.n_ms = 8;
    cfg.n_rf_bs = 4;
    cfg.n_rf_ms = 3;
    cfg.n = 16;
    cfg.k = 2;
    cfg.l = 2;
    cfg.l_d = 2;
    cfg.codebook = CodebookMode::Hybrid;
    cfg.snr_db = {0.0};
    cfg.trials = 20;
    cfg.threads = 2;
    cfg.out_dir = dir;
    run_experiment(cfg);
    const std::string csv = slurp(dir + "/spectral_efficiency.csv");
    CHECK(csv.find("rate_adaptive") != std::string::npos);
    // Header plus exactly one data row.
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
