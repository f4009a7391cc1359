// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#include "mmwsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mmw {

std::string to_string(ExperimentKind kind)
{
    switch (kind)
    {
    case ExperimentKind::DesignCodebook: return "design-codebook";
    case ExperimentKind::SinglePathError: return "single-path-error";
    case ExperimentKind::SpectralEfficiencySweep: return "spectral-efficiency-sweep";
    case ExperimentKind::QuantizationStudy: return "quantization-study";
    case ExperimentKind::Coverage: return "coverage";
    }
    return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string &name)
{
    for (auto kind : {ExperimentKind::DesignCodebook, ExperimentKind::SinglePathError,
                      ExperimentKind::SpectralEfficiencySweep, ExperimentKind::QuantizationStudy,
                      ExperimentKind::Coverage})
        if (to_string(kind) == name)
            return kind;
    throw std::invalid_argument("unknown experiment kind: " + name);
}

std::string to_string(CodebookMode mode)
{
    switch (mode)
    {
    case CodebookMode::Ideal: return "ideal";
    case CodebookMode::Unconstrained: return "unconstrained";
    case CodebookMode::Hybrid: return "hybrid";
    }
    return "unknown";
}

CodebookMode codebook_mode_from_string(const std::string &name)
{
    for (auto mode : {CodebookMode::Ideal, CodebookMode::Unconstrained, CodebookMode::Hybrid})
        if (to_string(mode) == name)
            return mode;
    throw std::invalid_argument("unknown codebook mode: " + name);
}

namespace {

std::string trim(const std::string &s)
{
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos)
        return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string &s, char sep)
{
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, sep))
        parts.push_back(trim(part));
    return parts;
}

double parse_double(const std::string &key, const std::string &value)
{
    try
    {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument("");
        return v;
    }
    catch (...)
    {
        throw std::invalid_argument("config key '" + key + "' has a non-numeric value: " + value);
    }
}

long long parse_int(const std::string &key, const std::string &value)
{
    const double v = parse_double(key, value);
    if (v != std::floor(v))
        throw std::invalid_argument("config key '" + key + "' must be an integer");
    return static_cast<long long>(v);
}

std::vector<double> parse_double_list(const std::string &key, const std::string &value)
{
    std::vector<double> out;
    for (const auto &part : split(value, ','))
        if (!part.empty())
            out.push_back(parse_double(key, part));
    if (out.empty())
        throw std::invalid_argument("config key '" + key + "' needs at least one value");
    return out;
}

std::string join(const std::vector<double> &values)
{
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        if (i)
            out << ',';
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.12g", values[i]);
        out << buf;
    }
    return out.str();
}

std::string join_int(const std::vector<int> &values)
{
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        if (i)
            out << ',';
        out << values[i];
    }
    return out.str();
}

} // namespace

std::map<std::string, std::string> flatten(const ExperimentConfig &c)
{
    std::map<std::string, std::string> m;
    auto put = [&m](const std::string &key, auto value) {
        std::ostringstream out;
        out << value;
        m[key] = out.str();
    };
    put("run.experiment", to_string(c.experiment));
    put("system.n_bs", c.n_bs);
    put("system.n_ms", c.n_ms);
    put("system.n_rf_bs", c.n_rf_bs);
    put("system.n_rf_ms", c.n_rf_ms);
    put("system.n_s", c.n_s);
    put("system.n_q", c.n_q);
    put("system.spacing", c.spacing);
    put("channel.l", c.l);
    put("channel.l_d", c.l_d);
    put("channel.avg_gain_power", c.avg_gain_power);
    put("channel.pathloss", c.pathloss);
    m["channel.angle_domain"] = c.domain == AngleDomain::Half ? "half" : "full";
    m["channel.on_grid"] = c.on_grid ? "true" : "false";
    put("estimation.n", c.n);
    put("estimation.k", c.k);
    put("estimation.delta", c.delta);
    m["estimation.codebook"] = to_string(c.codebook);
    put("estimation.parallel_rf", c.parallel_rf);
    m["estimation.snr_db"] = join(c.snr_db);
    m["sweep.nq_grid"] = join_int(c.nq_grid);
    m["sweep.eta_grid"] = join(c.eta_grid);
    put("cellular.cell_radius", c.cell.cell_radius);
    put("cellular.ppp_density", c.cell.ppp_density);
    put("cellular.window_radius", c.cell.window_radius);
    put("cellular.pathloss_exponent", c.cell.pathloss_exponent);
    put("cellular.carrier_hz", c.cell.carrier_hz);
    put("cellular.bandwidth_hz", c.cell.bandwidth_hz);
    put("cellular.noise_figure_db", c.cell.noise_figure_db);
    put("cellular.tx_power", c.cell.tx_power);
    put("run.trials", c.trials);
    put("run.seed", c.seed);
    m["run.out"] = c.out_dir;
    put("run.threads", c.threads);
    return m;
}

ExperimentConfig parse_config_text(const std::string &text)
{
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos)
            line = line.substr(0, comment);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[')
        {
            if (line.back() != ']')
                throw std::invalid_argument("malformed section header at line " +
                                            std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("expected key = value at line " + std::to_string(line_no));
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "run.experiment")
            cfg.experiment = experiment_kind_from_string(value);
        else if (key == "system.n_bs")
            cfg.n_bs = static_cast<int>(parse_int(key, value));
        else if (key == "system.n_ms")
            cfg.n_ms = static_cast<int>(parse_int(key, value));
        else if (key == "system.n_rf_bs")
            cfg.n_rf_bs = static_cast<int>(parse_int(key, value));
        else if (key == "system.n_rf_ms")
            cfg.n_rf_ms = static_cast<int>(parse_int(key, value));
        else if (key == "system.n_s")
            cfg.n_s = static_cast<int>(parse_int(key, value));
        else if (key == "system.n_q")
            cfg.n_q = static_cast<int>(parse_int(key, value));
        else if (key == "system.spacing")
            cfg.spacing = parse_double(key, value);
        else if (key == "channel.l")
            cfg.l = static_cast<int>(parse_int(key, value));
        else if (key == "channel.l_d")
            cfg.l_d = static_cast<int>(parse_int(key, value));
        else if (key == "channel.avg_gain_power")
            cfg.avg_gain_power = parse_double(key, value);
        else if (key == "channel.pathloss")
            cfg.pathloss = parse_double(key, value);
        else if (key == "channel.angle_domain")
        {
            if (value == "half")
                cfg.domain = AngleDomain::Half;
            else if (value == "full")
                cfg.domain = AngleDomain::Full;
            else
                throw std::invalid_argument("channel.angle_domain must be 'half' or 'full'");
        }
        else if (key == "channel.on_grid")
            cfg.on_grid = value == "true" || value == "1";
        else if (key == "estimation.n")
            cfg.n = static_cast<int>(parse_int(key, value));
        else if (key == "estimation.k")
            cfg.k = static_cast<int>(parse_int(key, value));
        else if (key == "estimation.delta")
            cfg.delta = parse_double(key, value);
        else if (key == "estimation.codebook")
            cfg.codebook = codebook_mode_from_string(value);
        else if (key == "estimation.parallel_rf")
            cfg.parallel_rf = static_cast<int>(parse_int(key, value));
        else if (key == "estimation.snr_db")
            cfg.snr_db = parse_double_list(key, value);
        else if (key == "sweep.nq_grid")
        {
            cfg.nq_grid.clear();
            for (double v : parse_double_list(key, value))
                cfg.nq_grid.push_back(static_cast<int>(v));
        }
        else if (key == "sweep.eta_grid")
            cfg.eta_grid = parse_double_list(key, value);
        else if (key == "cellular.cell_radius")
            cfg.cell.cell_radius = parse_double(key, value);
        else if (key == "cellular.ppp_density")
            cfg.cell.ppp_density = parse_double(key, value);
        else if (key == "cellular.window_radius")
            cfg.cell.window_radius = parse_double(key, value);
        else if (key == "cellular.pathloss_exponent")
            cfg.cell.pathloss_exponent = parse_double(key, value);
        else if (key == "cellular.carrier_hz")
            cfg.cell.carrier_hz = parse_double(key, value);
        else if (key == "cellular.bandwidth_hz")
            cfg.cell.bandwidth_hz = parse_double(key, value);
        else if (key == "cellular.noise_figure_db")
            cfg.cell.noise_figure_db = parse_double(key, value);
        else if (key == "cellular.tx_power")
            cfg.cell.tx_power = parse_double(key, value);
        else if (key == "run.trials")
            cfg.trials = parse_int(key, value);
        else if (key == "run.seed")
            cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
        else if (key == "run.out")
            cfg.out_dir = value;
        else if (key == "run.threads")
            cfg.threads = static_cast<int>(parse_int(key, value));
        else
            throw std::invalid_argument("unknown config key: " + key);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void validate(const ExperimentConfig &c)
{
    if (c.n_bs < 1 || c.n_ms < 1)
        throw std::invalid_argument("antenna counts must be positive");
    if (!(c.spacing > 0.0))
        throw std::invalid_argument("element spacing must be positive");
    if (c.l < 1 || c.l_d < 1)
        throw std::invalid_argument("path counts must be positive");
    if (c.k < 2)
        throw std::invalid_argument("K must be at least 2");

    // N must tile into L_d * K^S sectors for an integer number of stages.
    long long span = c.l_d;
    while (span < c.n)
        span *= c.k;
    if (span != c.n)
        throw std::invalid_argument(
            "estimation.n violates the divisibility rule: N must equal L_d * K^S "
            "(got N=" + std::to_string(c.n) + ", K=" + std::to_string(c.k) +
            ", L_d=" + std::to_string(c.l_d) + ")");

    if (c.n < c.n_bs || c.n < c.n_ms)
        throw std::invalid_argument("grid must be over-complete: N >= max(N_bs, N_ms)");

    const int ns = c.num_streams();
    if (ns > c.n_rf_bs || c.n_rf_bs > c.n_bs)
        throw std::invalid_argument("stream/chain ordering violated at the BS: N_s <= N_rf <= N_bs");
    if (ns > c.n_rf_ms || c.n_rf_ms > c.n_ms)
        throw std::invalid_argument("stream/chain ordering violated at the MS: N_s <= N_rf <= N_ms");

    if (!(c.delta > 0.0) || !(c.delta < 1.0))
        throw std::invalid_argument("delta must lie in (0, 1)");
    if (c.n_q < 1 || c.n_q > 16)
        throw std::invalid_argument("n_q must be between 1 and 16");
    if (c.trials < 1)
        throw std::invalid_argument("need at least one trial");
    if (c.parallel_rf < 1)
        throw std::invalid_argument("parallel_rf must be at least 1");
    if (c.experiment == ExperimentKind::Coverage)
        c.cell.validate();
}

} // namespace mmw
