// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#include "mmwsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace mmw {

int PathSet::strongest_path() const
{
    if (paths.empty())
        throw std::invalid_argument("empty path set");
    int best = 0;
    for (int i = 1; i < num_paths(); ++i)
        if (std::norm(paths[static_cast<std::size_t>(i)].gain) >
            std::norm(paths[static_cast<std::size_t>(best)].gain))
            best = i;
    return best;
}

double angle_domain_extent(AngleDomain domain)
{
    return domain == AngleDomain::Half ? std::numbers::pi : 2.0 * std::numbers::pi;
}

static void check_pathset_args(int num_paths, double pathloss, double avg_gain_power)
{
    if (num_paths < 1)
        throw std::invalid_argument("need at least one path");
    if (!(pathloss > 0.0) || !std::isfinite(pathloss))
        throw std::invalid_argument("pathloss must be finite and positive");
    if (!(avg_gain_power > 0.0))
        throw std::invalid_argument("average gain power must be positive");
}

PathSet sample_pathset(Rng &rng, int num_paths, double pathloss, double avg_gain_power,
                       AngleDomain domain)
{
    check_pathset_args(num_paths, pathloss, avg_gain_power);
    PathSet ps;
    ps.pathloss = pathloss;
    ps.avg_gain_power = avg_gain_power;
    const double extent = angle_domain_extent(domain);
    ps.paths.resize(static_cast<std::size_t>(num_paths));
    for (auto &p : ps.paths)
    {
        p.aod = rng.uniform(0.0, extent);
        p.aoa = rng.uniform(0.0, extent);
        p.gain = rng.cgauss(avg_gain_power);
    }
    return ps;
}

PathSet sample_pathset_on_grid(Rng &rng, int num_paths, double pathloss, double avg_gain_power,
                               const AngleGrid &grid, double spacing, AngleDomain domain,
                               bool distinct_cells)
{
    check_pathset_args(num_paths, pathloss, avg_gain_power);
    const int cells = domain == AngleDomain::Half ? visible_half_cells(grid.resolution)
                                                  : grid.resolution;
    if (distinct_cells && static_cast<long long>(cells) * cells < num_paths)
        throw std::invalid_argument("grid too small for distinct path cells");

    PathSet ps;
    ps.pathloss = pathloss;
    ps.avg_gain_power = avg_gain_power;
    std::set<std::pair<int, int>> used;
    while (ps.num_paths() < num_paths)
    {
        const int u = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(cells)));
        const int v = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(cells)));
        if (distinct_cells && !used.insert({u, v}).second)
            continue;
        PathEntry p;
        p.aod = representative_angle(grid, spacing, u);
        p.aoa = representative_angle(grid, spacing, v);
        p.gain = rng.cgauss(avg_gain_power);
        ps.paths.push_back(p);
    }
    return ps;
}

PathSet snap_to_grid(const PathSet &paths, const AngleGrid &grid, double spacing)
{
    PathSet snapped = paths;
    for (auto &p : snapped.paths)
    {
        p.aod = representative_angle(grid, spacing, grid_cell_of(grid, spacing, p.aod));
        p.aoa = representative_angle(grid, spacing, grid_cell_of(grid, spacing, p.aoa));
    }
    return snapped;
}

CMat assemble_channel(const PathSet &paths, const UlaGeometry &bs, const UlaGeometry &ms)
{
    validate(bs);
    validate(ms);
    if (paths.paths.empty())
        throw std::invalid_argument("empty path set");
    const double scale = std::sqrt(static_cast<double>(bs.num_elements) * ms.num_elements / paths.pathloss);
    CMat h = CMat::Zero(ms.num_elements, bs.num_elements);
    for (const auto &p : paths.paths)
        h.noalias() += (scale * p.gain) * (array_response(ms, p.aoa) * array_response(bs, p.aod).adjoint());
    return h;
}

double average_snr(double avg_gain_power, double pathloss, double noise_power)
{
    if (!(avg_gain_power > 0.0) || !(pathloss > 0.0) || !(noise_power > 0.0))
        throw std::invalid_argument("average_snr needs positive inputs");
    return avg_gain_power / (pathloss * noise_power);
}

} // namespace mmw
