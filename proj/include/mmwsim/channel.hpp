// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#ifndef MMWSIM_CHANNEL_HPP
#define MMWSIM_CHANNEL_HPP

#include "mmwsim/arrays.hpp"
#include "mmwsim/rng.hpp"

namespace mmw {

struct PathEntry {
    double aod = 0.0; // departure azimuth at the BS, radians
    double aoa = 0.0; // arrival azimuth at the MS, radians
    cxd gain;         // complex path gain alpha
};

// Geometric channel parameters: L scatterer paths, a linear path loss rho and
// the average per-path power E[|alpha|^2].
struct PathSet {
    std::vector<PathEntry> paths;
    double pathloss = 1.0;       // rho, linear
    double avg_gain_power = 1.0; // mean |alpha|^2

    int num_paths() const { return static_cast<int>(paths.size()); }
    int strongest_path() const;
};

// True angles are drawn from [0, pi) by default; a ULA cannot separate an
// angle from its mirror, and the half range keeps grid indices unambiguous
// for the single-path error experiments. Full keeps the literal [0, 2*pi).
enum class AngleDomain { Half, Full };

double angle_domain_extent(AngleDomain domain);

PathSet sample_pathset(Rng &rng, int num_paths, double pathloss, double avg_gain_power,
                       AngleDomain domain = AngleDomain::Half);

// Same distribution but with angles drawn from grid cells (uniformly over
// the cells the domain can reach); with distinct_cells the (aod, aoa) index
// pairs are pairwise distinct. spacing ties the grid to the physical arrays.
PathSet sample_pathset_on_grid(Rng &rng, int num_paths, double pathloss, double avg_gain_power,
                               const AngleGrid &grid, double spacing,
                               AngleDomain domain = AngleDomain::Half,
                               bool distinct_cells = true);

// Snap every path angle of an existing draw onto its grid cell.
PathSet snap_to_grid(const PathSet &paths, const AngleGrid &grid, double spacing);

// H = sqrt(N_bs*N_ms/rho) * sum_l alpha_l a_ms(theta_l) a_bs(phi_l)^H,
// dimensions N_ms x N_bs.
CMat assemble_channel(const PathSet &paths, const UlaGeometry &bs, const UlaGeometry &ms);

// Average channel SNR gamma_bar = Pr / (rho * sigma^2).
double average_snr(double avg_gain_power, double pathloss, double noise_power);

} // namespace mmw

#endif
