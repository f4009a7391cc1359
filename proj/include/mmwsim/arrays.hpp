// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#ifndef MMWSIM_ARRAYS_HPP
#define MMWSIM_ARRAYS_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace mmw {

using cxd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

// Uniform linear array: element count plus spacing as a fraction of the
// carrier wavelength (d/lambda).
struct UlaGeometry {
    int num_elements = 1;
    double spacing = 0.5;
};

void validate(const UlaGeometry &geom);

// Unit-norm ULA response: entry n is exp(j*2*pi*spacing*n*sin(angle))/sqrt(N).
CVec array_response(const UlaGeometry &geom, double angle);

// Unit-norm phase ramp with per-element step psi; equals array_response at
// the physical angle asin(psi / (2 pi spacing)) when that angle exists.
CVec steering_from_phase(const UlaGeometry &geom, double phase_step);

// Uniform grid of N spatial phases psi_u = 2*pi*u/N, u = 0..N-1. A ULA only
// observes a direction through its per-element phase step 2*pi*spacing*sin(phi),
// so the directional grid is taken uniform in that phase: mirrored physical
// angles (phi and pi - phi) share one cell instead of splitting into two
// indistinguishable ones.
struct AngleGrid {
    int resolution = 0;
    std::vector<double> angles;

    static AngleGrid uniform(int n);
    double angle(int index) const { return angles.at(static_cast<std::size_t>(index)); }
};

// Over-complete directional dictionary: column u has the per-element phase
// step psi_u, i.e. entry n is exp(j*n*psi_u)/sqrt(N). The columns form a
// tight frame: A A^H = (N/num_elements) I.
struct Dictionary {
    UlaGeometry geometry;
    AngleGrid grid;
    CMat matrix; // num_elements x resolution

    int grid_size() const { return grid.resolution; }
};

Dictionary build_dictionary(const UlaGeometry &geom, const AngleGrid &grid);

// Grid cell whose phase step is nearest to that of a physical angle.
int grid_cell_of(const AngleGrid &grid, double spacing, double angle);

// A physical angle that excites exactly the given grid cell (the inverse of
// grid_cell_of up to the mirror class). Throws if the cell's phase lies
// outside the array's visible region (possible for spacing < 1/2).
double representative_angle(const AngleGrid &grid, double spacing, int cell);

// Number of leading grid cells with non-negative sines; angles drawn from
// [0, pi) can only land in cells 0..visible-1.
int visible_half_cells(int resolution);

} // namespace mmw

#endif
