// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: adaptive beam-training channel estimation and hybrid precoding
// for mmWave MIMO links.

#include "mmwsim/arrays.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mmw {

void validate(const UlaGeometry &geom)
{
    if (geom.num_elements < 1)
        throw std::invalid_argument("ULA needs at least one element");
    if (!(geom.spacing > 0.0))
        throw std::invalid_argument("ULA spacing must be positive");
}

CVec array_response(const UlaGeometry &geom, double angle)
{
    validate(geom);
    const int n = geom.num_elements;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    const double step = 2.0 * std::numbers::pi * geom.spacing * std::sin(angle);
    CVec a(n);
    for (int i = 0; i < n; ++i)
        a(i) = std::polar(scale, step * i);
    return a;
}

CVec steering_from_phase(const UlaGeometry &geom, double phase_step)
{
    validate(geom);
    const int n = geom.num_elements;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    CVec a(n);
    for (int i = 0; i < n; ++i)
        a(i) = std::polar(scale, phase_step * i);
    return a;
}

AngleGrid AngleGrid::uniform(int n)
{
    if (n < 1)
        throw std::invalid_argument("grid resolution must be positive");
    AngleGrid grid;
    grid.resolution = n;
    grid.angles.resize(static_cast<std::size_t>(n));
    for (int u = 0; u < n; ++u)
        grid.angles[static_cast<std::size_t>(u)] = 2.0 * std::numbers::pi * u / n;
    return grid;
}

Dictionary build_dictionary(const UlaGeometry &geom, const AngleGrid &grid)
{
    validate(geom);
    if (grid.resolution < geom.num_elements)
        throw std::invalid_argument("dictionary must be over-complete: grid resolution >= num_elements");
    Dictionary dict;
    dict.geometry = geom;
    dict.grid = grid;
    dict.matrix.resize(geom.num_elements, grid.resolution);
    for (int u = 0; u < grid.resolution; ++u)
        dict.matrix.col(u) = steering_from_phase(geom, grid.angle(u));
    return dict;
}

int grid_cell_of(const AngleGrid &grid, double spacing, double angle)
{
    const double steps = grid.resolution * spacing * std::sin(angle);
    long cell = std::lround(steps) % grid.resolution;
    if (cell < 0)
        cell += grid.resolution;
    return static_cast<int>(cell);
}

double representative_angle(const AngleGrid &grid, double spacing, int cell)
{
    double phase = grid.angle(cell);
    if (phase > std::numbers::pi)
        phase -= 2.0 * std::numbers::pi; // wrap into (-pi, pi]
    const double s = phase / (2.0 * std::numbers::pi * spacing);
    if (std::abs(s) > 1.0 + 1e-12)
        throw std::invalid_argument("grid cell lies outside the array's visible region");
    const double asin_arg = std::clamp(s, -1.0, 1.0);
    const double angle = std::asin(asin_arg);
    return angle >= 0.0 ? angle : angle + 2.0 * std::numbers::pi;
}

int visible_half_cells(int resolution)
{
    return resolution / 2 + 1;
}

} // namespace mmw
