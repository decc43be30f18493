#pragma once

#include <array>
#include <cstddef>
#include <vector>

// Uniform tensor grids and composite Simpson quadrature.  Grids keep
// count == 1 (mod 4) per axis so that the stride-2 subsample used for
// Richardson error estimates is itself a valid Simpson grid.

namespace logconc {

// Tolerances shared across modules.
inline constexpr double kFloorRel = 1e-15;        // relative positivity floor
inline constexpr double kMassTol = 1e-8;          // unit-mass contract window
inline constexpr double kTruncTol = 1e-10;        // allowed truncation deficit
inline constexpr double kLogConcavityTol = 1e-9;  // midpoint multiplicative slack

struct GridAxis {
    double origin = 0.0;
    double spacing = 0.0;
    std::size_t count = 0;

    double x(std::size_t i) const { return origin + spacing * double(i); }
    double upper() const { return x(count - 1); }
};

/// Density samples on a uniform 1D or 2D grid, row-major in x.
class GridDensity {
public:
    int dim = 1;
    std::array<GridAxis, 2> ax{};     // ax[1] unused when dim == 1
    std::vector<double> v;
    double truncation_deficit = 0.0;  // estimated mass outside the grid

    std::size_t size() const { return v.size(); }
    std::size_t ny() const { return dim == 2 ? ax[1].count : 1; }

    double at(std::size_t ix, std::size_t iy = 0) const { return v[ix * ny() + iy]; }
    double& at(std::size_t ix, std::size_t iy = 0) { return v[ix * ny() + iy]; }

    double max_value() const;
    double mass() const;       // Simpson quadrature of the samples
    void normalize();          // rescale so mass() == 1
    double mean(int axis) const;
    double variance(int axis) const;
    void recentre();           // shift origins so every axis mean is zero

    /// Same density restricted to every other grid point per axis.
    GridDensity subsampled() const;
};

struct ValueErr {
    double value = 0.0;
    double error = 0.0;
};

/// Composite Simpson weights for one axis, including the h/3 factor.
std::vector<double> simpson_weights(const GridAxis& axis);

/// Simpson integral of integrand samples laid out like g's values.
double integrate(const GridDensity& g, const std::vector<double>& integrand);

/// Simpson integral on the stride-2 subsample of the same samples.
double integrate_subsampled(const GridDensity& g, const std::vector<double>& integrand);

/// Integral with Richardson error estimate |S_h - S_2h| / 15.
ValueErr integrate_with_error(const GridDensity& g, const std::vector<double>& integrand);

/// Trapezoid integral (used for L1 distances, where Simpson's order is lost).
double integrate_trapezoid(const GridDensity& g, const std::vector<double>& integrand);

/// Round a point count up so that count == 1 (mod 4) and count >= 5.
std::size_t align_count(std::size_t count);

} // namespace logconc
