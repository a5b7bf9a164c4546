#pragma once

#include "flaresim/rng.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace flaresim::zernike {

// Noll index j >= 1 -> (radial order n, signed azimuthal order m). Even j
// carries the cosine (m >= 0) member of each pair, odd j the sine (m < 0).
std::pair<int, int> noll_to_nm(int j);

// Noll-normalized mode j at polar point (rho, theta), rho in [0,1]:
// sqrt(n+1)*R_n^0 for m = 0, sqrt(2(n+1))*R_n^|m|*cos/sin(|m|*theta) otherwise.
// Unit RMS over the disk, so coefficients are comparable across modes.
double eval(int j, double rho, double theta);

// Modes evaluated at pixel centers of a square grid with the unit disk
// inscribed. values[j-1] holds mode j; samples outside the disk are zero.
struct ZernikeBasis {
    int grid_size = 0;
    int n_modes = 0;
    std::vector<std::vector<double>> values;
    std::vector<std::uint8_t> disk_mask;

    std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * grid_size + x; }
};

ZernikeBasis build_basis(int grid_size, int n_modes);

// Per-mode aberration amplitudes in radians of phase.
struct ZernikeCoeffs {
    std::vector<double> a;
};

// phi = sum_i a_i * Z_i on the basis grid; zero outside the disk.
std::vector<double> phase_map(const ZernikeBasis& basis, const ZernikeCoeffs& coeffs);

// One anchor position in image coordinates (x = column, y = row).
struct Anchor {
    double x = 0.0;
    double y = 0.0;
};

// Row-major lattice of anchor positions covering an image.
struct AnchorGrid {
    int rows = 0;
    int cols = 0;
    int image_height = 0;
    int image_width = 0;
    std::vector<Anchor> positions;

    const Anchor& at(int r, int c) const { return positions[static_cast<std::size_t>(r) * cols + c]; }
    int count() const { return rows * cols; }
};

// Uniform lattice including the image corners; a single row/column collapses
// to the image center line.
AnchorGrid uniform_anchors(int rows, int cols, int image_height, int image_width);

// Stochastic aberration strength: a_j ~ Normal(0, (base_sigma * j^-decay_alpha)^2).
struct TurbulenceConfig {
    int n_modes = 15;
    double base_sigma = 1.0;
    double decay_alpha = 1.0;
    bool skip_piston = true;
};

// Per-anchor coefficients over a lattice.
struct CoeffField {
    AnchorGrid anchors;
    std::vector<ZernikeCoeffs> coeffs; // one per anchor, row-major
};

// Draws independent coefficients per anchor and mode. The piston draw always
// consumes the stream and is zeroed afterwards when skip_piston is set, so
// the flag does not shift later draws.
CoeffField sample_coeff_field(SeededRng& rng, const TurbulenceConfig& cfg, const AnchorGrid& anchors);

} // namespace flaresim::zernike
