#pragma once

#include "flaresim/complex_field.hpp"
#include "flaresim/zernike.hpp"

#include <vector>

namespace flaresim::optics {

// Amplitude transmittance in [0,1] on the pupil grid.
struct ApertureMask {
    int grid_size = 0;
    double radius_frac = 1.0;
    std::vector<double> grid;

    std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * grid_size + x; }
};

// Hard-edged disk: 1 where rho <= radius_frac (pixel centers, unit disk
// inscribed in the grid), 0 outside.
ApertureMask circular_aperture(int grid_size, double radius_frac);

// Intensity kernel; center marks the zero-shift tap.
struct Psf {
    int size = 0;
    int center_row = 0;
    int center_col = 0;
    std::vector<double> kernel;

    std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * size + x; }
    double sum() const;
};

// P = A * exp(j*phi); re = A cos phi, im = A sin phi.
ComplexField pupil(const ApertureMask& aperture, const std::vector<double>& phase);

// h = |fft2(P)|^2, center-shifted so the DC tap sits at (H/2, W/2). Not
// normalized; under the unitary FFT, sum h == sum |P|^2.
Psf psf_from_pupil(const ComplexField& p);

// Scales the kernel to unit sum. Throws on an all-zero kernel.
Psf normalize_psf(const Psf& h);

// One normalized kernel per anchor, all cropped to kernel_size.
struct PsfGrid {
    zernike::AnchorGrid anchors;
    int kernel_size = 0;
    std::vector<Psf> psfs; // row-major over the anchor lattice
};

// Per anchor: phase_map -> pupil -> psf -> center-crop to kernel_size ->
// normalize. Phase convention is exp(+j*phi) with phi in radians.
PsfGrid build_psf_grid(const ApertureMask& aperture, const zernike::ZernikeBasis& basis,
                       const zernike::CoeffField& field, int kernel_size);

// Eq-by-construction separable model of the grid: anchor PSFs ~=
// sum_i coeff_maps[i](x) * bases[i](u). Bases are the top-K left singular
// vectors of the anchor-PSF matrix; coefficient maps are bilinear
// interpolations of the per-anchor projections to full image resolution.
struct PsfBasis {
    int kernel_size = 0;
    int center_row = 0;
    int center_col = 0;
    int image_height = 0;
    int image_width = 0;
    std::vector<std::vector<double>> bases;      // K kernels, kernel_size^2 each
    std::vector<std::vector<double>> coeff_maps; // K maps, image_height*image_width each

    int count() const { return static_cast<int>(bases.size()); }
    std::size_t kidx(int y, int x) const { return static_cast<std::size_t>(y) * kernel_size + x; }
    std::size_t midx(int y, int x) const { return static_cast<std::size_t>(y) * image_width + x; }
};

PsfBasis decompose_basis(const PsfGrid& grid, int k, int image_height, int image_width);

// Per-anchor reconstruction residual (Frobenius) of the rank-K model; used by
// the Eckart-Young monotonicity checks.
double reconstruction_residual(const PsfGrid& grid, const PsfBasis& basis);

// Effective support diameter per anchor, 1 + 2 * intensity-weighted RMS
// radius about the kernel center: always >= 1.
std::vector<double> effective_kernel_sizes(const PsfGrid& grid);

} // namespace flaresim::optics
