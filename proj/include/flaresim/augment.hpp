#pragma once

#include "flaresim/image.hpp"
#include "flaresim/rng.hpp"

#include <array>
#include <string>
#include <vector>

namespace flaresim::augment {

// One sampled set of augmentation parameters. Supports:
//   gamma ~ U(1.8, 2.2)           rgb_gains ~ U(0.5, 1.2) per channel
//   noise_var ~ 0.01 * chi2(1)    offset ~ U(-0.02, 0.02)
//   jitter_gains ~ U(0.8, 3.0)    rotation ~ U(0, 2pi)
//   translation ~ U(-300, 300) px shear ~ U(-20deg, 20deg)
//   scale ~ U(0.8, 1.5)           blur_sigma ~ U(0.1, 3.0)
struct AugPlan {
    double gamma = 1.0;
    std::array<double, 3> rgb_gains{1.0, 1.0, 1.0};
    double noise_var = 0.0;
    double offset = 0.0;
    std::array<double, 3> jitter_gains{1.0, 1.0, 1.0};
    double rotation = 0.0;
    std::array<double, 2> translation{0.0, 0.0}; // (dx, dy) pixels
    double shear = 0.0;
    double scale = 1.0;
    double blur_sigma = 0.1;

    // Fixed point of both pipelines (blur_sigma at the bottom of its support
    // is identity within 1e-6).
    static AugPlan identity() { return AugPlan{}; }
};

// Draws every field in declared order; the plan is a pure function of the rng
// stream position.
AugPlan draw_plan(SeededRng& rng);

// out = in^gamma elementwise; samples must be >= 0.
ImageF inverse_gamma(const ImageF& img, double gamma);

// Per-channel multiplies and the scalar offset (clipped to >= 0 afterwards).
ImageF rgb_scale(const ImageF& img, const std::array<double, 3>& gains);
ImageF intensity_offset(const ImageF& img, double offset);
ImageF color_jitter(const ImageF& img, const std::array<double, 3>& gains);

// Adds i.i.d. Normal(0, var) per sample; no clipping (that happens at
// composite time).
ImageF gaussian_noise(const ImageF& img, double var, SeededRng& rng);

// Single affine map about the image center, applied scale -> shear -> rotate
// -> translate, bilinear sampling, zero fill outside the source.
ImageF affine_warp(const ImageF& img, double rotation, const std::array<double, 2>& translation,
                   double shear, double scale);

// Separable Gaussian, radius ceil(3*sigma), kernel renormalized to sum 1,
// reflect-padded boundaries.
ImageF gaussian_blur(const ImageF& img, double sigma);

// Flare order: inverse_gamma, rgb_scale, affine_warp, gaussian_blur,
// color_jitter, intensity_offset. Background order: inverse_gamma, rgb_scale,
// gaussian_noise. `trace`, when given, records each executed stage.
ImageF apply_flare_pipeline(const ImageF& img, const AugPlan& plan, SeededRng& rng,
                            std::vector<std::string>* trace = nullptr);
ImageF apply_background_pipeline(const ImageF& img, const AugPlan& plan, SeededRng& rng,
                                 std::vector<std::string>* trace = nullptr);

} // namespace flaresim::augment
