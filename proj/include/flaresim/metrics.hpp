#pragma once

#include "flaresim/image.hpp"

#include <limits>
#include <optional>

namespace flaresim::metrics {

// Soft region-of-interest map; a pixel participates when grid >= threshold.
struct RegionMask {
    enum class Kind { Glare, Streak, Full };

    int height = 0;
    int width = 0;
    Kind kind = Kind::Full;
    std::vector<double> grid;

    static RegionMask full(int h, int w) {
        RegionMask m;
        m.height = h;
        m.width = w;
        m.kind = Kind::Full;
        m.grid.assign(static_cast<std::size_t>(h) * w, 1.0);
        return m;
    }
    double at(int y, int x) const { return grid[static_cast<std::size_t>(y) * width + x]; }
};

// Identical images produce this distinguished marker instead of a number.
constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();
inline bool psnr_is_infinite(double v) { return std::isinf(v); }

// 10*log10(peak^2 / MSE) over all samples.
double psnr(const ImageF& a, const ImageF& b, double peak = 1.0);

// PSNR restricted to pixels with mask >= thresh; with a full mask this is
// bit-identical to psnr (same accumulation order).
double masked_psnr(const ImageF& a, const ImageF& b, const RegionMask& mask, double thresh = 0.5,
                   double peak = 1.0);

// Mean local SSIM, 11x11 Gaussian window sigma 1.5, K1 = 0.01, K2 = 0.03,
// dynamic range = peak. RGB images are converted to gray by channel mean.
// Windows must fit inside the image.
double ssim(const ImageF& a, const ImageF& b, double peak = 1.0);

// Mean absolute error and its subgradient sign(pred - gt)/count (0 at ties).
double l1_loss(const ImageF& pred, const ImageF& gt);
ImageF grad_l1(const ImageF& pred, const ImageF& gt);

// High-frequency loss: 0.5*mean|lap(pred) - lap(gt)| + 0.5*mean|sob(pred) -
// sob(gt)| with the 4-neighbour Laplacian and the two stacked 3x3 Sobel
// responses, reflect padding. The gradient is the exact adjoint (kernel
// scatter plus reflect-pad fold) applied to the sign maps.
double hf_loss(const ImageF& pred, const ImageF& gt);
ImageF grad_hf(const ImageF& pred, const ImageF& gt);

// L1 between (input - pred_scene) and gt_flare over masked pixels: how well
// the removed residual explains the injected flare.
double recon_loss(const ImageF& pred_scene, const ImageF& input_flare_img, const ImageF& gt_flare,
                  const RegionMask& mask, double thresh = 0.5);

struct LossWeights {
    double l1 = 0.5;
    double vgg = 0.5;
    double rec = 1.0;
    double hf = 1.0;
};

struct LossParts {
    double l1 = 0.0;
    std::optional<double> vgg; // absent -> contributes 0, flagged in the result
    double rec = 0.0;
    double hf = 0.0;
};

struct TotalLoss {
    double value = 0.0;
    bool vgg_missing = false;
};

// Weighted sum of the parts; component values must be non-negative.
TotalLoss total_loss(const LossParts& parts, const LossWeights& w);

} // namespace flaresim::metrics
