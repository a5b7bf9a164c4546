#include "flaresim/augment.hpp"

#include <cmath>
#include <stdexcept>

namespace flaresim::augment {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kDeg = kTwoPi / 360.0;

// reflect-101 index fold (no edge duplication), valid for any i.
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

void require_rgb(const ImageF& img, const char* op) {
    if (img.channels != 3)
        throw std::invalid_argument(std::string(op) + ": 3-channel image required");
}

} // namespace

AugPlan draw_plan(SeededRng& rng) {
    AugPlan p;
    p.gamma = rng.uniform(1.8, 2.2);
    for (auto& g : p.rgb_gains) g = rng.uniform(0.5, 1.2);
    const double chi = rng.normal();
    p.noise_var = 0.01 * chi * chi;
    p.offset = rng.uniform(-0.02, 0.02);
    for (auto& g : p.jitter_gains) g = rng.uniform(0.8, 3.0);
    p.rotation = rng.uniform(0.0, kTwoPi);
    for (auto& t : p.translation) t = rng.uniform(-300.0, 300.0);
    p.shear = rng.uniform(-20.0 * kDeg, 20.0 * kDeg);
    p.scale = rng.uniform(0.8, 1.5);
    p.blur_sigma = rng.uniform(0.1, 3.0);
    return p;
}

ImageF inverse_gamma(const ImageF& img, double gamma) {
    ImageF out = img;
    if (gamma == 1.0) return out;
    for (double& v : out.data) {
        if (v < 0.0) throw std::invalid_argument("inverse_gamma: negative sample");
        v = std::pow(v, gamma);
    }
    return out;
}

ImageF rgb_scale(const ImageF& img, const std::array<double, 3>& gains) {
    require_rgb(img, "rgb_scale");
    ImageF out = img;
    const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < plane; ++i) out.data[c * plane + i] *= gains[static_cast<std::size_t>(c)];
    return out;
}

ImageF intensity_offset(const ImageF& img, double offset) {
    require_rgb(img, "intensity_offset");
    ImageF out = img;
    for (double& v : out.data) {
        v += offset;
        if (v < 0.0) v = 0.0;
    }
    return out;
}

ImageF color_jitter(const ImageF& img, const std::array<double, 3>& gains) {
    require_rgb(img, "color_jitter");
    return rgb_scale(img, gains);
}

ImageF gaussian_noise(const ImageF& img, double var, SeededRng& rng) {
    if (var < 0.0) throw std::invalid_argument("gaussian_noise: variance must be >= 0");
    ImageF out = img;
    if (var == 0.0) return out;
    const double sigma = std::sqrt(var);
    for (double& v : out.data) v += rng.normal(0.0, sigma);
    return out;
}

ImageF affine_warp(const ImageF& img, double rotation, const std::array<double, 2>& translation,
                   double shear, double scale) {
    if (!std::isfinite(rotation) || !std::isfinite(shear) || !std::isfinite(scale) ||
        !std::isfinite(translation[0]) || !std::isfinite(translation[1]))
        throw std::invalid_argument("affine_warp: non-finite parameters");

    // forward map about the center: v' = R * Sh * S * v, then translate
    const double cs = std::cos(rotation), sn = std::sin(rotation);
    const double sh = std::tan(shear);
    // M = R * Sh * S with S = scale*I, Sh = [[1, sh],[0, 1]]
    const double m00 = scale * cs, m01 = scale * (cs * sh - sn);
    const double m10 = scale * sn, m11 = scale * (sn * sh + cs);
    const double det = m00 * m11 - m01 * m10;
    if (std::abs(det) < 1e-12) throw std::invalid_argument("affine_warp: singular transform");
    const double i00 = m11 / det, i01 = -m01 / det;
    const double i10 = -m10 / det, i11 = m00 / det;

    const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    ImageF out(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double dx = x - cx - translation[0];
            const double dy = y - cy - translation[1];
            const double sx = i00 * dx + i01 * dy + cx;
            const double sy = i10 * dx + i11 * dy + cy;

            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double fx = sx - x0, fy = sy - y0;
            for (int c = 0; c < img.channels; ++c) {
                const auto sample = [&](int yy, int xx) {
                    if (yy < 0 || yy >= img.height || xx < 0 || xx >= img.width) return 0.0;
                    return img.at(c, yy, xx);
                };
                out.at(c, y, x) = (1 - fy) * ((1 - fx) * sample(y0, x0) + fx * sample(y0, x0 + 1)) +
                                  fy * ((1 - fx) * sample(y0 + 1, x0) + fx * sample(y0 + 1, x0 + 1));
            }
        }
    }
    return out;
}

ImageF gaussian_blur(const ImageF& img, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_blur: sigma must be > 0");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * i * i / (sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = w;
        sum += w;
    }
    for (double& w : kernel) w /= sum;

    const auto pass = [&](const ImageF& src, bool horizontal) {
        ImageF dst(src.height, src.width, src.channels);
        for (int c = 0; c < src.channels; ++c) {
            for (int y = 0; y < src.height; ++y) {
                for (int x = 0; x < src.width; ++x) {
                    double acc = 0.0;
                    for (int i = -radius; i <= radius; ++i) {
                        const int yy = horizontal ? y : reflect_index(y + i, src.height);
                        const int xx = horizontal ? reflect_index(x + i, src.width) : x;
                        acc += kernel[static_cast<std::size_t>(i + radius)] * src.at(c, yy, xx);
                    }
                    dst.at(c, y, x) = acc;
                }
            }
        }
        return dst;
    };
    return pass(pass(img, true), false);
}

ImageF apply_flare_pipeline(const ImageF& img, const AugPlan& plan, SeededRng& rng,
                            std::vector<std::string>* trace) {
    (void)rng; // flare stages are fully determined by the plan
    const auto step = [&](const char* name) {
        if (trace) trace->emplace_back(name);
    };
    ImageF out = inverse_gamma(img, plan.gamma);
    step("inverse_gamma");
    out = rgb_scale(out, plan.rgb_gains);
    step("rgb_scale");
    out = affine_warp(out, plan.rotation, plan.translation, plan.shear, plan.scale);
    step("affine_warp");
    out = gaussian_blur(out, plan.blur_sigma);
    step("gaussian_blur");
    out = color_jitter(out, plan.jitter_gains);
    step("color_jitter");
    out = intensity_offset(out, plan.offset);
    step("intensity_offset");
    return out;
}

ImageF apply_background_pipeline(const ImageF& img, const AugPlan& plan, SeededRng& rng,
                                 std::vector<std::string>* trace) {
    const auto step = [&](const char* name) {
        if (trace) trace->emplace_back(name);
    };
    ImageF out = inverse_gamma(img, plan.gamma);
    step("inverse_gamma");
    out = rgb_scale(out, plan.rgb_gains);
    step("rgb_scale");
    out = gaussian_noise(out, plan.noise_var, rng);
    step("gaussian_noise");
    return out;
}

} // namespace flaresim::augment
