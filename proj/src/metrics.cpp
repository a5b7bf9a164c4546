#include "flaresim/metrics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace flaresim::metrics {
namespace {

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

// Shared accumulator so masked_psnr with a full mask is bit-identical to psnr.
double mean_squared_error(const ImageF& a, const ImageF& b, const RegionMask* mask, double thresh,
                          std::size_t* n_out) {
    double sum = 0.0;
    std::size_t n = 0;
    for (int c = 0; c < a.channels; ++c) {
        for (int y = 0; y < a.height; ++y) {
            for (int x = 0; x < a.width; ++x) {
                if (mask && mask->at(y, x) < thresh) continue;
                const double d = a.at(c, y, x) - b.at(c, y, x);
                sum += d * d;
                ++n;
            }
        }
    }
    if (n_out) *n_out = n;
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

using Kernel3 = std::array<std::array<double, 3>, 3>;

constexpr Kernel3 kLaplacian{{{0, 1, 0}, {1, -4, 1}, {0, 1, 0}}};
constexpr Kernel3 kSobelX{{{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}}};
constexpr Kernel3 kSobelY{{{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}}};

// All three kernels sum to zero, so weighting differences against the center
// sample computes the same linear map while annihilating constant images
// exactly (no float residue).
std::vector<double> apply3x3(const ImageF& img, int c, const Kernel3& k) {
    const int h = img.height, w = img.width;
    std::vector<double> out(static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double center = img.at(c, y, x);
            double acc = 0.0;
            for (int a = 0; a < 3; ++a) {
                const int yy = reflect_index(y + a - 1, h);
                for (int b = 0; b < 3; ++b) {
                    const int xx = reflect_index(x + b - 1, w);
                    acc += k[a][b] * (img.at(c, yy, xx) - center);
                }
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    return out;
}

// Exact adjoint of apply3x3: scatter each response back through the same
// reflected source indices.
void adjoint3x3(const std::vector<double>& g, int h, int w, const Kernel3& k, double scale,
                ImageF& out, int c) {
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = g[static_cast<std::size_t>(y) * w + x] * scale;
            if (v == 0.0) continue;
            for (int a = 0; a < 3; ++a) {
                const int yy = reflect_index(y + a - 1, h);
                for (int b = 0; b < 3; ++b) {
                    const int xx = reflect_index(x + b - 1, w);
                    out.at(c, yy, xx) += k[a][b] * v;
                }
            }
        }
    }
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void require_same_shape(const ImageF& a, const ImageF& b, const char* op) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

} // namespace

double psnr(const ImageF& a, const ImageF& b, double peak) {
    require_same_shape(a, b, "psnr");
    if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be > 0");
    const double mse = mean_squared_error(a, b, nullptr, 0.0, nullptr);
    if (mse == 0.0) return kInfinitePsnr;
    return 10.0 * std::log10(peak * peak / mse);
}

double masked_psnr(const ImageF& a, const ImageF& b, const RegionMask& mask, double thresh,
                   double peak) {
    require_same_shape(a, b, "masked_psnr");
    if (mask.height != a.height || mask.width != a.width)
        throw std::invalid_argument("masked_psnr: mask shape mismatch");
    if (!(peak > 0.0)) throw std::invalid_argument("masked_psnr: peak must be > 0");

    std::size_t n = 0;
    const double mse = mean_squared_error(a, b, &mask, thresh, &n);
    if (n == 0) throw std::invalid_argument("masked_psnr: mask selects no pixels");
    if (mse == 0.0) return kInfinitePsnr;
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

std::vector<double> to_gray(const ImageF& img) {
    const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
    std::vector<double> g(plane, 0.0);
    for (int c = 0; c < img.channels; ++c)
        for (std::size_t i = 0; i < plane; ++i) g[i] += img.data[c * plane + i];
    if (img.channels > 1)
        for (double& v : g) v /= img.channels;
    return g;
}

} // namespace

double ssim(const ImageF& a, const ImageF& b, double peak) {
    require_same_shape(a, b, "ssim");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    if (a.height < kWin || a.width < kWin)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    if (!(peak > 0.0)) throw std::invalid_argument("ssim: peak must be > 0");

    // normalized 11x11 Gaussian window
    static const std::vector<double> window = [] {
        std::vector<double> w(kWin * kWin);
        double sum = 0.0;
        for (int y = 0; y < kWin; ++y) {
            for (int x = 0; x < kWin; ++x) {
                const double dy = y - (kWin - 1) / 2.0, dx = x - (kWin - 1) / 2.0;
                const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
                w[static_cast<std::size_t>(y) * kWin + x] = v;
                sum += v;
            }
        }
        for (double& v : w) v /= sum;
        return w;
    }();

    const std::vector<double> ga = to_gray(a), gb = to_gray(b);
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const int h = a.height, w = a.width;

    double total = 0.0;
    std::size_t count = 0;
    for (int y = 0; y + kWin <= h; ++y) {
        for (int x = 0; x + kWin <= w; ++x) {
            double mx = 0.0, my = 0.0, xx = 0.0, yy = 0.0, xy = 0.0;
            for (int u = 0; u < kWin; ++u) {
                for (int v = 0; v < kWin; ++v) {
                    const double wv = window[static_cast<std::size_t>(u) * kWin + v];
                    const double pa = ga[static_cast<std::size_t>(y + u) * w + (x + v)];
                    const double pb = gb[static_cast<std::size_t>(y + u) * w + (x + v)];
                    mx += wv * pa;
                    my += wv * pb;
                    xx += wv * pa * pa;
                    yy += wv * pb * pb;
                    xy += wv * pa * pb;
                }
            }
            const double vx = xx - mx * mx;
            const double vy = yy - my * my;
            const double cxy = xy - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

double l1_loss(const ImageF& pred, const ImageF& gt) {
    require_same_shape(pred, gt, "l1_loss");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred.data[i] - gt.data[i]);
    return sum / static_cast<double>(pred.size());
}

ImageF grad_l1(const ImageF& pred, const ImageF& gt) {
    require_same_shape(pred, gt, "grad_l1");
    ImageF g(pred.height, pred.width, pred.channels);
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
        g.data[i] = sign(pred.data[i] - gt.data[i]) * inv_n;
    return g;
}

double hf_loss(const ImageF& pred, const ImageF& gt) {
    require_same_shape(pred, gt, "hf_loss");
    if (pred.height < 3 || pred.width < 3)
        throw std::invalid_argument("hf_loss: image must be at least 3x3");

    const std::size_t plane = static_cast<std::size_t>(pred.height) * pred.width;
    double lap_sum = 0.0, sob_sum = 0.0;
    for (int c = 0; c < pred.channels; ++c) {
        const auto lp = apply3x3(pred, c, kLaplacian), lg = apply3x3(gt, c, kLaplacian);
        const auto sxp = apply3x3(pred, c, kSobelX), sxg = apply3x3(gt, c, kSobelX);
        const auto syp = apply3x3(pred, c, kSobelY), syg = apply3x3(gt, c, kSobelY);
        for (std::size_t i = 0; i < plane; ++i) {
            lap_sum += std::abs(lp[i] - lg[i]);
            sob_sum += std::abs(sxp[i] - sxg[i]) + std::abs(syp[i] - syg[i]);
        }
    }
    const double n_lap = static_cast<double>(plane * pred.channels);
    const double n_sob = 2.0 * n_lap;
    return 0.5 * lap_sum / n_lap + 0.5 * sob_sum / n_sob;
}

ImageF grad_hf(const ImageF& pred, const ImageF& gt) {
    require_same_shape(pred, gt, "grad_hf");
    if (pred.height < 3 || pred.width < 3)
        throw std::invalid_argument("grad_hf: image must be at least 3x3");

    const int h = pred.height, w = pred.width;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const double n_lap = static_cast<double>(plane * pred.channels);
    const double n_sob = 2.0 * n_lap;

    ImageF g(h, w, pred.channels);
    std::vector<double> signs(plane);
    for (int c = 0; c < pred.channels; ++c) {
        const auto scatter = [&](const Kernel3& k, double scale) {
            const auto rp = apply3x3(pred, c, k), rg = apply3x3(gt, c, k);
            for (std::size_t i = 0; i < plane; ++i) signs[i] = sign(rp[i] - rg[i]);
            adjoint3x3(signs, h, w, k, scale, g, c);
        };
        scatter(kLaplacian, 0.5 / n_lap);
        scatter(kSobelX, 0.5 / n_sob);
        scatter(kSobelY, 0.5 / n_sob);
    }
    return g;
}

double recon_loss(const ImageF& pred_scene, const ImageF& input_flare_img, const ImageF& gt_flare,
                  const RegionMask& mask, double thresh) {
    require_same_shape(pred_scene, input_flare_img, "recon_loss");
    require_same_shape(pred_scene, gt_flare, "recon_loss");
    if (mask.height != pred_scene.height || mask.width != pred_scene.width)
        throw std::invalid_argument("recon_loss: mask shape mismatch");

    double sum = 0.0;
    std::size_t n = 0;
    for (int c = 0; c < pred_scene.channels; ++c) {
        for (int y = 0; y < pred_scene.height; ++y) {
            for (int x = 0; x < pred_scene.width; ++x) {
                if (mask.at(y, x) < thresh) continue;
                const double residual = input_flare_img.at(c, y, x) - pred_scene.at(c, y, x);
                sum += std::abs(residual - gt_flare.at(c, y, x));
                ++n;
            }
        }
    }
    if (n == 0) throw std::invalid_argument("recon_loss: mask selects no pixels");
    return sum / static_cast<double>(n);
}

TotalLoss total_loss(const LossParts& parts, const LossWeights& w) {
    if (w.l1 < 0.0 || w.vgg < 0.0 || w.rec < 0.0 || w.hf < 0.0)
        throw std::invalid_argument("total_loss: weights must be >= 0");
    if (parts.l1 < 0.0 || parts.rec < 0.0 || parts.hf < 0.0 ||
        (parts.vgg.has_value() && *parts.vgg < 0.0))
        throw std::invalid_argument("total_loss: component losses must be >= 0");

    TotalLoss out;
    out.vgg_missing = !parts.vgg.has_value();
    out.value = w.l1 * parts.l1 + (parts.vgg ? w.vgg * *parts.vgg : 0.0) + w.rec * parts.rec +
                w.hf * parts.hf;
    return out;
}

} // namespace flaresim::metrics
