#include "flaresim/render.hpp"

#include "flaresim/complex_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flaresim::render {
namespace {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// One channel, zero-padded convolution with a centered kernel:
// out(y,x) = sum_uv k(u,v) * img(y - (u - cr), x - (v - cc)).
void conv_direct(const double* img, int h, int w, const std::vector<double>& kernel, int ks,
                 int cr, int cc, std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int u = 0; u < ks; ++u) {
                const int sy = y - (u - cr);
                if (sy < 0 || sy >= h) continue;
                for (int v = 0; v < ks; ++v) {
                    const int sx = x - (v - cc);
                    if (sx < 0 || sx >= w) continue;
                    acc += kernel[static_cast<std::size_t>(u) * ks + v] *
                           img[static_cast<std::size_t>(sy) * w + sx];
                }
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
}

// Linear convolution via pow-2 padded FFTs; the full result is cropped at the
// kernel-center offset so semantics match conv_direct.
void conv_fft(const double* img, int h, int w, const std::vector<double>& kernel, int ks,
              int cr, int cc, std::vector<double>& out) {
    const int ph = static_cast<int>(next_pow2(static_cast<std::size_t>(h + ks - 1)));
    const int pw = static_cast<int>(next_pow2(static_cast<std::size_t>(w + ks - 1)));

    ComplexField a(ph, pw), b(ph, pw);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) a.re[a.idx(y, x)] = img[static_cast<std::size_t>(y) * w + x];
    for (int y = 0; y < ks; ++y)
        for (int x = 0; x < ks; ++x) b.re[b.idx(y, x)] = kernel[static_cast<std::size_t>(y) * ks + x];

    ComplexField fa = fft2(a), fb = fft2(b);
    // unitary transforms: conv = ifft(fa * fb) * sqrt(N)
    for (std::size_t i = 0; i < fa.size(); ++i) {
        const double re = fa.re[i] * fb.re[i] - fa.im[i] * fb.im[i];
        fa.im[i] = fa.re[i] * fb.im[i] + fa.im[i] * fb.re[i];
        fa.re[i] = re;
    }
    ComplexField full = ifft2(fa);
    const double scale = std::sqrt(static_cast<double>(ph) * static_cast<double>(pw));

    out.assign(static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out[static_cast<std::size_t>(y) * w + x] = full.re[full.idx(y + cr, x + cc)] * scale;
}

} // namespace

ImageF sv_convolve(const ImageF& clear, const optics::PsfBasis& basis, ConvMethod method) {
    if (clear.height != basis.image_height || clear.width != basis.image_width)
        throw std::invalid_argument("sv_convolve: coefficient maps do not match image resolution");

    const int h = clear.height, w = clear.width, ks = basis.kernel_size;
    bool use_fft = method == ConvMethod::Fft;
    if (method == ConvMethod::Auto)
        use_fft = static_cast<long long>(h) * w * ks * ks > (1LL << 22);

    ImageF out(h, w, clear.channels);
    std::vector<double> conv;
    for (int c = 0; c < clear.channels; ++c) {
        const double* chan = clear.data.data() + static_cast<std::size_t>(c) * h * w;
        double* dst = out.data.data() + static_cast<std::size_t>(c) * h * w;
        for (int i = 0; i < basis.count(); ++i) {
            const auto& kernel = basis.bases[static_cast<std::size_t>(i)];
            if (use_fft)
                conv_fft(chan, h, w, kernel, ks, basis.center_row, basis.center_col, conv);
            else
                conv_direct(chan, h, w, kernel, ks, basis.center_row, basis.center_col, conv);
            const auto& beta = basis.coeff_maps[static_cast<std::size_t>(i)];
            for (std::size_t p = 0; p < conv.size(); ++p) dst[p] += beta[p] * conv[p];
        }
    }
    return out;
}

ImageF brute_force_sv(const ImageF& clear, const optics::PsfBasis& basis) {
    if (clear.height > 64 || clear.width > 64)
        throw std::invalid_argument("brute_force_sv: image too large (64x64 limit)");
    if (clear.height != basis.image_height || clear.width != basis.image_width)
        throw std::invalid_argument("brute_force_sv: coefficient maps do not match image resolution");

    const int h = clear.height, w = clear.width, ks = basis.kernel_size;
    ImageF out(h, w, clear.channels);
    std::vector<double> kernel(static_cast<std::size_t>(ks) * ks);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // kernel at this pixel, reassembled from the basis model
            std::fill(kernel.begin(), kernel.end(), 0.0);
            for (int i = 0; i < basis.count(); ++i) {
                const double beta = basis.coeff_maps[static_cast<std::size_t>(i)][basis.midx(y, x)];
                const auto& base = basis.bases[static_cast<std::size_t>(i)];
                for (std::size_t t = 0; t < kernel.size(); ++t) kernel[t] += beta * base[t];
            }
            for (int c = 0; c < clear.channels; ++c) {
                double acc = 0.0;
                for (int u = 0; u < ks; ++u) {
                    const int sy = y - (u - basis.center_row);
                    if (sy < 0 || sy >= h) continue;
                    for (int v = 0; v < ks; ++v) {
                        const int sx = x - (v - basis.center_col);
                        if (sx < 0 || sx >= w) continue;
                        acc += kernel[static_cast<std::size_t>(u) * ks + v] * clear.at(c, sy, sx);
                    }
                }
                out.at(c, y, x) = acc;
            }
        }
    }
    return out;
}

std::pair<ImageF, ImageF> composite(const ImageF& background, const ImageF& flare,
                                    const CompositeRecipe& recipe) {
    if (!background.same_shape(flare))
        throw std::invalid_argument("composite: background and flare resolutions differ");
    if (background.channels != 3) throw std::invalid_argument("composite: 3-channel images required");
    if (!(recipe.gamma > 0.0) || !(recipe.clip_high > 0.0))
        throw std::invalid_argument("composite: recipe gamma and clip_high must be > 0");

    const auto clip = [&](double v) {
        return v < 0.0 ? 0.0 : (v > recipe.clip_high ? recipe.clip_high : v);
    };

    ImageF input(background.height, background.width, 3);
    for (std::size_t i = 0; i < input.size(); ++i)
        input.data[i] = clip(background.data[i] + flare.data[i]);

    ImageF gt = background;
    if (recipe.include_light_source_in_gt) {
        const ImageF core = light_source_core(flare, recipe.light_source_threshold);
        for (std::size_t i = 0; i < gt.size(); ++i) gt.data[i] += core.data[i];
    }
    for (double& v : gt.data) v = clip(v);
    return {std::move(input), std::move(gt)};
}

ImageF light_source_core(const ImageF& flare, double luminance_threshold) {
    if (flare.channels != 3) throw std::invalid_argument("light_source_core: 3-channel image required");
    if (!(luminance_threshold > 0.0) || luminance_threshold > 1.0)
        throw std::invalid_argument("light_source_core: threshold must be in (0, 1]");

    ImageF out(flare.height, flare.width, 3);
    for (int y = 0; y < flare.height; ++y) {
        for (int x = 0; x < flare.width; ++x) {
            if (luminance(flare, y, x) >= luminance_threshold)
                for (int c = 0; c < 3; ++c) out.at(c, y, x) = flare.at(c, y, x);
        }
    }
    return out;
}

} // namespace flaresim::render
