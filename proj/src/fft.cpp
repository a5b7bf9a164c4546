#include "flaresim/complex_field.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

namespace flaresim {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Iterative radix-2 Cooley-Tukey, n a power of two, unnormalized.
void fft_pow2(std::vector<double>& re, std::vector<double>& im, bool inverse) {
    const std::size_t n = re.size();
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
        const double wr = std::cos(ang), wi = std::sin(ang);
        for (std::size_t i = 0; i < n; i += len) {
            double cr = 1.0, ci = 0.0;
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::size_t a = i + k, b = i + k + len / 2;
                const double tr = re[b] * cr - im[b] * ci;
                const double ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                const double ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
    }
}

// Bluestein chirp-z for arbitrary n, expressed through two pow-2 FFTs.
void fft_bluestein(std::vector<double>& re, std::vector<double>& im, bool inverse) {
    const std::size_t n = re.size();
    const std::size_t m = next_pow2(2 * n - 1);
    const double sign = inverse ? 1.0 : -1.0;

    // chirp c_k = exp(sign * j*pi*k^2/n); k^2 mod 2n keeps the angle accurate
    std::vector<double> cr(n), ci(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t k2 = (k * k) % (2 * n);
        const double ang = sign * kTwoPi * 0.5 * static_cast<double>(k2) / static_cast<double>(n);
        cr[k] = std::cos(ang);
        ci[k] = std::sin(ang);
    }

    std::vector<double> ar(m, 0.0), ai(m, 0.0), br(m, 0.0), bi(m, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        ar[k] = re[k] * cr[k] - im[k] * ci[k];
        ai[k] = re[k] * ci[k] + im[k] * cr[k];
    }
    br[0] = cr[0];
    bi[0] = -ci[0];
    for (std::size_t k = 1; k < n; ++k) {
        br[k] = br[m - k] = cr[k];
        bi[k] = bi[m - k] = -ci[k];
    }

    fft_pow2(ar, ai, false);
    fft_pow2(br, bi, false);
    for (std::size_t k = 0; k < m; ++k) {
        const double tr = ar[k] * br[k] - ai[k] * bi[k];
        ai[k] = ar[k] * bi[k] + ai[k] * br[k];
        ar[k] = tr;
    }
    fft_pow2(ar, ai, true);
    const double inv_m = 1.0 / static_cast<double>(m);

    for (std::size_t k = 0; k < n; ++k) {
        const double vr = ar[k] * inv_m, vi = ai[k] * inv_m;
        re[k] = vr * cr[k] - vi * ci[k];
        im[k] = vr * ci[k] + vi * cr[k];
    }
}

ComplexField transform2d(const ComplexField& field, bool inverse) {
    const int h = field.height, w = field.width;
    ComplexField out = field;

    std::vector<double> rowr(w), rowi(w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            rowr[x] = out.re[out.idx(y, x)];
            rowi[x] = out.im[out.idx(y, x)];
        }
        fft_1d(rowr, rowi, inverse);
        for (int x = 0; x < w; ++x) {
            out.re[out.idx(y, x)] = rowr[x];
            out.im[out.idx(y, x)] = rowi[x];
        }
    }
    std::vector<double> colr(h), coli(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            colr[y] = out.re[out.idx(y, x)];
            coli[y] = out.im[out.idx(y, x)];
        }
        fft_1d(colr, coli, inverse);
        for (int y = 0; y < h; ++y) {
            out.re[out.idx(y, x)] = colr[y];
            out.im[out.idx(y, x)] = coli[y];
        }
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(h) * static_cast<double>(w));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.re[i] *= scale;
        out.im[i] *= scale;
    }
    return out;
}

} // namespace

void fft_1d(std::vector<double>& re, std::vector<double>& im, bool inverse) {
    const std::size_t n = re.size();
    if (n <= 1) return;
    if (is_pow2(n))
        fft_pow2(re, im, inverse);
    else
        fft_bluestein(re, im, inverse);
}

ComplexField fft2(const ComplexField& field) { return transform2d(field, false); }

ComplexField ifft2(const ComplexField& field) { return transform2d(field, true); }

} // namespace flaresim
