#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace flaresim {

// H x W grid of complex samples, split storage. Used for pupil functions and
// frequency-domain spectra.
struct ComplexField {
    int height = 0;
    int width = 0;
    std::vector<double> re;
    std::vector<double> im;

    ComplexField() = default;
    ComplexField(int h, int w)
        : height(h), width(w),
          re(static_cast<std::size_t>(h) * w, 0.0),
          im(static_cast<std::size_t>(h) * w, 0.0) {
        if (h <= 0 || w <= 0) throw std::invalid_argument("ComplexField: dims must be positive");
    }

    std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
    std::size_t size() const { return re.size(); }
};

// Unitary 2-D DFT: each direction carries a 1/sqrt(N) factor, so
// ifft2(fft2(f)) == f and energy is preserved (Parseval). Forward kernel is
// exp(-j*2*pi*k*n/N). Any H x W is accepted; power-of-two sizes take the
// radix-2 fast path, everything else goes through Bluestein's chirp-z.
ComplexField fft2(const ComplexField& field);
ComplexField ifft2(const ComplexField& field);

// In-place unnormalized 1-D transform used by the 2-D drivers; exposed for
// tests. `inverse` flips the kernel sign, no scaling is applied.
void fft_1d(std::vector<double>& re, std::vector<double>& im, bool inverse);

} // namespace flaresim
