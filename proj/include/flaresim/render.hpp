#pragma once

#include "flaresim/image.hpp"
#include "flaresim/optics.hpp"

#include <utility>

namespace flaresim::render {

enum class ConvMethod { Auto, Direct, Fft };

// Spatially varying blur through the basis model:
// out(x) = sum_i coeff_maps[i](x) * (bases[i] (*) img)(x), standard 2-D
// convolution with zero padding, channels independent. Direct and FFT
// convolution agree within 1e-6; Auto picks by work size.
ImageF sv_convolve(const ImageF& clear, const optics::PsfBasis& basis,
                   ConvMethod method = ConvMethod::Auto);

// Reference form: per-pixel kernel reassembly and direct summation. The
// correctness oracle for sv_convolve; images larger than 64x64 are rejected.
ImageF brute_force_sv(const ImageF& clear, const optics::PsfBasis& basis);

struct CompositeRecipe {
    double gamma = 2.2;     // scene linearization applied at PNG load time
    double clip_high = 1.0;
    bool include_light_source_in_gt = false;
    double light_source_threshold = 0.97;
};

// input = clip(background + flare, 0, clip_high); gt = background, plus the
// thresholded light-source core when the recipe asks for it. Both linear
// light, both clipped to [0, clip_high].
std::pair<ImageF, ImageF> composite(const ImageF& background, const ImageF& flare,
                                    const CompositeRecipe& recipe);

// Flare masked to pixels whose Rec.709 luminance reaches the threshold;
// zero elsewhere. threshold must lie in (0, 1].
ImageF light_source_core(const ImageF& flare, double luminance_threshold);

} // namespace flaresim::render
