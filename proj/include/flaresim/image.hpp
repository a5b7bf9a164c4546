#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace flaresim {

// Planar raster in linear light: data[(c*height + y)*width + x], values
// nominally [0,1]. Channels are 1 (gray) or 3 (RGB). Samples are stored as
// doubles so independent computation routes can be compared at 1e-10; the
// on-disk tensor format quantizes to f32.
struct ImageF {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    ImageF() = default;
    ImageF(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {
        if (h <= 0 || w <= 0 || (c != 1 && c != 3))
            throw std::invalid_argument("ImageF: dims must be positive, channels 1 or 3");
    }

    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    std::size_t size() const { return data.size(); }

    bool same_shape(const ImageF& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// Rec.709 luma of one pixel of a 3-channel image.
inline double luminance(const ImageF& img, int y, int x) {
    return 0.2126 * img.at(0, y, x) + 0.7152 * img.at(1, y, x) + 0.0722 * img.at(2, y, x);
}

} // namespace flaresim
