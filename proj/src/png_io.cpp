#include "flaresim/png_io.hpp"

#include "flaresim/errors.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <memory>
#include <vector>

namespace flaresim {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

ImageF load_png(const std::filesystem::path& path, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("load_png: gamma must be > 0");

    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw DataError("cannot open PNG: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("libpng init failed");
    }

    // libpng reports errors via longjmp; buffers live outside the jump so
    // nothing leaks on the error path.
    std::vector<std::uint8_t> raster;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("failed to decode PNG: " + path.string());
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (bit_depth == 16) png_set_swap(png); // PNG stores 16-bit big-endian
    png_read_update_info(png, info);

    const int out_depth = png_get_bit_depth(png, info);
    if (out_depth != 8 && out_depth != 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("unsupported PNG bit depth in " + path.string());
    }
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int nch = png_get_channels(png, info);
    if (nch != 1 && nch != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("unsupported PNG channel layout in " + path.string());
    }

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    raster.resize(rowbytes * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = raster.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImageF img(static_cast<int>(h), static_cast<int>(w), nch);
    const bool linear = (gamma == 1.0);
    for (png_uint_32 y = 0; y < h; ++y) {
        for (png_uint_32 x = 0; x < w; ++x) {
            for (int c = 0; c < nch; ++c) {
                double v;
                if (out_depth == 8) {
                    v = raster[y * rowbytes + x * nch + c] / 255.0;
                } else {
                    const std::uint16_t* row16 =
                        reinterpret_cast<const std::uint16_t*>(raster.data() + y * rowbytes);
                    v = row16[x * nch + c] / 65535.0;
                }
                img.at(c, static_cast<int>(y), static_cast<int>(x)) =
                    linear ? v : std::pow(v, gamma);
            }
        }
    }
    return img;
}

void save_png(const ImageF& img, const std::filesystem::path& path, double inv_gamma) {
    if (!(inv_gamma > 0.0)) throw std::invalid_argument("save_png: inv_gamma must be > 0");
    if (!img.all_finite()) throw std::invalid_argument("save_png: image has non-finite samples");

    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw DataError("cannot open for writing: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw DataError("libpng init failed");
    }

    std::vector<std::uint8_t> raster;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("failed to encode PNG: " + path.string());
    }

    png_init_io(png, fp.get());
    const int color_type = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, img.width, img.height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const bool linear = (inv_gamma == 1.0);
    const double exponent = 1.0 / inv_gamma;
    raster.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
    rows.resize(img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                double v = img.at(c, y, x);
                v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
                if (!linear) v = std::pow(v, exponent);
                raster[(static_cast<std::size_t>(y) * img.width + x) * img.channels + c] =
                    static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
        }
        rows[y] = raster.data() + static_cast<std::size_t>(y) * img.width * img.channels;
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace flaresim
