#include "sfm/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "sfm/errors.hpp"

namespace sfm {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

GrayImage load_png_gray(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw SinkFailure("cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw SinkFailure("png_create_read_struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw SinkFailure("png_create_info_struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw SinkFailure("failed to decode " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    GrayImage img;
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);

    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * channels);
    for (int y = 0; y < img.height; ++y) {
        png_read_row(png, row.data(), nullptr);
        if (channels == 1) {
            std::copy_n(row.data(), img.width, img.pixels.data() + static_cast<std::size_t>(y) * img.width);
        } else {
            for (int x = 0; x < img.width; ++x) {
                const double r = row[static_cast<std::size_t>(x) * channels + 0];
                const double g = row[static_cast<std::size_t>(x) * channels + 1];
                const double b = row[static_cast<std::size_t>(x) * channels + 2];
                const double luma = 0.299 * r + 0.587 * g + 0.114 * b;
                img.at(x, y) = static_cast<std::uint8_t>(std::lround(std::clamp(luma, 0.0, 255.0)));
            }
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_png_gray(const GrayImage& image, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw SinkFailure("cannot open " + path + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw SinkFailure("png_create_write_struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw SinkFailure("png_create_info_struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw SinkFailure("failed to encode " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        png_write_row(png, const_cast<png_bytep>(image.pixels.data() +
                                                 static_cast<std::size_t>(y) * image.width));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void draw_line(GrayImage& image, double a, double b, double c, std::uint8_t value) {
    // a*u + b*v + c = 0; rasterize along the dominant axis.
    if (std::abs(b) >= std::abs(a)) {
        for (int u = 0; u < image.width; ++u) {
            const double v = -(a * u + c) / b;
            const int vi = static_cast<int>(std::lround(v));
            if (vi >= 0 && vi < image.height) image.at(u, vi) = value;
        }
    } else {
        for (int v = 0; v < image.height; ++v) {
            const double u = -(b * v + c) / a;
            const int ui = static_cast<int>(std::lround(u));
            if (ui >= 0 && ui < image.width) image.at(ui, v) = value;
        }
    }
}

void draw_rect(GrayImage& image, double x1, double y1, double x2, double y2, std::uint8_t value) {
    const int xa = std::clamp(static_cast<int>(std::lround(x1)), 0, image.width - 1);
    const int xb = std::clamp(static_cast<int>(std::lround(x2)), 0, image.width - 1);
    const int ya = std::clamp(static_cast<int>(std::lround(y1)), 0, image.height - 1);
    const int yb = std::clamp(static_cast<int>(std::lround(y2)), 0, image.height - 1);
    for (int x = xa; x <= xb; ++x) {
        image.at(x, ya) = value;
        image.at(x, yb) = value;
    }
    for (int y = ya; y <= yb; ++y) {
        image.at(xa, y) = value;
        image.at(xb, y) = value;
    }
}

}  // namespace sfm
