#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sfm {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Loads an 8-bit PNG; RGB/RGBA are converted to gray with
/// 0.299R + 0.587G + 0.114B.
GrayImage load_png_gray(const std::string& path);
void save_png_gray(const GrayImage& image, const std::string& path);

// Debug-overlay primitives (clipping handled internally).
void draw_line(GrayImage& image, double a, double b, double c, std::uint8_t value);
void draw_rect(GrayImage& image, double x1, double y1, double x2, double y2, std::uint8_t value);

}  // namespace sfm
