#include "sfm/patch_similarity.hpp"

#include <algorithm>
#include <cmath>

#include "sfm/errors.hpp"

namespace sfm {

namespace {

ImagePatch resample_bilinear(const ImagePatch& src, int size) {
    ImagePatch out;
    out.width = size;
    out.height = size;
    out.intensities.resize(static_cast<std::size_t>(size) * size);
    const double sx = static_cast<double>(src.width) / size;
    const double sy = static_cast<double>(src.height) / size;
    for (int j = 0; j < size; ++j) {
        const double y = std::clamp((j + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
        const int y0 = static_cast<int>(y);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double fy = y - y0;
        for (int i = 0; i < size; ++i) {
            const double x =
                std::clamp((i + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
            const int x0 = static_cast<int>(x);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double fx = x - x0;
            const double top = src.at(x0, y0) * (1.0 - fx) + src.at(x1, y0) * fx;
            const double bot = src.at(x0, y1) * (1.0 - fx) + src.at(x1, y1) * fx;
            out.intensities[static_cast<std::size_t>(j) * size + i] =
                top * (1.0 - fy) + bot * fy;
        }
    }
    return out;
}

}  // namespace

ImagePatch extract_patch(const GrayImage& image, const BBox2D& b) {
    const int x0 = std::max(static_cast<int>(std::ceil(b.u_min())), 0);
    const int x1 = std::min(static_cast<int>(std::floor(b.u_max())), image.width - 1);
    const int y0 = std::max(static_cast<int>(std::ceil(b.v_min())), 0);
    const int y1 = std::min(static_cast<int>(std::floor(b.v_max())), image.height - 1);
    if (x1 < x0 || y1 < y0) throw EmptyPatch("box covers no pixel centers");
    ImagePatch patch;
    patch.width = x1 - x0 + 1;
    patch.height = y1 - y0 + 1;
    patch.intensities.reserve(static_cast<std::size_t>(patch.width) * patch.height);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            patch.intensities.push_back(image.at(x, y) / 255.0);
        }
    }
    return patch;
}

std::pair<ImagePatch, ImagePatch> align_patches(const ImagePatch& a, const ImagePatch& b,
                                                int size) {
    return {resample_bilinear(a, size), resample_bilinear(b, size)};
}

double ncc(const ImagePatch& a, const ImagePatch& b) {
    const std::size_t n = a.intensities.size();
    if (b.intensities.size() != n || n == 0) {
        throw ZeroVariance("patch dimensions differ or empty");
    }
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_a += a.intensities[i];
        mean_b += b.intensities[i];
    }
    mean_a /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);
    double cross = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a.intensities[i] - mean_a;
        const double db = b.intensities[i] - mean_b;
        cross += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    const double eps = 1e-20 * static_cast<double>(n);
    if (var_a <= eps || var_b <= eps) throw ZeroVariance("constant patch");
    return cross / std::sqrt(var_a * var_b);
}

}  // namespace sfm
