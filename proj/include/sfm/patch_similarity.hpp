#pragma once

#include <utility>
#include <vector>

#include "sfm/frustum.hpp"
#include "sfm/image.hpp"

namespace sfm {

/// Row-major intensity patch in [0,1].
struct ImagePatch {
    int width = 0;
    int height = 0;
    std::vector<double> intensities;

    double at(int x, int y) const { return intensities[static_cast<std::size_t>(y) * width + x]; }
};

/// Pixels whose integer coordinates lie in the box extent; the box must be
/// clipped to the image beforehand.
ImagePatch extract_patch(const GrayImage& image, const BBox2D& b);

/// Bilinearly resamples both patches to a common size x size square.
std::pair<ImagePatch, ImagePatch> align_patches(const ImagePatch& a, const ImagePatch& b,
                                                int size = 64);

/// Zero-mean normalized cross-correlation in [-1, 1]. Throws ZeroVariance
/// when either patch is constant.
double ncc(const ImagePatch& a, const ImagePatch& b);

}  // namespace sfm
