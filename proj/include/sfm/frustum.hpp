#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfm/calib_geometry.hpp"
#include "sfm/kitti_io.hpp"
#include "sfm/match_set.hpp"

namespace sfm {

/// Center-size form of a 2D detection box; the matching unit (RoI).
struct BBox2D {
    double center_u = 0.0;
    double center_v = 0.0;
    double width = 0.0;
    double height = 0.0;
    View view = View::Left;
    std::string class_label;
    double score = 0.0;

    double u_min() const { return center_u - width / 2.0; }
    double u_max() const { return center_u + width / 2.0; }
    double v_min() const { return center_v - height / 2.0; }
    double v_max() const { return center_v + height / 2.0; }

    static BBox2D from_detection(const Detection2D& d);
};

/// Point ids (strictly increasing) of the cloud points whose projection
/// falls inside one box.
struct FrustumInliers {
    std::uint32_t box_index = 0;
    std::vector<std::uint32_t> indices;

    std::size_t size() const { return indices.size(); }
};

/// Tunable thresholds of the matching module.
struct MatchConfig {
    double s_enlarge = 0.08;      // bbox enlargement fraction
    int n_thres = 5;              // minimum intersection inliers
    double d_thres = 30.0;        // px, center-to-epipolar-line gate
    double p_thres = 0.4;         // NCC acceptance threshold
    double p_3d_thres = 0.5;      // 3D IoU acceptance threshold
    double disparity_margin = 5.0;  // px slack on the search-direction rule
    int align_size = 64;          // RoI alignment target, px square
};

/// Grows the box by s on both dimensions about its center, then clips to
/// [0,W]x[0,H] and recomputes the center from the clipped extent.
BBox2D enlarge_bbox(const BBox2D& b, double s_enlarge, double image_width, double image_height);

/// Valid projections landing inside the box (closed intervals on the edges).
FrustumInliers frustum_inliers(const std::vector<ProjectedPoint>& projected, const BBox2D& b,
                               std::uint32_t box_index = 0);

std::size_t intersection_count(const FrustumInliers& a, const FrustumInliers& b);
std::vector<std::uint32_t> intersect_indices(const FrustumInliers& a, const FrustumInliers& b);

/// Point-set IoU |a n b| / |a u b|. Throws BothEmpty for 0/0 (a detection
/// that captured no LiDAR points).
double iou_3d_cost(const FrustumInliers& a, const FrustumInliers& b);

/// Keeps pairs with n_intersection >= n_thres (the minimum-intersection
/// constraint on emitted segments).
MatchSet min_intersection_filter(const MatchSet& pairs, int n_thres);

}  // namespace sfm
