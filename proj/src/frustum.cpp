#include "sfm/frustum.hpp"

#include <algorithm>

#include "sfm/errors.hpp"

namespace sfm {

BBox2D BBox2D::from_detection(const Detection2D& d) {
    BBox2D b;
    b.center_u = (d.x1 + d.x2) / 2.0;
    b.center_v = (d.y1 + d.y2) / 2.0;
    b.width = d.x2 - d.x1;
    b.height = d.y2 - d.y1;
    b.view = d.view;
    b.class_label = d.class_label;
    b.score = d.score;
    return b;
}

BBox2D enlarge_bbox(const BBox2D& b, double s_enlarge, double image_width, double image_height) {
    const double w = b.width * (1.0 + s_enlarge);
    const double h = b.height * (1.0 + s_enlarge);
    const double u0 = std::max(b.center_u - w / 2.0, 0.0);
    const double u1 = std::min(b.center_u + w / 2.0, image_width);
    const double v0 = std::max(b.center_v - h / 2.0, 0.0);
    const double v1 = std::min(b.center_v + h / 2.0, image_height);
    if (u1 <= u0 || v1 <= v0) throw EmptyAfterClip("box fully outside image");
    BBox2D out = b;
    out.center_u = (u0 + u1) / 2.0;
    out.center_v = (v0 + v1) / 2.0;
    out.width = u1 - u0;
    out.height = v1 - v0;
    return out;
}

FrustumInliers frustum_inliers(const std::vector<ProjectedPoint>& projected, const BBox2D& b,
                               std::uint32_t box_index) {
    FrustumInliers out;
    out.box_index = box_index;
    const double u0 = b.u_min(), u1 = b.u_max();
    const double v0 = b.v_min(), v1 = b.v_max();
    for (std::size_t i = 0; i < projected.size(); ++i) {
        const auto& p = projected[i];
        if (p.valid && p.u >= u0 && p.u <= u1 && p.v >= v0 && p.v <= v1) {
            out.indices.push_back(static_cast<std::uint32_t>(i));
        }
    }
    return out;
}

std::size_t intersection_count(const FrustumInliers& a, const FrustumInliers& b) {
    std::size_t count = 0;
    auto ia = a.indices.begin(), ib = b.indices.begin();
    while (ia != a.indices.end() && ib != b.indices.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++count;
            ++ia;
            ++ib;
        }
    }
    return count;
}

std::vector<std::uint32_t> intersect_indices(const FrustumInliers& a, const FrustumInliers& b) {
    std::vector<std::uint32_t> out;
    std::set_intersection(a.indices.begin(), a.indices.end(), b.indices.begin(), b.indices.end(),
                          std::back_inserter(out));
    return out;
}

double iou_3d_cost(const FrustumInliers& a, const FrustumInliers& b) {
    if (a.indices.empty() && b.indices.empty()) {
        throw BothEmpty("both frustums captured no points");
    }
    const std::size_t inter = intersection_count(a, b);
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

MatchSet min_intersection_filter(const MatchSet& pairs, int n_thres) {
    MatchSet out;
    out.algorithm = pairs.algorithm;
    for (const auto& m : pairs.pairs) {
        if (m.n_intersection() >= static_cast<std::size_t>(n_thres)) out.pairs.push_back(m);
    }
    return out;
}

}  // namespace sfm
