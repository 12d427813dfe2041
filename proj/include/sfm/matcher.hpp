#pragma once

#include <vector>

#include "sfm/calib_geometry.hpp"
#include "sfm/frustum.hpp"
#include "sfm/image.hpp"
#include "sfm/match_set.hpp"
#include "sfm/patch_similarity.hpp"

namespace sfm {

/// Per-view projections and per-box frustum inliers, computed once per scene.
/// Boxes are expected to be enlarged already.
struct FrustumContext {
    std::vector<ProjectedPoint> left_projected;
    std::vector<ProjectedPoint> right_projected;
    std::vector<FrustumInliers> left_inliers;   // indexed by left RoI id
    std::vector<FrustumInliers> right_inliers;  // indexed by right RoI id
};

FrustumContext prepare_frustums(const CalibrationSet& calib, const PointCloud& cloud,
                                const std::vector<BBox2D>& s2, const std::vector<BBox2D>& s3,
                                int jobs = 1);

/// Right-view candidates for one left RoI: centers within d_thres of the
/// epipolar line and not right of the left center by more than
/// disparity_margin (the leftwards search rule).
std::vector<std::size_t> candidates_by_epipolar(const CalibrationSet& calib,
                                                const BBox2D& left_box,
                                                const std::vector<BBox2D>& right_boxes,
                                                double d_thres, double disparity_margin);

// 3D IoU cost matchers. 3DCES gates candidates by epipolar line search,
// 3DCME exhausts all right RoIs.
MatchSet match_3dces(const CalibrationSet& calib, const std::vector<BBox2D>& s2,
                     const std::vector<BBox2D>& s3, const PointCloud& cloud,
                     const MatchConfig& config, int jobs = 1);
MatchSet match_3dcme(const CalibrationSet& calib, const std::vector<BBox2D>& s2,
                     const std::vector<BBox2D>& s3, const PointCloud& cloud,
                     const MatchConfig& config, int jobs = 1);

// Regional similarity (ZNCC) matchers. RSCCC adds the left-right
// consistency check and returns the intersection of both passes.
MatchSet match_rsc(const GrayImage& left_image, const GrayImage& right_image,
                   const CalibrationSet& calib, const std::vector<BBox2D>& s2,
                   const std::vector<BBox2D>& s3, const PointCloud& cloud,
                   const MatchConfig& config, int jobs = 1);
MatchSet match_rsccc(const GrayImage& left_image, const GrayImage& right_image,
                     const CalibrationSet& calib, const std::vector<BBox2D>& s2,
                     const std::vector<BBox2D>& s3, const PointCloud& cloud,
                     const MatchConfig& config, int jobs = 1);

// Context-taking variants; the plain ones above wrap prepare_frustums and
// these. Split out so benchmarks can time projection and matching apart.
MatchSet match_3dces_with(const FrustumContext& ctx, const CalibrationSet& calib,
                          const std::vector<BBox2D>& s2, const std::vector<BBox2D>& s3,
                          const MatchConfig& config, int jobs = 1);
MatchSet match_3dcme_with(const FrustumContext& ctx, const CalibrationSet& calib,
                          const std::vector<BBox2D>& s2, const std::vector<BBox2D>& s3,
                          const MatchConfig& config, int jobs = 1);
MatchSet match_rsc_with(const FrustumContext& ctx, const GrayImage& left_image,
                        const GrayImage& right_image, const CalibrationSet& calib,
                        const std::vector<BBox2D>& s2, const std::vector<BBox2D>& s3,
                        const MatchConfig& config, int jobs = 1);
MatchSet match_rsccc_with(const FrustumContext& ctx, const GrayImage& left_image,
                          const GrayImage& right_image, const CalibrationSet& calib,
                          const std::vector<BBox2D>& s2, const std::vector<BBox2D>& s3,
                          const MatchConfig& config, int jobs = 1);

/// Stereo-frustums intersection per accepted pair, with class and score
/// inherited from the left detection.
std::vector<Segment> segment_scene(const MatchSet& matches, const CalibrationSet& calib,
                                   const PointCloud& cloud, const std::vector<BBox2D>& s2,
                                   const std::vector<BBox2D>& s3, int jobs = 1);
std::vector<Segment> segment_scene_with(const FrustumContext& ctx, const MatchSet& matches,
                                        const std::vector<BBox2D>& s2,
                                        const std::vector<BBox2D>& s3);

}  // namespace sfm
