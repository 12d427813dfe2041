#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfm/calib_geometry.hpp"
#include "sfm/image.hpp"
#include "sfm/kitti_io.hpp"
#include "sfm/match_set.hpp"

namespace sfm {

/// Scene generation knobs. The generator draws from a std::mt19937_64
/// stream mapped to doubles by (x >> 11) * 2^-53, so the same seed gives
/// the same scene on any conforming implementation.
struct SynthParams {
    int object_count = 3;
    double depth_min = 8.0;   // m
    double depth_max = 35.0;  // m
    double baseline = 0.54;   // m, default rectified rig
    double focal = 700.0;     // px, default rectified rig
    int image_width = 1242;
    int image_height = 375;
    int points_per_object = 400;
    int clutter_points = 2000;
    // Fraction of clutter drawn as a 360-degree ring in the velodyne frame
    // (the rest is uniform over the left view's frustum volume).
    double panoramic_clutter = 0.0;
    double bbox_jitter_px = 0.0;
    // Max allowed overlap coefficient (intersection over the smaller box)
    // between any two placed boxes, per view.
    double overlap_cap = 0.05;
    int max_placement_retries = 3000;
    bool render_images = true;
    std::uint64_t seed = 1;
    // Generated rig by default; pass a real calibration to emit frames
    // against it.
    std::optional<RawCalibration> calibration;
};

/// Axis-aligned box in the rectified camera frame.
struct SceneObject {
    Eigen::Vector3d center;  // m
    Eigen::Vector3d size;    // m
};

struct SyntheticScene {
    RawCalibration raw_calib;
    CalibrationSet calib;
    std::vector<SceneObject> objects;
    PointCloud cloud;
    std::vector<Detection2D> left_detections;
    std::vector<Detection2D> right_detections;
    // (left RoI id, right RoI id) per object visible in both views.
    std::vector<std::pair<int, int>> gt_pairs;
    GrayImage left_image;
    GrayImage right_image;
    int image_width = 0;
    int image_height = 0;
    std::uint64_t seed = 0;
};

SyntheticScene generate_scene(const SynthParams& params);

/// Ground-truth correspondences in MatchSet form for direct comparison
/// with matcher output.
MatchSet gt_match_oracle(const SyntheticScene& scene);

/// Serializes a scene in the on-disk formats the CLI consumes: calib.txt,
/// velodyne.bin, detections_left.txt, detections_right.txt, left.png,
/// right.png, gt_pairs.txt.
void write_scene(const SyntheticScene& scene, const std::string& directory);

}  // namespace sfm
