#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sfm/match_set.hpp"

namespace sfm {

enum class View { Left, Right };

/// Matrices as they appear in a KITTI object-benchmark calib file.
struct RawCalibration {
    std::map<int, Eigen::Matrix<double, 3, 4>> p_rect;  // camera id -> P_rect^(i)
    Eigen::Matrix3d r0_rect;
    Eigen::Matrix<double, 3, 4> tr_velo_to_cam;
};

struct LidarPoint {
    float x = 0.f;
    float y = 0.f;
    float z = 0.f;
    float reflectance = 0.f;

    friend bool operator==(const LidarPoint&, const LidarPoint&) = default;
};
static_assert(sizeof(LidarPoint) == 16, "velodyne record layout");

struct PointCloud {
    std::vector<LidarPoint> points;
    // Out-of-range reflectance values are clamped on load; this counts them.
    std::size_t clamped_reflectance = 0;

    std::size_t size() const { return points.size(); }
};

struct Detection2D {
    View view = View::Left;
    std::string class_label;
    double score = 0.0;
    double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
};

/// Parses a KITTI object calib file ("Pi:", "R0_rect:", "Tr_velo_to_cam:"
/// lines). Unknown keys are ignored. Requires P2, P3, R0_rect and
/// Tr_velo_to_cam to be present.
RawCalibration parse_calibration(std::string_view text);
RawCalibration load_calibration(const std::string& path);

/// Decodes a velodyne .bin blob: little-endian float32 quadruples
/// (x, y, z, reflectance). Length must be a multiple of 16.
PointCloud read_velodyne(std::string_view bytes);
PointCloud load_velodyne(const std::string& path);
void write_velodyne(const PointCloud& cloud, std::ostream& out);

/// One detection per line: "class score x1 y1 x2 y2". Line number is the
/// RoI id used everywhere downstream.
std::vector<Detection2D> read_detections(std::string_view text, View view);
std::vector<Detection2D> load_detections(const std::string& path, View view);
void write_detections(const std::vector<Detection2D>& dets, std::ostream& out);

void write_matches(const MatchSet& matches, std::ostream& out);
MatchSet read_matches(std::string_view text);
MatchSet load_matches(const std::string& path);

void write_segments(const MatchSet& matches, const PointCloud& cloud,
                    const std::vector<Detection2D>& left_detections,
                    std::ostream& out);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace sfm
