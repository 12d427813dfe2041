#pragma once

#include <Eigen/Core>
#include <vector>

#include "sfm/kitti_io.hpp"

namespace sfm {

/// Quantities derived once from a RawCalibration: intrinsics, stereo
/// translation, fundamental matrix and the velodyne-to-image chain.
struct CalibrationSet {
    Eigen::Matrix3d k_c2;       // left intrinsics
    Eigen::Matrix3d k_c3;       // right intrinsics
    Eigen::Vector3d c_2;        // last column of P_rect^(2)
    Eigen::Vector3d c_3;        // last column of P_rect^(3)
    Eigen::Vector3d t_c2_c3;    // left -> right camera translation, meters
    Eigen::Matrix3d f_mat;      // fundamental matrix, max-abs entry scaled to 1
    Eigen::Matrix3d r0_rect;
    Eigen::Matrix<double, 3, 4> tr_velo_to_cam;
    Eigen::Matrix<double, 3, 4> p_rect_2;
    Eigen::Matrix<double, 3, 4> p_rect_3;

    double baseline() const { return t_c2_c3.norm(); }
};

/// Epipolar line a*u + b*v + c = 0 with a^2 + b^2 = 1, so point_line_distance
/// is a true pixel distance. Sign fixed so c >= 0 (a >= 0 when c == 0).
struct EpipolarLine {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

struct ProjectedPoint {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
    bool valid = false;
};

CalibrationSet derive_calibration(const RawCalibration& raw);

EpipolarLine epipolar_line_l2r(const CalibrationSet& calib, const Eigen::Vector2d& left_px);
EpipolarLine epipolar_line_r2l(const CalibrationSet& calib, const Eigen::Vector2d& right_px);

inline double point_line_distance(const Eigen::Vector2d& p, const EpipolarLine& e) {
    return std::abs(e.a * p.x() + e.b * p.y() + e.c);
}

/// Projects every point through P_rect * R0_rect * Tr_velo_to_cam. Points at
/// or behind the camera plane (depth <= 1e-3 m) are flagged invalid, never
/// dropped, so output index i corresponds to cloud point i.
std::vector<ProjectedPoint> project_velo_to_image(const CalibrationSet& calib,
                                                  const PointCloud& cloud, View cam,
                                                  int jobs = 1);

}  // namespace sfm
