#include "sfm/calib_geometry.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "sfm/errors.hpp"
#include "sfm/parallel.hpp"

namespace sfm {

namespace {

constexpr double kMinDepth = 1e-3;  // meters

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& t) {
    Eigen::Matrix3d m;
    m << 0.0, -t.z(), t.y(), t.z(), 0.0, -t.x(), -t.y(), t.x(), 0.0;
    return m;
}

Eigen::Matrix3d invert_intrinsics(const Eigen::Matrix3d& k, const char* which) {
    Eigen::FullPivLU<Eigen::Matrix3d> lu(k);
    if (!lu.isInvertible()) throw SingularIntrinsics(which);
    return lu.inverse();
}

EpipolarLine normalize_line(const Eigen::Vector3d& e) {
    const double norm = std::hypot(e.x(), e.y());
    if (norm <= 1e-14 * std::max(1.0, std::abs(e.z()))) {
        throw DegenerateLine("point maps to the epipole");
    }
    EpipolarLine line{e.x() / norm, e.y() / norm, e.z() / norm};
    const bool flip = line.c < 0.0 || (line.c == 0.0 && (line.a < 0.0 || (line.a == 0.0 && line.b < 0.0)));
    if (flip) {
        line.a = -line.a;
        line.b = -line.b;
        line.c = -line.c;
    }
    return line;
}

}  // namespace

CalibrationSet derive_calibration(const RawCalibration& raw) {
    CalibrationSet c;
    c.p_rect_2 = raw.p_rect.at(2);
    c.p_rect_3 = raw.p_rect.at(3);
    c.k_c2 = c.p_rect_2.leftCols<3>();
    c.k_c3 = c.p_rect_3.leftCols<3>();
    c.c_2 = c.p_rect_2.col(3);
    c.c_3 = c.p_rect_3.col(3);
    c.r0_rect = raw.r0_rect;
    c.tr_velo_to_cam = raw.tr_velo_to_cam;

    const Eigen::Matrix3d k2_inv = invert_intrinsics(c.k_c2, "K_c2");
    const Eigen::Matrix3d k3_inv = invert_intrinsics(c.k_c3, "K_c3");

    c.t_c2_c3 = k2_inv * c.c_2 - k3_inv * c.c_3;

    Eigen::Matrix3d f = k3_inv.transpose() * cross_matrix(c.t_c2_c3) * k2_inv;
    // F is defined up to scale; pin the largest-magnitude entry to 1.
    Eigen::Index r = 0, col = 0;
    f.cwiseAbs().maxCoeff(&r, &col);
    const double pivot = f(r, col);
    if (pivot == 0.0) throw SingularIntrinsics("zero fundamental matrix (zero baseline)");
    c.f_mat = f / pivot;
    return c;
}

EpipolarLine epipolar_line_l2r(const CalibrationSet& calib, const Eigen::Vector2d& left_px) {
    return normalize_line(calib.f_mat * left_px.homogeneous());
}

EpipolarLine epipolar_line_r2l(const CalibrationSet& calib, const Eigen::Vector2d& right_px) {
    return normalize_line(calib.f_mat.transpose() * right_px.homogeneous());
}

std::vector<ProjectedPoint> project_velo_to_image(const CalibrationSet& calib,
                                                  const PointCloud& cloud, View cam, int jobs) {
    const Eigen::Matrix<double, 3, 4>& p = (cam == View::Left) ? calib.p_rect_2 : calib.p_rect_3;
    // Fold R0_rect * Tr_velo_to_cam into one 3x4 transform.
    Eigen::Matrix<double, 3, 4> velo_to_rect = calib.r0_rect * calib.tr_velo_to_cam;

    std::vector<ProjectedPoint> out(cloud.size());
    parallel_for(cloud.size(), jobs, [&](std::size_t i) {
        const auto& pt = cloud.points[i];
        const Eigen::Vector4d x(pt.x, pt.y, pt.z, 1.0);
        const Eigen::Vector3d x_rect = velo_to_rect * x;
        ProjectedPoint& q = out[i];
        q.depth = x_rect.z();
        if (q.depth <= kMinDepth) return;  // flagged invalid, index kept
        const Eigen::Vector3d img = p * x_rect.homogeneous();
        if (img.z() <= 0.0) return;
        q.u = img.x() / img.z();
        q.v = img.y() / img.z();
        q.valid = true;
    });
    return out;
}

}  // namespace sfm
