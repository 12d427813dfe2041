#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "sfm/calib_geometry.hpp"
#include "sfm/errors.hpp"
#include "sfm/kitti_io.hpp"

using namespace sfm;

namespace {

RawCalibration identity_calib(const Eigen::Vector3d& c2, const Eigen::Vector3d& c3) {
    RawCalibration raw;
    Eigen::Matrix<double, 3, 4> p = Eigen::Matrix<double, 3, 4>::Zero();
    p.leftCols<3>() = Eigen::Matrix3d::Identity();
    p.col(3) = c2;
    raw.p_rect[2] = p;
    p.col(3) = c3;
    raw.p_rect[3] = p;
    raw.r0_rect = Eigen::Matrix3d::Identity();
    raw.tr_velo_to_cam = Eigen::Matrix<double, 3, 4>::Zero();
    raw.tr_velo_to_cam.leftCols<3>() = Eigen::Matrix3d::Identity();
    return raw;
}

struct RigSampler {
    std::mt19937_64 eng;
    explicit RigSampler(std::uint64_t seed) : eng(seed) {}

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(eng() >> 11) * 0x1.0p-53;
    }

    RawCalibration rig() {
        RawCalibration raw = identity_calib(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero());
        for (int cam : {2, 3}) {
            Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
            k(0, 0) = uniform(400.0, 900.0);
            k(1, 1) = uniform(400.0, 900.0);
            k(0, 2) = uniform(500.0, 700.0);
            k(1, 2) = uniform(150.0, 250.0);
            k(0, 1) = uniform(-0.5, 0.5);
            raw.p_rect[cam].leftCols<3>() = k;
            raw.p_rect[cam].col(3) = Eigen::Vector3d(uniform(-400.0, 400.0),
                                                     uniform(-5.0, 5.0), uniform(-0.5, 0.5));
        }
        return raw;
    }
};

}  // namespace

TEST_CASE("identity rig reproduces the cross-product fundamental matrix") {
    const CalibrationSet calib =
        derive_calibration(identity_calib(Eigen::Vector3d::Zero(), Eigen::Vector3d(-1, 0, 0)));
    CHECK(calib.t_c2_c3.isApprox(Eigen::Vector3d(1, 0, 0)));
    // F proportional to [t]x = [[0,0,0],[0,0,-1],[0,1,0]], scale-normalized so
    // the largest-magnitude entry is 1.
    CHECK(std::abs(calib.f_mat(1, 2)) == doctest::Approx(1.0));
    CHECK(std::abs(calib.f_mat(2, 1)) == doctest::Approx(1.0));
    CHECK(calib.f_mat(1, 2) * calib.f_mat(2, 1) < 0.0);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            if ((r == 1 && c == 2) || (r == 2 && c == 1)) continue;
            CHECK(calib.f_mat(r, c) == doctest::Approx(0.0));
        }
    }
}

TEST_CASE("derive_calibration rejects singular intrinsics") {
    RawCalibration raw = identity_calib(Eigen::Vector3d::Zero(), Eigen::Vector3d(-1, 0, 0));
    raw.p_rect[2](0, 0) = 0.0;
    CHECK_THROWS_AS(derive_calibration(raw), SingularIntrinsics);
}

TEST_CASE("bundled calib: baseline, F normalization, rank deficiency") {
    const CalibrationSet calib =
        derive_calibration(load_calibration(SFM_DATA_DIR "/kitti/calib_000000.txt"));
    CHECK(calib.baseline() == doctest::Approx(0.54).epsilon(0.04));
    CHECK(std::abs(calib.t_c2_c3.x()) >
          10.0 * std::max(std::abs(calib.t_c2_c3.y()), std::abs(calib.t_c2_c3.z())));
    CHECK(calib.f_mat.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(calib.f_mat);
    CHECK(svd.singularValues()(2) < 1e-8 * svd.singularValues()(0));
}

TEST_CASE("bundled calib: projected points land on their epipolar lines") {
    const CalibrationSet calib =
        derive_calibration(load_calibration(SFM_DATA_DIR "/kitti/calib_000000.txt"));
    RigSampler s(2024);
    double max_residual = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Vector3d x(s.uniform(-25.0, 25.0), s.uniform(-4.0, 4.0),
                                s.uniform(4.0, 80.0));
        const Eigen::Vector3d p2 = calib.p_rect_2 * x.homogeneous();
        const Eigen::Vector3d p3 = calib.p_rect_3 * x.homogeneous();
        if (p2.z() <= 0.0 || p3.z() <= 0.0) continue;
        const EpipolarLine e = epipolar_line_l2r(calib, p2.hnormalized());
        max_residual = std::max(max_residual, point_line_distance(p3.hnormalized(), e));
    }
    CHECK(max_residual < 1e-6);
}

TEST_CASE("horizontal-F epipolar lines and the origin case") {
    const CalibrationSet calib =
        derive_calibration(identity_calib(Eigen::Vector3d::Zero(), Eigen::Vector3d(-1, 0, 0)));
    const EpipolarLine e = epipolar_line_l2r(calib, {10.0, 7.0});
    // F*(10,7,1) is proportional to (0,-1,7): the line v = 7.
    CHECK(std::abs(e.b) == doctest::Approx(1.0));
    CHECK(e.a == doctest::Approx(0.0));
    CHECK(e.b * 7.0 + e.c == doctest::Approx(0.0));
    CHECK(point_line_distance({123.0, 7.0}, e) == doctest::Approx(0.0));

    const EpipolarLine origin = epipolar_line_l2r(calib, {0.0, 0.0});
    CHECK(origin.a == doctest::Approx(0.0));
    CHECK(origin.c == doctest::Approx(0.0));
    CHECK(point_line_distance({5.0, 0.0}, origin) == doctest::Approx(0.0));

    const EpipolarLine back = epipolar_line_r2l(calib, {10.0, 7.0});
    CHECK(back.a == doctest::Approx(0.0));
    CHECK(back.b * 7.0 + back.c == doctest::Approx(0.0));
}

TEST_CASE("line normalization invariants and deterministic sign") {
    RigSampler s(55);
    for (int i = 0; i < 1000; ++i) {
        const CalibrationSet calib = derive_calibration(s.rig());
        const EpipolarLine e =
            epipolar_line_l2r(calib, {s.uniform(0.0, 1242.0), s.uniform(0.0, 375.0)});
        CHECK(e.a * e.a + e.b * e.b == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((e.c > 0.0 || (e.c == 0.0 && e.a >= 0.0)));
    }
}

TEST_CASE("rectified rig: epipolar lines through interior points are near-horizontal") {
    const CalibrationSet calib =
        derive_calibration(load_calibration(SFM_DATA_DIR "/kitti/calib_000000.txt"));
    RigSampler s(91);
    for (int i = 0; i < 1000; ++i) {
        const EpipolarLine e =
            epipolar_line_l2r(calib, {s.uniform(0.0, 1242.0), s.uniform(0.0, 375.0)});
        CHECK(std::abs(e.a) < 1e-2);
    }
}

TEST_CASE("point at the epipole yields DegenerateLine") {
    // t_c2_c3 = (10,7,1) with identity intrinsics puts the epipole at pixel
    // (10,7) in both views.
    const CalibrationSet calib =
        derive_calibration(identity_calib(Eigen::Vector3d(10, 7, 1), Eigen::Vector3d::Zero()));
    CHECK_THROWS_AS(epipolar_line_l2r(calib, {10.0, 7.0}), DegenerateLine);
    CHECK_THROWS_AS(epipolar_line_r2l(calib, {10.0, 7.0}), DegenerateLine);
}

TEST_CASE("point_line_distance equals the unnormalized formula") {
    CHECK(point_line_distance({3.0, 7.0}, {0.0, 1.0, -5.0}) == doctest::Approx(2.0));
    std::mt19937_64 eng(17);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(eng() >> 11) * 0x1.0p-53;
    };
    for (int i = 0; i < 1000; ++i) {
        const double a = uniform(-3.0, 3.0), b = uniform(-3.0, 3.0), c = uniform(-100.0, 100.0);
        const double n = std::hypot(a, b);
        if (n < 1e-9) continue;
        const Eigen::Vector2d p(uniform(-500.0, 500.0), uniform(-500.0, 500.0));
        const EpipolarLine e{a / n, b / n, c / n};
        const double oracle = std::abs(a * p.x() + b * p.y() + c) / n;
        CHECK(point_line_distance(p, e) == doctest::Approx(oracle).epsilon(1e-12));
    }
}

TEST_CASE("epipolar containment is symmetric between the views") {
    RigSampler s(7123);
    for (int i = 0; i < 1000; ++i) {
        const CalibrationSet calib = derive_calibration(s.rig());
        const Eigen::Vector3d x(s.uniform(-20.0, 20.0), s.uniform(-5.0, 5.0),
                                s.uniform(5.0, 60.0));
        const Eigen::Vector3d h2 = calib.p_rect_2 * x.homogeneous();
        const Eigen::Vector3d h3 = calib.p_rect_3 * x.homogeneous();
        if (h2.z() <= 0.0 || h3.z() <= 0.0) continue;
        const Eigen::Vector2d p2 = h2.hnormalized(), p3 = h3.hnormalized();
        const double fwd = point_line_distance(p3, epipolar_line_l2r(calib, p2));
        const double bwd = point_line_distance(p2, epipolar_line_r2l(calib, p3));
        CHECK(fwd < 1e-6);
        CHECK(bwd < 1e-6);
    }
}

TEST_CASE("projection with trivial chain and behind-camera flagging") {
    const RawCalibration raw =
        identity_calib(Eigen::Vector3d::Zero(), Eigen::Vector3d(-1, 0, 0));
    const CalibrationSet calib = derive_calibration(raw);
    PointCloud cloud;
    cloud.points.push_back({1.f, 2.f, 5.f, 0.f});
    cloud.points.push_back({1.f, 1.f, 0.f, 0.f});
    cloud.points.push_back({1.f, 1.f, -3.f, 0.f});
    const auto proj = project_velo_to_image(calib, cloud, View::Left);
    REQUIRE(proj.size() == cloud.size());
    CHECK(proj[0].valid);
    CHECK(proj[0].u == doctest::Approx(0.2));
    CHECK(proj[0].v == doctest::Approx(0.4));
    CHECK(proj[0].depth == doctest::Approx(5.0));
    CHECK_FALSE(proj[1].valid);
    CHECK_FALSE(proj[2].valid);
}

TEST_CASE("bundled scan projects a minority of points into the left view") {
    const CalibrationSet calib =
        derive_calibration(load_calibration(SFM_DATA_DIR "/frames/0001/calib.txt"));
    const PointCloud cloud = load_velodyne(SFM_DATA_DIR "/frames/0001/velodyne.bin");
    const auto proj = project_velo_to_image(calib, cloud, View::Left);
    REQUIRE(proj.size() == cloud.size());
    std::size_t in_view = 0;
    for (const auto& p : proj) {
        if (p.valid && p.u >= 0.0 && p.u <= 1242.0 && p.v >= 0.0 && p.v <= 375.0) ++in_view;
    }
    const double fraction = static_cast<double>(in_view) / static_cast<double>(proj.size());
    CHECK(fraction > 0.05);
    CHECK(fraction < 0.5);
}

TEST_CASE("projection is identical across thread counts") {
    const CalibrationSet calib =
        derive_calibration(load_calibration(SFM_DATA_DIR "/frames/0002/calib.txt"));
    const PointCloud cloud = load_velodyne(SFM_DATA_DIR "/frames/0002/velodyne.bin");
    const auto serial = project_velo_to_image(calib, cloud, View::Right, 1);
    const auto parallel = project_velo_to_image(calib, cloud, View::Right, 4);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].valid == parallel[i].valid);
        CHECK(serial[i].u == parallel[i].u);
        CHECK(serial[i].v == parallel[i].v);
    }
}
