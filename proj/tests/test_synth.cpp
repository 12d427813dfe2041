#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "sfm/errors.hpp"
#include "sfm/eval_bench.hpp"
#include "sfm/matcher.hpp"
#include "sfm/synth.hpp"

using namespace sfm;

namespace {

std::vector<BBox2D> enlarged_boxes(const std::vector<Detection2D>& dets, double s, int w,
                                   int h) {
    std::vector<BBox2D> out;
    for (const auto& d : dets) {
        out.push_back(enlarge_bbox(BBox2D::from_detection(d), s, w, h));
    }
    return out;
}

}  // namespace

TEST_CASE("single-object scene produces one detection per view and one gt pair") {
    SynthParams params;
    params.object_count = 1;
    params.seed = 5;
    const SyntheticScene scene = generate_scene(params);
    CHECK(scene.left_detections.size() == 1);
    CHECK(scene.right_detections.size() == 1);
    REQUIRE(scene.gt_pairs.size() == 1);
    CHECK(scene.gt_pairs[0] == std::pair<int, int>(0, 0));

    const MatchSet oracle = gt_match_oracle(scene);
    REQUIRE(oracle.pairs.size() == 1);
    CHECK(oracle.pairs[0].left_idx == 0);
    CHECK(oracle.pairs[0].right_idx == 0);
}

TEST_CASE("three-object scene yields three gt pairs") {
    SynthParams params;
    params.object_count = 3;
    params.seed = 8;
    const SyntheticScene scene = generate_scene(params);
    CHECK(scene.gt_pairs.size() == 3);
    CHECK(scene.left_detections.size() == 3);
    CHECK(scene.right_detections.size() == 3);
}

TEST_CASE("detection disparity follows the pinhole formula") {
    SynthParams params;
    params.object_count = 1;
    params.baseline = 0.54;
    params.focal = 700.0;
    params.depth_min = 19.999;
    params.depth_max = 20.001;
    params.seed = 3;
    const SyntheticScene scene = generate_scene(params);
    REQUIRE(scene.gt_pairs.size() == 1);
    const auto& l = scene.left_detections[0];
    const auto& r = scene.right_detections[0];
    const double disparity = (l.x1 + l.x2) / 2.0 - (r.x1 + r.x2) / 2.0;
    // f*b/z = 700*0.54/20 = 18.9, slack for the box-surface extent of the
    // object (its faces span a small depth range around 20 m).
    CHECK(disparity == doctest::Approx(18.9).epsilon(0.08));
}

TEST_CASE("same seed reproduces the scene exactly, different seed does not") {
    SynthParams params;
    params.object_count = 4;
    params.seed = 99;
    const SyntheticScene a = generate_scene(params);
    const SyntheticScene b = generate_scene(params);
    REQUIRE(a.cloud.size() == b.cloud.size());
    CHECK(std::memcmp(a.cloud.points.data(), b.cloud.points.data(), a.cloud.size() * 16) == 0);
    CHECK(a.left_image.pixels == b.left_image.pixels);
    CHECK(a.gt_pairs == b.gt_pairs);

    params.seed = 100;
    const SyntheticScene c = generate_scene(params);
    CHECK(a.cloud.points[0].x != c.cloud.points[0].x);
}

TEST_CASE("scene projections satisfy the epipolar constraint") {
    SynthParams params;
    params.object_count = 3;
    params.seed = 44;
    const SyntheticScene scene = generate_scene(params);
    const auto left = project_velo_to_image(scene.calib, scene.cloud, View::Left);
    const auto right = project_velo_to_image(scene.calib, scene.cloud, View::Right);
    double max_residual = 0.0;
    for (std::size_t i = 0; i < left.size(); ++i) {
        if (!left[i].valid || !right[i].valid) continue;
        const EpipolarLine e = epipolar_line_l2r(scene.calib, {left[i].u, left[i].v});
        max_residual = std::max(max_residual, point_line_distance({right[i].u, right[i].v}, e));
    }
    // float32 cloud storage bounds the attainable residual
    CHECK(max_residual < 1e-2);
}

TEST_CASE("matcher output equals a brute-force max-IoU assignment at zero noise") {
    for (std::uint64_t seed = 200; seed < 220; ++seed) {
        SynthParams params;
        params.object_count = 2 + static_cast<int>(seed % 6);
        params.seed = seed;
        params.render_images = false;
        const SyntheticScene scene = generate_scene(params);
        MatchConfig cfg;
        const auto s2 = enlarged_boxes(scene.left_detections, cfg.s_enlarge, scene.image_width,
                                       scene.image_height);
        const auto s3 = enlarged_boxes(scene.right_detections, cfg.s_enlarge,
                                       scene.image_width, scene.image_height);
        const FrustumContext ctx = prepare_frustums(scene.calib, scene.cloud, s2, s3);

        // oracle: per left RoI, exhaustive argmax of the point-set IoU
        std::vector<std::pair<int, int>> oracle;
        for (std::size_t li = 0; li < s2.size(); ++li) {
            double best = -1.0;
            int best_r = -1;
            for (std::size_t ri = 0; ri < s3.size(); ++ri) {
                const auto& a = ctx.left_inliers[li];
                const auto& b = ctx.right_inliers[ri];
                if (a.indices.empty() && b.indices.empty()) continue;
                const double iou = iou_3d_cost(a, b);
                if (iou > best) {
                    best = iou;
                    best_r = static_cast<int>(ri);
                }
            }
            if (best >= cfg.p_3d_thres &&
                intersection_count(ctx.left_inliers[li], ctx.right_inliers[best_r]) >=
                    static_cast<std::size_t>(cfg.n_thres)) {
                oracle.emplace_back(static_cast<int>(li), best_r);
            }
        }

        const MatchSet m = match_3dcme_with(ctx, scene.calib, s2, s3, cfg);
        std::vector<std::pair<int, int>> got;
        for (const auto& p : m.pairs) {
            got.emplace_back(static_cast<int>(p.left_idx), static_cast<int>(p.right_idx));
        }
        CHECK(got == oracle);

        const auto truth = scene.gt_pairs;
        const MatchReport pr = match_pr(m, truth);
        CHECK(pr.precision == 1.0);
        CHECK(pr.recall == 1.0);
    }
}

TEST_CASE("write_scene emits files that round-trip through the readers") {
    SynthParams params;
    params.object_count = 2;
    params.seed = 61;
    const SyntheticScene scene = generate_scene(params);
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "sfm_synth_roundtrip";
    std::filesystem::remove_all(dir);
    write_scene(scene, dir.string());

    const RawCalibration raw = load_calibration((dir / "calib.txt").string());
    const CalibrationSet calib = derive_calibration(raw);
    CHECK(calib.baseline() == doctest::Approx(scene.calib.baseline()).epsilon(1e-9));

    const PointCloud cloud = load_velodyne((dir / "velodyne.bin").string());
    REQUIRE(cloud.size() == scene.cloud.size());
    CHECK(std::memcmp(cloud.points.data(), scene.cloud.points.data(), cloud.size() * 16) == 0);

    const auto ld = load_detections((dir / "detections_left.txt").string(), View::Left);
    const auto rd = load_detections((dir / "detections_right.txt").string(), View::Right);
    REQUIRE(ld.size() == scene.left_detections.size());
    CHECK(ld[0].x1 == scene.left_detections[0].x1);
    CHECK(rd.size() == scene.right_detections.size());
    CHECK(std::filesystem::exists(dir / "left.png"));
    CHECK(std::filesystem::exists(dir / "right.png"));
    CHECK(std::filesystem::exists(dir / "gt_pairs.txt"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("invalid depth range is rejected") {
    SynthParams params;
    params.depth_min = 10.0;
    params.depth_max = 5.0;
    CHECK_THROWS_AS(generate_scene(params), PlacementFailure);
}
