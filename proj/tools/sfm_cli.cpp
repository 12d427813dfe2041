#include <CLI11.hpp>

#include <Eigen/Dense>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "sfm/calib_geometry.hpp"
#include "sfm/errors.hpp"
#include "sfm/eval_bench.hpp"
#include "sfm/frustum.hpp"
#include "sfm/image.hpp"
#include "sfm/kitti_io.hpp"
#include "sfm/matcher.hpp"
#include "sfm/synth.hpp"

namespace {

using namespace sfm;

struct MatchArgs {
    std::string algorithm = "3dces";
    std::string calib_path;
    std::string velodyne_path;
    std::string left_dets_path;
    std::string right_dets_path;
    std::string left_image_path;
    std::string right_image_path;
    std::string matches_out;
    std::string segments_out;
    std::string overlay_out;
    int image_width = 1242;
    int image_height = 375;
    int jobs = 1;
    MatchConfig config;
};

std::vector<BBox2D> to_enlarged_boxes(const std::vector<Detection2D>& dets,
                                      const MatchConfig& cfg, int width, int height) {
    std::vector<BBox2D> boxes;
    boxes.reserve(dets.size());
    for (const auto& d : dets) {
        boxes.push_back(enlarge_bbox(BBox2D::from_detection(d), cfg.s_enlarge, width, height));
    }
    return boxes;
}

int cmd_match(const MatchArgs& args) {
    const Algorithm algo = algorithm_from_string(args.algorithm);
    const bool needs_images = (algo == Algorithm::RSC || algo == Algorithm::RSCCC);
    if (needs_images && (args.left_image_path.empty() || args.right_image_path.empty())) {
        std::cerr << "error: " << args.algorithm
                  << " requires --left-image and --right-image\n";
        return 2;
    }

    const CalibrationSet calib = derive_calibration(load_calibration(args.calib_path));
    const PointCloud cloud = load_velodyne(args.velodyne_path);
    const auto left_dets = load_detections(args.left_dets_path, View::Left);
    const auto right_dets = load_detections(args.right_dets_path, View::Right);

    GrayImage left_image, right_image;
    int width = args.image_width, height = args.image_height;
    if (!args.left_image_path.empty()) {
        left_image = load_png_gray(args.left_image_path);
        right_image = load_png_gray(args.right_image_path);
        width = left_image.width;
        height = left_image.height;
    }

    const auto s2 = to_enlarged_boxes(left_dets, args.config, width, height);
    const auto s3 = to_enlarged_boxes(right_dets, args.config, width, height);

    MatchSet matches;
    switch (algo) {
        case Algorithm::ThreeDCES:
            matches = match_3dces(calib, s2, s3, cloud, args.config, args.jobs);
            break;
        case Algorithm::ThreeDCME:
            matches = match_3dcme(calib, s2, s3, cloud, args.config, args.jobs);
            break;
        case Algorithm::RSC:
            matches = match_rsc(left_image, right_image, calib, s2, s3, cloud, args.config,
                                args.jobs);
            break;
        case Algorithm::RSCCC:
            matches = match_rsccc(left_image, right_image, calib, s2, s3, cloud, args.config,
                                  args.jobs);
            break;
    }

    if (!args.matches_out.empty()) {
        std::ofstream out(args.matches_out);
        write_matches(matches, out);
    } else {
        write_matches(matches, std::cout);
    }
    if (!args.segments_out.empty()) {
        std::ofstream out(args.segments_out);
        write_segments(matches, cloud, left_dets, out);
    }
    if (!args.overlay_out.empty()) {
        GrayImage overlay =
            (right_image.width > 0) ? right_image : GrayImage(width, height, 40);
        for (const auto& b : s2) {
            try {
                const auto line = epipolar_line_l2r(calib, {b.center_u, b.center_v});
                draw_line(overlay, line.a, line.b, line.c, 255);
            } catch (const DegenerateLine&) {
            }
        }
        for (const auto& b : s3) draw_rect(overlay, b.u_min(), b.v_min(), b.u_max(), b.v_max(), 255);
        save_png_gray(overlay, args.overlay_out);
    }
    std::cerr << "matched " << matches.pairs.size() << " of " << s2.size() << " left RoIs ("
              << to_string(algo) << ")\n";
    return 0;
}

int cmd_calib_info(const std::string& calib_path) {
    const CalibrationSet calib = derive_calibration(load_calibration(calib_path));
    std::cout << "K_c2:\n" << calib.k_c2 << "\nK_c3:\n" << calib.k_c3 << "\n";
    std::cout << "t_c2_c3: " << calib.t_c2_c3.transpose() << "\n";
    std::cout << "baseline: " << calib.baseline() << " m\n";
    std::cout << "F (max-abs scaled):\n" << calib.f_mat << "\n";

    // Self-check: random points projected through P2/P3 must land on their
    // epipolar lines.
    std::mt19937_64 eng(12345);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(eng() >> 11) * 0x1.0p-53;
    };
    double max_residual = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Vector3d x(uniform(-20.0, 20.0), uniform(-5.0, 5.0), uniform(5.0, 60.0));
        const Eigen::Vector3d p2 = calib.p_rect_2 * x.homogeneous();
        const Eigen::Vector3d p3 = calib.p_rect_3 * x.homogeneous();
        if (p2.z() <= 0.0 || p3.z() <= 0.0) continue;
        const auto line = epipolar_line_l2r(calib, p2.hnormalized());
        max_residual = std::max(max_residual,
                                point_line_distance(p3.hnormalized(), line));
    }
    std::cout << "epipolar self-check max residual: " << max_residual << " px\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stereo-frustum RoI matching and LiDAR segmentation"};
    app.require_subcommand(1);

    MatchArgs margs;
    if (const char* root = std::getenv("SFM_DATA_ROOT")) {
        (void)root;  // paths below may be given relative to it by the caller's shell
    }
    auto* match = app.add_subcommand("match", "Match stereo detections and segment the cloud");
    match->add_option("--algorithm", margs.algorithm, "3dces|3dcme|rsc|rsccc")
        ->check(CLI::IsMember({"3dces", "3dcme", "rsc", "rsccc"}));
    match->add_option("--calib", margs.calib_path, "KITTI calib file")->required();
    match->add_option("--velodyne", margs.velodyne_path, "velodyne .bin")->required();
    match->add_option("--left-dets", margs.left_dets_path, "left-view detections")->required();
    match->add_option("--right-dets", margs.right_dets_path, "right-view detections")->required();
    match->add_option("--left-image", margs.left_image_path, "left PNG (rsc/rsccc)");
    match->add_option("--right-image", margs.right_image_path, "right PNG (rsc/rsccc)");
    match->add_option("--matches", margs.matches_out, "matches output file (default stdout)");
    match->add_option("--segments", margs.segments_out, "segments output file");
    match->add_option("--dump-overlay", margs.overlay_out,
                      "debug PNG: epipolar lines + right boxes");
    match->add_option("--image-width", margs.image_width, "clip width when no images given");
    match->add_option("--image-height", margs.image_height, "clip height when no images given");
    match->add_option("--jobs", margs.jobs, "worker threads");
    match->add_option("--s-enlarge", margs.config.s_enlarge, "bbox enlargement fraction");
    match->add_option("--n-thres", margs.config.n_thres, "min intersection inliers");
    match->add_option("--d-thres", margs.config.d_thres, "epipolar distance gate, px");
    match->add_option("--p-thres", margs.config.p_thres, "NCC acceptance threshold");
    match->add_option("--p3d-thres", margs.config.p_3d_thres, "3D IoU acceptance threshold");
    match->add_option("--disparity-margin", margs.config.disparity_margin,
                      "search-direction slack, px");
    match->add_option("--align-size", margs.config.align_size, "RoI alignment size, px");

    SynthParams sparams;
    std::string synth_out, synth_calib;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic stereo+LiDAR scene");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", sparams.seed, "scene seed");
    synth->add_option("--objects", sparams.object_count, "object count");
    synth->add_option("--depth-min", sparams.depth_min, "m");
    synth->add_option("--depth-max", sparams.depth_max, "m");
    synth->add_option("--baseline", sparams.baseline, "m");
    synth->add_option("--focal", sparams.focal, "px");
    synth->add_option("--width", sparams.image_width, "px");
    synth->add_option("--height", sparams.image_height, "px");
    synth->add_option("--points-per-object", sparams.points_per_object, "surface samples");
    synth->add_option("--clutter", sparams.clutter_points, "background points");
    synth->add_option("--panoramic-clutter", sparams.panoramic_clutter,
                      "fraction of clutter spread over 360 degrees");
    synth->add_option("--jitter", sparams.bbox_jitter_px, "bbox jitter, px");
    synth->add_option("--overlap-cap", sparams.overlap_cap,
                      "max overlap coefficient (intersection over smaller box) between placed boxes");
    synth->add_option("--calib", synth_calib, "generate against an existing calib file");
    bool no_images = false;
    synth->add_flag("--no-images", no_images, "skip image rendering");

    int bench_scenes = 100, bench_rois = 15, bench_points = 100000, bench_reps = 3;
    std::uint64_t bench_seed = 7;
    std::string bench_out, bench_records;
    std::vector<std::string> bench_algos;
    auto* bench = app.add_subcommand("bench", "Per-phase runtime benchmark");
    bench->add_option("--scenes", bench_scenes, "scene count");
    bench->add_option("--rois", bench_rois, "RoIs per view");
    bench->add_option("--points", bench_points, "cloud points per scene");
    bench->add_option("--repetitions", bench_reps, "repetitions (median)");
    bench->add_option("--seed", bench_seed, "workload seed");
    bench->add_option("--out", bench_out, "table output file (default stdout)");
    bench->add_option("--records", bench_records, "JSON records file");
    bench->add_option("--algorithms", bench_algos, "subset to run (default all)")
        ->check(CLI::IsMember({"3dces", "3dcme", "rsc", "rsccc"}));

    std::string info_calib;
    auto* info = app.add_subcommand("calib-info", "Print derived calibration quantities");
    info->add_option("--calib", info_calib, "KITTI calib file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (match->parsed()) return cmd_match(margs);
        if (synth->parsed()) {
            sparams.render_images = !no_images;
            if (!synth_calib.empty()) sparams.calibration = load_calibration(synth_calib);
            const SyntheticScene scene = generate_scene(sparams);
            write_scene(scene, synth_out);
            std::cerr << "wrote scene (" << scene.cloud.size() << " points, "
                      << scene.gt_pairs.size() << " gt pairs) to " << synth_out << "\n";
            return 0;
        }
        if (bench->parsed()) {
            const BenchWorkload workload =
                make_bench_workload(bench_scenes, bench_rois, bench_points, bench_seed);
            std::vector<Algorithm> algos;
            for (const auto& a : bench_algos) algos.push_back(algorithm_from_string(a));
            const auto timings = bench_phases(workload, bench_reps, algos);
            if (bench_out.empty()) {
                write_bench_table(timings, std::cout);
            } else {
                std::ofstream out(bench_out);
                write_bench_table(timings, out);
            }
            if (!bench_records.empty()) {
                std::ofstream out(bench_records);
                write_bench_records(timings, out);
            }
            return 0;
        }
        if (info->parsed()) return cmd_calib_info(info_calib);
    } catch (const sfm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
