#include "sfm/synth.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "sfm/errors.hpp"
#include "sfm/frustum.hpp"

namespace sfm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Deterministic draws; doubles come from the raw 64-bit stream so the
/// sequence does not depend on library distribution internals.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  private:
    std::mt19937_64 eng_;
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double hash01(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    const std::uint64_t h = splitmix64(a ^ splitmix64(b ^ splitmix64(c)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

RawCalibration default_rig(const SynthParams& p) {
    RawCalibration raw;
    Eigen::Matrix<double, 3, 4> p2 = Eigen::Matrix<double, 3, 4>::Zero();
    p2(0, 0) = p.focal;
    p2(1, 1) = p.focal;
    p2(0, 2) = p.image_width / 2.0;
    p2(1, 2) = p.image_height / 2.0;
    p2(2, 2) = 1.0;
    Eigen::Matrix<double, 3, 4> p3 = p2;
    p3(0, 3) = -p.focal * p.baseline;
    raw.p_rect[2] = p2;
    raw.p_rect[3] = p3;
    raw.r0_rect = Eigen::Matrix3d::Identity();
    // velodyne: x forward, y left, z up; camera: x right, y down, z forward
    raw.tr_velo_to_cam << 0, -1, 0, 0, 0, 0, -1, 0, 1, 0, 0, 0;
    return raw;
}

Eigen::Matrix4d velo_from_rect_transform(const RawCalibration& raw) {
    Eigen::Matrix4d rect_from_velo = Eigen::Matrix4d::Identity();
    rect_from_velo.topLeftCorner<3, 3>() = raw.r0_rect * raw.tr_velo_to_cam.leftCols<3>();
    rect_from_velo.topRightCorner<3, 1>() = raw.r0_rect * raw.tr_velo_to_cam.col(3);
    return rect_from_velo.inverse();
}

Eigen::Vector2d project_rect(const Eigen::Matrix<double, 3, 4>& p, const Eigen::Vector3d& x) {
    const Eigen::Vector3d img = p * x.homogeneous();
    return {img.x() / img.z(), img.y() / img.z()};
}

struct Extent2D {
    double u0 = 0, v0 = 0, u1 = 0, v1 = 0;
    // Overlap coefficient: intersection over the smaller box. Unlike IoU this
    // catches a large near box swallowing a small far one, which is what
    // actually breaks patch correlation.
    double overlap(const Extent2D& o) const {
        const double iu0 = std::max(u0, o.u0), iv0 = std::max(v0, o.v0);
        const double iu1 = std::min(u1, o.u1), iv1 = std::min(v1, o.v1);
        if (iu1 <= iu0 || iv1 <= iv0) return 0.0;
        const double inter = (iu1 - iu0) * (iv1 - iv0);
        const double smaller =
            std::min((u1 - u0) * (v1 - v0), (o.u1 - o.u0) * (o.v1 - o.v0));
        return inter / smaller;
    }
};

Extent2D project_corners(const Eigen::Matrix<double, 3, 4>& p, const SceneObject& obj) {
    Extent2D e{1e30, 1e30, -1e30, -1e30};
    for (int mask = 0; mask < 8; ++mask) {
        const Eigen::Vector3d corner =
            obj.center + 0.5 * Eigen::Vector3d((mask & 1) ? obj.size.x() : -obj.size.x(),
                                               (mask & 2) ? obj.size.y() : -obj.size.y(),
                                               (mask & 4) ? obj.size.z() : -obj.size.z());
        const Eigen::Vector2d uv = project_rect(p, corner);
        e.u0 = std::min(e.u0, uv.x());
        e.v0 = std::min(e.v0, uv.y());
        e.u1 = std::max(e.u1, uv.x());
        e.v1 = std::max(e.v1, uv.y());
    }
    return e;
}

/// Uniform point on the surface of an axis-aligned box.
Eigen::Vector3d sample_box_surface(Rng& rng, const SceneObject& obj) {
    const double ax = obj.size.y() * obj.size.z();  // +-x faces
    const double ay = obj.size.x() * obj.size.z();  // +-y faces
    const double az = obj.size.x() * obj.size.y();  // +-z faces
    const double total = 2.0 * (ax + ay + az);
    double pick = rng.uniform(0.0, total);
    const double s = rng.uniform(-0.5, 0.5);
    const double t = rng.uniform(-0.5, 0.5);
    const double sign = (rng.uniform01() < 0.5) ? -0.5 : 0.5;
    Eigen::Vector3d local;
    if (pick < 2.0 * ax) {
        local = {sign * obj.size.x(), s * obj.size.y(), t * obj.size.z()};
    } else if (pick < 2.0 * (ax + ay)) {
        local = {s * obj.size.x(), sign * obj.size.y(), t * obj.size.z()};
    } else {
        local = {s * obj.size.x(), t * obj.size.y(), sign * obj.size.z()};
    }
    return obj.center + local;
}

void paint_object_texture(GrayImage& img, const Extent2D& box, std::uint64_t pattern_key) {
    const int x0 = std::max(static_cast<int>(std::floor(box.u0)), 0);
    const int x1 = std::min(static_cast<int>(std::ceil(box.u1)), img.width - 1);
    const int y0 = std::max(static_cast<int>(std::floor(box.v0)), 0);
    const int y1 = std::min(static_cast<int>(std::ceil(box.v1)), img.height - 1);
    if (x1 < x0 || y1 < y0) return;
    const double f1 = 2.0 + 4.0 * hash01(pattern_key, 1, 0);
    const double f2 = 2.0 + 4.0 * hash01(pattern_key, 2, 0);
    const double p1 = kTwoPi * hash01(pattern_key, 3, 0);
    const double du = std::max(box.u1 - box.u0, 1e-9);
    const double dv = std::max(box.v1 - box.v0, 1e-9);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double s = (x - box.u0) / du;
            const double t = (y - box.v0) / dv;
            // Object-anchored pattern: a sinusoid plus a block-noise field
            // unique to the object, so the same object correlates across
            // views while different objects do not.
            const int bi = std::min(static_cast<int>(s * 8.0), 7);
            const int bj = std::min(static_cast<int>(t * 8.0), 7);
            const double wave = 45.0 * std::sin(kTwoPi * (f1 * s + f2 * t) + p1);
            const double block =
                70.0 * (hash01(pattern_key, 16 + static_cast<std::uint64_t>(bi),
                               static_cast<std::uint64_t>(bj)) -
                        0.5);
            const double val = 128.0 + wave + block;
            img.at(x, y) = static_cast<std::uint8_t>(std::clamp(val, 0.0, 255.0));
        }
    }
}

std::string fmt_calib_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12e", v);
    return buf;
}

}  // namespace

SyntheticScene generate_scene(const SynthParams& params) {
    if (params.baseline <= 0.0 && !params.calibration) {
        throw PlacementFailure("baseline must be positive");
    }
    if (params.depth_max <= params.depth_min || params.depth_min <= 0.0) {
        throw PlacementFailure("depth range must be positive");
    }

    SyntheticScene scene;
    scene.seed = params.seed;
    scene.image_width = params.image_width;
    scene.image_height = params.image_height;
    scene.raw_calib = params.calibration ? *params.calibration : default_rig(params);
    scene.calib = derive_calibration(scene.raw_calib);

    Rng rng(splitmix64(params.seed));
    const auto& p2 = scene.calib.p_rect_2;
    const auto& p3 = scene.calib.p_rect_3;
    const double f2 = scene.calib.k_c2(0, 0);
    const double cx2 = scene.calib.k_c2(0, 2);
    const double baseline_x = std::abs(scene.calib.t_c2_c3.x());

    // Place objects; tight corner extents must stay inside both images and
    // respect the pairwise 2D IoU cap.
    std::vector<Extent2D> left_extents, right_extents;
    const double margin = 4.0;
    for (int k = 0; k < params.object_count; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < params.max_placement_retries && !placed; ++attempt) {
            SceneObject obj;
            const double z = rng.uniform(params.depth_min, params.depth_max);
            obj.size = {rng.uniform(1.5, 2.2), rng.uniform(1.3, 1.8), rng.uniform(2.5, 4.5)};
            const double lo = (margin - cx2) * z / f2 + obj.size.x() / 2.0 + baseline_x;
            const double hi =
                (params.image_width - margin - cx2) * z / f2 - obj.size.x() / 2.0;
            if (hi <= lo) continue;
            obj.center = {rng.uniform(lo, hi), rng.uniform(0.6, 1.2), z};

            const Extent2D le = project_corners(p2, obj);
            const Extent2D re = project_corners(p3, obj);
            const auto inside = [&](const Extent2D& e) {
                return e.u0 >= margin && e.v0 >= margin &&
                       e.u1 <= params.image_width - margin &&
                       e.v1 <= params.image_height - margin;
            };
            if (!inside(le) || !inside(re)) continue;
            bool overlaps = false;
            for (std::size_t o = 0; o < left_extents.size(); ++o) {
                if (le.overlap(left_extents[o]) > params.overlap_cap ||
                    re.overlap(right_extents[o]) > params.overlap_cap) {
                    overlaps = true;
                    break;
                }
            }
            if (overlaps) continue;
            scene.objects.push_back(obj);
            left_extents.push_back(le);
            right_extents.push_back(re);
            placed = true;
        }
        if (!placed) {
            throw PlacementFailure("could not place object " + std::to_string(k) + " after " +
                                   std::to_string(params.max_placement_retries) + " attempts");
        }
    }

    // Sample the cloud: object surface shells first, then uniform clutter
    // over the left view's frustum volume.
    const Eigen::Matrix4d velo_from_rect = velo_from_rect_transform(scene.raw_calib);
    const auto push_rect_point = [&](const Eigen::Vector3d& x_rect, float reflectance) {
        const Eigen::Vector4d x_velo = velo_from_rect * x_rect.homogeneous();
        scene.cloud.points.push_back({static_cast<float>(x_velo.x()),
                                      static_cast<float>(x_velo.y()),
                                      static_cast<float>(x_velo.z()), reflectance});
    };

    std::vector<std::pair<std::size_t, std::size_t>> object_point_ranges;
    for (const auto& obj : scene.objects) {
        const std::size_t begin = scene.cloud.size();
        for (int i = 0; i < params.points_per_object; ++i) {
            push_rect_point(sample_box_surface(rng, obj),
                            static_cast<float>(rng.uniform01()));
        }
        object_point_ranges.emplace_back(begin, scene.cloud.size());
    }
    const Eigen::Matrix3d k2_inv = scene.calib.k_c2.inverse();
    const int panoramic = static_cast<int>(params.clutter_points * params.panoramic_clutter);
    for (int i = 0; i < params.clutter_points - panoramic; ++i) {
        const double u = rng.uniform(0.0, params.image_width);
        const double v = rng.uniform(0.0, params.image_height);
        // Uniform in inverse depth: denser returns nearby, as a scanning
        // LiDAR sees, and a flat disparity distribution in the stereo pair.
        const double inv_near = 1.0 / (params.depth_min * 0.12);
        const double inv_far = 1.0 / (params.depth_max * 1.15);
        const double z = 1.0 / rng.uniform(inv_far, inv_near);
        const Eigen::Vector3d x_rect =
            k2_inv * (z * Eigen::Vector3d(u, v, 1.0) - scene.calib.c_2);
        push_rect_point(x_rect, static_cast<float>(rng.uniform01()));
    }
    for (int i = 0; i < panoramic; ++i) {
        const double azimuth = rng.uniform(0.0, kTwoPi);
        const double radius = rng.uniform(2.0, params.depth_max * 1.2);
        const double height = rng.uniform(-1.7, 1.3);
        scene.cloud.points.push_back({static_cast<float>(radius * std::cos(azimuth)),
                                      static_cast<float>(radius * std::sin(azimuth)),
                                      static_cast<float>(height),
                                      static_cast<float>(rng.uniform01())});
    }

    // Detections: tight bounds of each object's own projected points, as
    // seen through the full velodyne chain on the float32 cloud.
    const auto left_proj = project_velo_to_image(scene.calib, scene.cloud, View::Left);
    const auto right_proj = project_velo_to_image(scene.calib, scene.cloud, View::Right);
    const auto tight_box = [&](const std::vector<ProjectedPoint>& proj, std::size_t begin,
                               std::size_t end) -> std::optional<Extent2D> {
        Extent2D e{1e30, 1e30, -1e30, -1e30};
        int count = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const auto& q = proj[i];
            if (!q.valid || q.u < 0.0 || q.u > params.image_width || q.v < 0.0 ||
                q.v > params.image_height) {
                continue;
            }
            e.u0 = std::min(e.u0, q.u);
            e.v0 = std::min(e.v0, q.v);
            e.u1 = std::max(e.u1, q.u);
            e.v1 = std::max(e.v1, q.v);
            ++count;
        }
        if (count < 20 || e.u1 - e.u0 < 2.0 || e.v1 - e.v0 < 2.0) return std::nullopt;
        return e;
    };

    for (std::size_t k = 0; k < scene.objects.size(); ++k) {
        const auto [begin, end] = object_point_ranges[k];
        auto le = tight_box(left_proj, begin, end);
        auto re = tight_box(right_proj, begin, end);
        const auto jitter = [&](Extent2D& e) {
            if (params.bbox_jitter_px <= 0.0) return;
            e.u0 += rng.uniform(-params.bbox_jitter_px, params.bbox_jitter_px);
            e.v0 += rng.uniform(-params.bbox_jitter_px, params.bbox_jitter_px);
            e.u1 += rng.uniform(-params.bbox_jitter_px, params.bbox_jitter_px);
            e.v1 += rng.uniform(-params.bbox_jitter_px, params.bbox_jitter_px);
            e.u0 = std::clamp(e.u0, 0.0, params.image_width - 2.0);
            e.v0 = std::clamp(e.v0, 0.0, params.image_height - 2.0);
            e.u1 = std::clamp(std::max(e.u1, e.u0 + 2.0), 2.0, double(params.image_width));
            e.v1 = std::clamp(std::max(e.v1, e.v0 + 2.0), 2.0, double(params.image_height));
        };
        const double score = rng.uniform(0.7, 1.0);
        int left_id = -1, right_id = -1;
        if (le) {
            jitter(*le);
            Detection2D d;
            d.view = View::Left;
            d.class_label = "Car";
            d.score = score;
            d.x1 = le->u0;
            d.y1 = le->v0;
            d.x2 = le->u1;
            d.y2 = le->v1;
            left_id = static_cast<int>(scene.left_detections.size());
            scene.left_detections.push_back(std::move(d));
        }
        if (re) {
            jitter(*re);
            Detection2D d;
            d.view = View::Right;
            d.class_label = "Car";
            d.score = score;
            d.x1 = re->u0;
            d.y1 = re->v0;
            d.x2 = re->u1;
            d.y2 = re->v1;
            right_id = static_cast<int>(scene.right_detections.size());
            scene.right_detections.push_back(std::move(d));
        }
        if (left_id >= 0 && right_id >= 0) scene.gt_pairs.emplace_back(left_id, right_id);
    }

    if (params.render_images) {
        scene.left_image = GrayImage(params.image_width, params.image_height);
        scene.right_image = GrayImage(params.image_width, params.image_height);
        for (int view = 0; view < 2; ++view) {
            GrayImage& img = (view == 0) ? scene.left_image : scene.right_image;
            // Smooth low-frequency backdrop, identical in both views: distant
            // background has near-zero disparity and must not decorrelate the
            // margin that box enlargement adds around each object.
            const double bp1 = kTwoPi * hash01(params.seed, 101, 0);
            const double bp2 = kTwoPi * hash01(params.seed, 102, 0);
            for (int y = 0; y < img.height; ++y) {
                for (int x = 0; x < img.width; ++x) {
                    const double val = 110.0 + 20.0 * std::sin(kTwoPi * x / 409.0 + bp1) +
                                       12.0 * std::sin(kTwoPi * y / 131.0 + bp2);
                    img.at(x, y) = static_cast<std::uint8_t>(std::clamp(val, 0.0, 255.0));
                }
            }
        }
        // far to near, so nearer textures overwrite
        std::vector<std::size_t> order(scene.objects.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return scene.objects[a].center.z() > scene.objects[b].center.z();
        });
        for (const std::size_t k : order) {
            const std::uint64_t key = splitmix64(params.seed ^ (0xABCDull + k));
            paint_object_texture(scene.left_image, left_extents[k], key);
            paint_object_texture(scene.right_image, right_extents[k], key);
        }
    }
    return scene;
}

MatchSet gt_match_oracle(const SyntheticScene& scene) {
    MatchSet set;
    set.algorithm = Algorithm::ThreeDCME;
    for (const auto& [l, r] : scene.gt_pairs) {
        MatchPair m;
        m.left_idx = static_cast<std::uint32_t>(l);
        m.right_idx = static_cast<std::uint32_t>(r);
        m.cost = 1.0;
        m.cost_kind = CostKind::IoU3D;
        set.pairs.push_back(std::move(m));
    }
    return set;
}

void write_scene(const SyntheticScene& scene, const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    const fs::path dir(directory);

    std::ostringstream calib;
    for (const auto& [id, m] : scene.raw_calib.p_rect) {
        calib << 'P' << id << ':';
        for (int i = 0; i < 12; ++i) calib << ' ' << fmt_calib_real(m(i / 4, i % 4));
        calib << '\n';
    }
    calib << "R0_rect:";
    for (int i = 0; i < 9; ++i) calib << ' ' << fmt_calib_real(scene.raw_calib.r0_rect(i / 3, i % 3));
    calib << "\nTr_velo_to_cam:";
    for (int i = 0; i < 12; ++i) {
        calib << ' ' << fmt_calib_real(scene.raw_calib.tr_velo_to_cam(i / 4, i % 4));
    }
    calib << '\n';
    write_file((dir / "calib.txt").string(), calib.str());

    {
        std::ofstream out(dir / "velodyne.bin", std::ios::binary);
        write_velodyne(scene.cloud, out);
    }
    {
        std::ofstream out(dir / "detections_left.txt");
        write_detections(scene.left_detections, out);
    }
    {
        std::ofstream out(dir / "detections_right.txt");
        write_detections(scene.right_detections, out);
    }
    if (scene.left_image.width > 0) {
        save_png_gray(scene.left_image, (dir / "left.png").string());
        save_png_gray(scene.right_image, (dir / "right.png").string());
    }
    std::ostringstream gt;
    for (const auto& [l, r] : scene.gt_pairs) gt << l << ' ' << r << '\n';
    write_file((dir / "gt_pairs.txt").string(), gt.str());
}

}  // namespace sfm
