#include "sfm/matcher.hpp"

#include <algorithm>
#include <optional>

#include "sfm/errors.hpp"
#include "sfm/parallel.hpp"

namespace sfm {

namespace {

Eigen::Vector2d center_of(const BBox2D& b) { return {b.center_u, b.center_v}; }

/// Left-view candidates for one right RoI (the reverse pass of RSCCC):
/// centers within d_thres of r's epipolar line, searching rightwards.
std::vector<std::size_t> candidates_reverse(const CalibrationSet& calib, const BBox2D& right_box,
                                            const std::vector<BBox2D>& left_boxes, double d_thres,
                                            double disparity_margin) {
    std::vector<std::size_t> out;
    EpipolarLine line;
    try {
        line = epipolar_line_r2l(calib, center_of(right_box));
    } catch (const DegenerateLine&) {
        return out;
    }
    for (std::size_t i = 0; i < left_boxes.size(); ++i) {
        const auto& l = left_boxes[i];
        if (point_line_distance(center_of(l), line) < d_thres &&
            l.center_u >= right_box.center_u - disparity_margin) {
            out.push_back(i);
        }
    }
    return out;
}

struct Candidate {
    std::size_t right = 0;
    double cost = 0.0;
    std::vector<std::uint32_t> intersection;
};

/// Shared core of 3DCES / 3DCME: per left RoI, argmax of the 3D IoU cost
/// over the candidate set (zero-overlap candidates skipped), accepted iff
/// the best cost reaches p_3d_thres. Ties go to the smaller right id.
MatchSet match_iou_core(const FrustumContext& ctx, const CalibrationSet& calib,
                        const std::vector<BBox2D>& s2, const std::vector<BBox2D>& s3,
                        const MatchConfig& config, bool epipolar_gate, Algorithm algo, int jobs) {
    std::vector<std::optional<MatchPair>> slots(s2.size());
    parallel_for(s2.size(), jobs, [&](std::size_t i) {
        std::vector<std::size_t> cands;
        if (epipolar_gate) {
            cands = candidates_by_epipolar(calib, s2[i], s3, config.d_thres,
                                           config.disparity_margin);
        } else {
            cands.resize(s3.size());
            for (std::size_t j = 0; j < s3.size(); ++j) cands[j] = j;
        }
        std::optional<Candidate> best;
        for (const std::size_t j : cands) {
            const auto& a = ctx.left_inliers[i];
            const auto& b = ctx.right_inliers[j];
            if (a.indices.empty() && b.indices.empty()) continue;  // BothEmpty: skip candidate
            auto inter = intersect_indices(a, b);
            if (inter.empty()) continue;  // IoU == 0 excluded from the cost set
            const double uni = static_cast<double>(a.size() + b.size() - inter.size());
            const double iou = static_cast<double>(inter.size()) / uni;
            if (!best || iou > best->cost) best = Candidate{j, iou, std::move(inter)};
        }
        if (best && best->cost >= config.p_3d_thres) {
            MatchPair m;
            m.left_idx = static_cast<std::uint32_t>(i);
            m.right_idx = static_cast<std::uint32_t>(best->right);
            m.cost = best->cost;
            m.cost_kind = CostKind::IoU3D;
            m.intersection_indices = std::move(best->intersection);
            slots[i] = std::move(m);
        }
    });
    MatchSet set;
    set.algorithm = algo;
    for (auto& slot : slots) {
        if (slot) set.pairs.push_back(std::move(*slot));
    }
    return min_intersection_filter(set, config.n_thres);
}

/// Per-box patch resampled once to the alignment size; nullopt when the box
/// covers no pixel centers. align_patches resamples each side independently,
/// so precomputing per box gives the same costs.
std::vector<std::optional<ImagePatch>> aligned_patches(const GrayImage& image,
                                                       const std::vector<BBox2D>& boxes,
                                                       int align_size) {
    std::vector<std::optional<ImagePatch>> out(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        try {
            ImagePatch p = extract_patch(image, boxes[i]);
            out[i] = align_patches(p, p, align_size).first;
        } catch (const EmptyPatch&) {
        }
    }
    return out;
}

double ncc_or_floor(const std::optional<ImagePatch>& a, const std::optional<ImagePatch>& b) {
    if (!a || !b) return -1.0;
    try {
        return ncc(*a, *b);
    } catch (const ZeroVariance&) {
        return -1.0;  // constant patches carry no evidence
    }
}

MatchSet match_ncc_core(const FrustumContext& ctx, const GrayImage& left_image,
                        const GrayImage& right_image, const CalibrationSet& calib,
                        const std::vector<BBox2D>& s2, const std::vector<BBox2D>& s3,
                        const MatchConfig& config, bool consistency_check, int jobs) {
    const auto left_patches = aligned_patches(left_image, s2, config.align_size);
    const auto right_patches = aligned_patches(right_image, s3, config.align_size);

    // M_l: best right candidate per left RoI.
    std::vector<std::optional<MatchPair>> slots(s2.size());
    parallel_for(s2.size(), jobs, [&](std::size_t i) {
        const auto cands =
            candidates_by_epipolar(calib, s2[i], s3, config.d_thres, config.disparity_margin);
        std::optional<std::size_t> best_j;
        double best_cost = 0.0;
        for (const std::size_t j : cands) {
            const double cost = ncc_or_floor(left_patches[i], right_patches[j]);
            if (!best_j || cost > best_cost) {
                best_j = j;
                best_cost = cost;
            }
        }
        if (best_j && best_cost >= config.p_thres) {
            MatchPair m;
            m.left_idx = static_cast<std::uint32_t>(i);
            m.right_idx = static_cast<std::uint32_t>(*best_j);
            m.cost = best_cost;
            m.cost_kind = CostKind::NCC;
            m.intersection_indices =
                intersect_indices(ctx.left_inliers[i], ctx.right_inliers[*best_j]);
            slots[i] = std::move(m);
        }
    });

    std::vector<bool> reverse_ok;
    if (consistency_check) {
        // M_r: best left candidate per right RoI, searching rightwards.
        std::vector<std::optional<std::size_t>> reverse_best(s3.size());
        parallel_for(s3.size(), jobs, [&](std::size_t j) {
            const auto cands =
                candidates_reverse(calib, s3[j], s2, config.d_thres, config.disparity_margin);
            std::optional<std::size_t> best_i;
            double best_cost = 0.0;
            for (const std::size_t i : cands) {
                const double cost = ncc_or_floor(left_patches[i], right_patches[j]);
                if (!best_i || cost > best_cost) {
                    best_i = i;
                    best_cost = cost;
                }
            }
            if (best_i && best_cost >= config.p_thres) reverse_best[j] = best_i;
        });
        reverse_ok.assign(s2.size(), false);
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (!slots[i]) continue;
            const auto& rb = reverse_best[slots[i]->right_idx];
            reverse_ok[i] = rb && *rb == i;
        }
    }

    MatchSet set;
    set.algorithm = consistency_check ? Algorithm::RSCCC : Algorithm::RSC;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i]) continue;
        if (consistency_check && !reverse_ok[i]) continue;
        set.pairs.push_back(std::move(*slots[i]));
    }
    return min_intersection_filter(set, config.n_thres);
}

}  // namespace

FrustumContext prepare_frustums(const CalibrationSet& calib, const PointCloud& cloud,
                                const std::vector<BBox2D>& s2, const std::vector<BBox2D>& s3,
                                int jobs) {
    FrustumContext ctx;
    ctx.left_projected = project_velo_to_image(calib, cloud, View::Left, jobs);
    ctx.right_projected = project_velo_to_image(calib, cloud, View::Right, jobs);
    ctx.left_inliers.resize(s2.size());
    parallel_for(s2.size(), jobs, [&](std::size_t i) {
        ctx.left_inliers[i] = frustum_inliers(ctx.left_projected, s2[i],
                                              static_cast<std::uint32_t>(i));
    });
    ctx.right_inliers.resize(s3.size());
    parallel_for(s3.size(), jobs, [&](std::size_t j) {
        ctx.right_inliers[j] = frustum_inliers(ctx.right_projected, s3[j],
                                               static_cast<std::uint32_t>(j));
    });
    return ctx;
}

std::vector<std::size_t> candidates_by_epipolar(const CalibrationSet& calib,
                                                const BBox2D& left_box,
                                                const std::vector<BBox2D>& right_boxes,
                                                double d_thres, double disparity_margin) {
    std::vector<std::size_t> out;
    EpipolarLine line;
    try {
        line = epipolar_line_l2r(calib, center_of(left_box));
    } catch (const DegenerateLine&) {
        return out;
    }
    for (std::size_t j = 0; j < right_boxes.size(); ++j) {
        const auto& r = right_boxes[j];
        if (point_line_distance(center_of(r), line) < d_thres &&
            r.center_u <= left_box.center_u + disparity_margin) {
            out.push_back(j);
        }
    }
    return out;
}

MatchSet match_3dces_with(const FrustumContext& ctx, const CalibrationSet& calib,
                          const std::vector<BBox2D>& s2, const std::vector<BBox2D>& s3,
                          const MatchConfig& config, int jobs) {
    return match_iou_core(ctx, calib, s2, s3, config, /*epipolar_gate=*/true,
                          Algorithm::ThreeDCES, jobs);
}

MatchSet match_3dcme_with(const FrustumContext& ctx, const CalibrationSet& calib,
                          const std::vector<BBox2D>& s2, const std::vector<BBox2D>& s3,
                          const MatchConfig& config, int jobs) {
    return match_iou_core(ctx, calib, s2, s3, config, /*epipolar_gate=*/false,
                          Algorithm::ThreeDCME, jobs);
}

MatchSet match_rsc_with(const FrustumContext& ctx, const GrayImage& left_image,
                        const GrayImage& right_image, const CalibrationSet& calib,
                        const std::vector<BBox2D>& s2, const std::vector<BBox2D>& s3,
                        const MatchConfig& config, int jobs) {
    return match_ncc_core(ctx, left_image, right_image, calib, s2, s3, config,
                          /*consistency_check=*/false, jobs);
}

MatchSet match_rsccc_with(const FrustumContext& ctx, const GrayImage& left_image,
                          const GrayImage& right_image, const CalibrationSet& calib,
                          const std::vector<BBox2D>& s2, const std::vector<BBox2D>& s3,
                          const MatchConfig& config, int jobs) {
    return match_ncc_core(ctx, left_image, right_image, calib, s2, s3, config,
                          /*consistency_check=*/true, jobs);
}

MatchSet match_3dces(const CalibrationSet& calib, const std::vector<BBox2D>& s2,
                     const std::vector<BBox2D>& s3, const PointCloud& cloud,
                     const MatchConfig& config, int jobs) {
    return match_3dces_with(prepare_frustums(calib, cloud, s2, s3, jobs), calib, s2, s3, config,
                            jobs);
}

MatchSet match_3dcme(const CalibrationSet& calib, const std::vector<BBox2D>& s2,
                     const std::vector<BBox2D>& s3, const PointCloud& cloud,
                     const MatchConfig& config, int jobs) {
    return match_3dcme_with(prepare_frustums(calib, cloud, s2, s3, jobs), calib, s2, s3, config,
                            jobs);
}

MatchSet match_rsc(const GrayImage& left_image, const GrayImage& right_image,
                   const CalibrationSet& calib, const std::vector<BBox2D>& s2,
                   const std::vector<BBox2D>& s3, const PointCloud& cloud,
                   const MatchConfig& config, int jobs) {
    return match_rsc_with(prepare_frustums(calib, cloud, s2, s3, jobs), left_image, right_image,
                          calib, s2, s3, config, jobs);
}

MatchSet match_rsccc(const GrayImage& left_image, const GrayImage& right_image,
                     const CalibrationSet& calib, const std::vector<BBox2D>& s2,
                     const std::vector<BBox2D>& s3, const PointCloud& cloud,
                     const MatchConfig& config, int jobs) {
    return match_rsccc_with(prepare_frustums(calib, cloud, s2, s3, jobs), left_image, right_image,
                            calib, s2, s3, config, jobs);
}

std::vector<Segment> segment_scene_with(const FrustumContext& ctx, const MatchSet& matches,
                                        const std::vector<BBox2D>& s2,
                                        const std::vector<BBox2D>& s3) {
    std::vector<Segment> out;
    out.reserve(matches.pairs.size());
    for (const auto& m : matches.pairs) {
        if (m.left_idx >= s2.size() || m.right_idx >= s3.size()) {
            throw IndexOutOfRange("match references unknown RoI");
        }
        Segment seg;
        seg.left_idx = m.left_idx;
        seg.right_idx = m.right_idx;
        seg.class_label = s2[m.left_idx].class_label;
        seg.score = s2[m.left_idx].score;
        seg.indices =
            intersect_indices(ctx.left_inliers[m.left_idx], ctx.right_inliers[m.right_idx]);
        out.push_back(std::move(seg));
    }
    return out;
}

std::vector<Segment> segment_scene(const MatchSet& matches, const CalibrationSet& calib,
                                   const PointCloud& cloud, const std::vector<BBox2D>& s2,
                                   const std::vector<BBox2D>& s3, int jobs) {
    return segment_scene_with(prepare_frustums(calib, cloud, s2, s3, jobs), matches, s2, s3);
}

}  // namespace sfm
