#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sfm {

enum class Algorithm { ThreeDCES, ThreeDCME, RSC, RSCCC };

enum class CostKind { NCC, IoU3D };

const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

/// One accepted left-right RoI correspondence. intersection_indices are
/// sorted point ids into the scene cloud; n_intersection() is their count.
struct MatchPair {
    std::uint32_t left_idx = 0;
    std::uint32_t right_idx = 0;
    double cost = 0.0;
    CostKind cost_kind = CostKind::IoU3D;
    std::vector<std::uint32_t> intersection_indices;

    std::size_t n_intersection() const { return intersection_indices.size(); }

    friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct MatchSet {
    Algorithm algorithm = Algorithm::ThreeDCES;
    std::vector<MatchPair> pairs;

    friend bool operator==(const MatchSet&, const MatchSet&) = default;
};

/// A per-object segmented point set: the stereo-frustums intersection with
/// class and score inherited from the left detection.
struct Segment {
    std::uint32_t left_idx = 0;
    std::uint32_t right_idx = 0;
    std::string class_label;
    double score = 0.0;
    std::vector<std::uint32_t> indices;
};

}  // namespace sfm
