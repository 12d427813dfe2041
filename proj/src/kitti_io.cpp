#include "sfm/kitti_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sfm/errors.hpp"

namespace sfm {

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

double parse_real(std::string_view tok) {
    std::string buf(tok);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || buf.empty()) {
        throw MalformedNumber("cannot parse '" + buf + "'");
    }
    if (!std::isfinite(v)) throw MalformedNumber("non-finite value '" + buf + "'");
    return v;
}

std::uint64_t parse_index(std::string_view tok) {
    std::string buf(tok);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(buf.c_str(), &end, 10);
    if (end != buf.c_str() + buf.size() || buf.empty()) {
        throw MalformedNumber("cannot parse index '" + buf + "'");
    }
    return v;
}

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_float(float v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

void check_sink(const std::ostream& out) {
    if (!out) throw SinkFailure("write failed");
}

void for_each_line(std::string_view text, auto&& fn) {
    std::size_t pos = 0;
    std::size_t lineno = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::size_t end = (nl == std::string_view::npos) ? text.size() : nl;
        fn(text.substr(pos, end - pos), ++lineno);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
}

}  // namespace

const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::ThreeDCES: return "3dces";
        case Algorithm::ThreeDCME: return "3dcme";
        case Algorithm::RSC: return "rsc";
        case Algorithm::RSCCC: return "rsccc";
    }
    return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "3dces") return Algorithm::ThreeDCES;
    if (s == "3dcme") return Algorithm::ThreeDCME;
    if (s == "rsc") return Algorithm::RSC;
    if (s == "rsccc") return Algorithm::RSCCC;
    throw MalformedLine("unknown algorithm '" + s + "'");
}

RawCalibration parse_calibration(std::string_view text) {
    RawCalibration calib;
    bool have_r0 = false, have_tr = false;
    for_each_line(text, [&](std::string_view line, std::size_t) {
        const std::size_t colon = line.find(':');
        if (colon == std::string_view::npos) return;
        const auto key_toks = split_ws(line.substr(0, colon));
        if (key_toks.size() != 1) return;
        const std::string key(key_toks[0]);
        const auto toks = split_ws(line.substr(colon + 1));
        if (key.size() == 2 && key[0] == 'P' && key[1] >= '0' && key[1] <= '3') {
            if (toks.size() != 12) throw MalformedNumber(key + ": expected 12 values");
            Eigen::Matrix<double, 3, 4> m;
            for (int i = 0; i < 12; ++i) m(i / 4, i % 4) = parse_real(toks[i]);
            calib.p_rect[key[1] - '0'] = m;
        } else if (key == "R0_rect" || key == "R_rect") {
            if (toks.size() != 9) throw MalformedNumber(key + ": expected 9 values");
            for (int i = 0; i < 9; ++i) calib.r0_rect(i / 3, i % 3) = parse_real(toks[i]);
            have_r0 = true;
        } else if (key == "Tr_velo_to_cam" || key == "Tr_velo_cam") {
            if (toks.size() != 12) throw MalformedNumber(key + ": expected 12 values");
            for (int i = 0; i < 12; ++i) calib.tr_velo_to_cam(i / 4, i % 4) = parse_real(toks[i]);
            have_tr = true;
        }
        // unknown keys ignored
    });
    if (!calib.p_rect.count(2)) throw MissingKey("P2");
    if (!calib.p_rect.count(3)) throw MissingKey("P3");
    if (!have_r0) throw MissingKey("R0_rect");
    if (!have_tr) throw MissingKey("Tr_velo_to_cam");
    return calib;
}

PointCloud read_velodyne(std::string_view bytes) {
    if (bytes.size() % 16 != 0) {
        throw TruncatedRecord("velodyne blob length " + std::to_string(bytes.size()) +
                              " is not a multiple of 16");
    }
    PointCloud cloud;
    const std::size_t n = bytes.size() / 16;
    cloud.points.resize(n);
    if (n > 0) std::memcpy(cloud.points.data(), bytes.data(), bytes.size());
    for (auto& p : cloud.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
            !std::isfinite(p.reflectance)) {
            throw NonFiniteValue("non-finite velodyne record");
        }
        if (p.reflectance < 0.f || p.reflectance > 1.f) {
            p.reflectance = std::clamp(p.reflectance, 0.f, 1.f);
            ++cloud.clamped_reflectance;
        }
    }
    return cloud;
}

void write_velodyne(const PointCloud& cloud, std::ostream& out) {
    if (!cloud.points.empty()) {
        out.write(reinterpret_cast<const char*>(cloud.points.data()),
                  static_cast<std::streamsize>(cloud.points.size() * 16));
    }
    check_sink(out);
}

std::vector<Detection2D> read_detections(std::string_view text, View view) {
    std::vector<Detection2D> dets;
    for_each_line(text, [&](std::string_view line, std::size_t lineno) {
        const auto toks = split_ws(line);
        if (toks.empty() || toks[0][0] == '#') return;
        if (toks.size() != 6) {
            throw MalformedLine("line " + std::to_string(lineno) + ": expected 6 fields, got " +
                                std::to_string(toks.size()));
        }
        Detection2D d;
        d.view = view;
        d.class_label = std::string(toks[0]);
        d.score = parse_real(toks[1]);
        d.x1 = parse_real(toks[2]);
        d.y1 = parse_real(toks[3]);
        d.x2 = parse_real(toks[4]);
        d.y2 = parse_real(toks[5]);
        if (d.score < 0.0 || d.score > 1.0) {
            throw MalformedLine("line " + std::to_string(lineno) + ": score out of [0,1]");
        }
        if (d.x2 <= d.x1 || d.y2 <= d.y1) {
            throw DegenerateBox("line " + std::to_string(lineno));
        }
        dets.push_back(std::move(d));
    });
    return dets;
}

void write_detections(const std::vector<Detection2D>& dets, std::ostream& out) {
    for (const auto& d : dets) {
        out << d.class_label << ' ' << fmt_real(d.score) << ' ' << fmt_real(d.x1) << ' '
            << fmt_real(d.y1) << ' ' << fmt_real(d.x2) << ' ' << fmt_real(d.y2) << '\n';
    }
    check_sink(out);
}

void write_matches(const MatchSet& matches, std::ostream& out) {
    out << "# sfm-matches 1 " << to_string(matches.algorithm) << '\n';
    for (const auto& m : matches.pairs) {
        out << m.left_idx << ' ' << m.right_idx << ' ' << to_string(matches.algorithm) << ' '
            << fmt_real(m.cost) << ' ' << m.n_intersection();
        for (const auto idx : m.intersection_indices) out << ' ' << idx;
        out << '\n';
    }
    check_sink(out);
}

MatchSet read_matches(std::string_view text) {
    MatchSet set;
    bool have_header = false;
    for_each_line(text, [&](std::string_view line, std::size_t lineno) {
        const auto toks = split_ws(line);
        if (toks.empty()) return;
        if (toks[0] == "#") {
            if (!have_header) {
                if (toks.size() != 4 || toks[1] != "sfm-matches" || toks[2] != "1") {
                    throw MalformedLine("bad matches header");
                }
                set.algorithm = algorithm_from_string(std::string(toks[3]));
                have_header = true;
            }
            return;
        }
        if (!have_header) throw MalformedLine("matches record before header");
        if (toks.size() < 5) throw MalformedLine("line " + std::to_string(lineno));
        MatchPair m;
        m.left_idx = static_cast<std::uint32_t>(parse_index(toks[0]));
        m.right_idx = static_cast<std::uint32_t>(parse_index(toks[1]));
        const Algorithm algo = algorithm_from_string(std::string(toks[2]));
        if (algo != set.algorithm) throw MalformedLine("mixed algorithms in matches file");
        m.cost = parse_real(toks[3]);
        m.cost_kind = (algo == Algorithm::RSC || algo == Algorithm::RSCCC) ? CostKind::NCC
                                                                           : CostKind::IoU3D;
        const std::uint64_t n = parse_index(toks[4]);
        if (toks.size() != 5 + n) throw MalformedLine("line " + std::to_string(lineno) +
                                                      ": index count mismatch");
        m.intersection_indices.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            m.intersection_indices.push_back(static_cast<std::uint32_t>(parse_index(toks[5 + i])));
        }
        set.pairs.push_back(std::move(m));
    });
    if (!have_header) throw MalformedLine("missing matches header");
    return set;
}

void write_segments(const MatchSet& matches, const PointCloud& cloud,
                    const std::vector<Detection2D>& left_detections, std::ostream& out) {
    out << "# sfm-segments 1\n";
    for (const auto& m : matches.pairs) {
        if (m.left_idx >= left_detections.size()) {
            throw IndexOutOfRange("left RoI " + std::to_string(m.left_idx));
        }
        const auto& det = left_detections[m.left_idx];
        out << "segment " << m.left_idx << ' ' << m.right_idx << ' ' << det.class_label << ' '
            << fmt_real(det.score) << ' ' << m.n_intersection() << '\n';
        for (const auto idx : m.intersection_indices) {
            if (idx >= cloud.size()) throw IndexOutOfRange("point " + std::to_string(idx));
            const auto& p = cloud.points[idx];
            out << fmt_float(p.x) << ' ' << fmt_float(p.y) << ' ' << fmt_float(p.z) << ' '
                << fmt_float(p.reflectance) << '\n';
        }
    }
    check_sink(out);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SinkFailure("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw SinkFailure("read error on " + path);
    return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SinkFailure("cannot open " + path + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw SinkFailure("write error on " + path);
}

RawCalibration load_calibration(const std::string& path) {
    return parse_calibration(read_file(path));
}

PointCloud load_velodyne(const std::string& path) { return read_velodyne(read_file(path)); }

std::vector<Detection2D> load_detections(const std::string& path, View view) {
    return read_detections(read_file(path), view);
}

MatchSet load_matches(const std::string& path) { return read_matches(read_file(path)); }

}  // namespace sfm
