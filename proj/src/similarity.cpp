#include "motedit/similarity.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "motedit/format.hpp"

namespace motedit {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

void check_pair(const JointState& src, const JointState& tgt, const char* what) {
    if (src.frame_count != tgt.frame_count)
        fail(std::string(what) + ": source has " + std::to_string(src.frame_count) +
             " frames, target has " + std::to_string(tgt.frame_count));
    if (src.frame_count < 1) fail(std::string(what) + ": empty motion pair");
}

JointState crop(const JointState& s, int frames) {
    JointState out = JointState::zeros(frames, s.fps);
    size_t n = static_cast<size_t>(frames) * Skeleton::kJointCount * 3;
    std::copy(s.positions.begin(), s.positions.begin() + n, out.positions.begin());
    std::copy(s.rotations.begin(), s.rotations.begin() + n, out.rotations.begin());
    return out;
}

} // namespace

Tensor part_position_distance(const JointState& src, const JointState& tgt,
                              const PartDecomposition& parts) {
    check_pair(src, tgt, "position distance");
    int T = src.frame_count;
    Tensor d(PartDecomposition::kPartCount, T);
    for (int i = 0; i < PartDecomposition::kPartCount; ++i) {
        const auto& g = parts.joints[i];
        for (int t = 0; t < T; ++t) {
            double sum = 0.0;
            for (int j : g) {
                Vec3 a = src.position(t, j);
                Vec3 b = tgt.position(t, j);
                double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
                sum += std::sqrt(dx * dx + dy * dy + dz * dz);
            }
            d.at(i, t) = sum / static_cast<double>(g.size());
        }
    }
    return d;
}

Tensor part_rotation_distance(const JointState& src, const JointState& tgt,
                              const PartDecomposition& parts) {
    check_pair(src, tgt, "rotation distance");
    int T = src.frame_count;
    Tensor d(PartDecomposition::kPartCount, T);
    for (int i = 0; i < PartDecomposition::kPartCount; ++i) {
        const auto& g = parts.joints[i];
        for (int t = 0; t < T; ++t) {
            double sum = 0.0;
            for (int j : g) {
                Vec3 a = src.rotation(t, j);
                Vec3 b = tgt.rotation(t, j);
                double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
                sum += std::sqrt(dx * dx + dy * dy + dz * dz);
            }
            d.at(i, t) = sum / static_cast<double>(g.size());
        }
    }
    return d;
}

Tensor combine_similarity(const Tensor& d_pos, const Tensor& d_rot, double beta) {
    if (beta < 0.0 || beta > 1.0)
        fail("combine_similarity: beta must lie in [0,1], got " + std::to_string(beta));
    if (d_pos.shape() != d_rot.shape())
        fail("combine_similarity: d_pos " + d_pos.shape_str() + " vs d_rot " + d_rot.shape_str());
    Tensor s(d_pos.shape());
    for (size_t k = 0; k < s.numel(); ++k)
        s[k] = -(beta * d_pos[k] + (1.0 - beta) * d_rot[k]);
    return s;
}

GlobalNormStats fit_global_stats(const std::vector<Tensor>& raw_curves) {
    if (raw_curves.empty()) fail("fit_global_stats: empty dataset");
    GlobalNormStats st;
    st.s_min.fill(std::numeric_limits<double>::infinity());
    st.s_max.fill(-std::numeric_limits<double>::infinity());
    for (const Tensor& s : raw_curves) {
        if (s.rows() != PartDecomposition::kPartCount)
            fail("fit_global_stats: curve has " + std::to_string(s.rows()) + " parts");
        for (int i = 0; i < s.rows(); ++i) {
            for (int t = 0; t < s.cols(); ++t) {
                double v = s.at(i, t);
                if (v < st.s_min[i]) st.s_min[i] = v;
                if (v > st.s_max[i]) st.s_max[i] = v;
            }
        }
    }
    return st;
}

SimilarityCurveSet normalize(const Tensor& s_raw, const GlobalNormStats& stats, double epsilon,
                             double beta) {
    if (!(epsilon > 0.0)) fail("normalize: epsilon must be positive");
    SimilarityCurveSet out;
    out.s_raw = s_raw;
    out.beta = beta;
    out.epsilon = epsilon;
    int P = s_raw.rows(), T = s_raw.cols();
    out.s_global = Tensor(P, T);
    for (int i = 0; i < P; ++i) {
        double lo = stats.s_min[i];
        double range = stats.s_max[i] - lo + epsilon;
        for (int t = 0; t < T; ++t) out.s_global.at(i, t) = (s_raw.at(i, t) - lo) / range;
    }
    double lo = out.s_global[0], hi = out.s_global[0];
    for (size_t k = 1; k < out.s_global.numel(); ++k) {
        lo = std::min(lo, out.s_global[k]);
        hi = std::max(hi, out.s_global[k]);
    }
    out.s_final = Tensor(P, T);
    double range = hi - lo + epsilon;
    for (size_t k = 0; k < out.s_global.numel(); ++k)
        out.s_final[k] = (out.s_global[k] - lo) / range;
    return out;
}

Tensor raw_similarity(const MotionSequence& src, const MotionSequence& tgt,
                      const Skeleton& skeleton, const PartDecomposition& parts, double beta,
                      const FrameLayout& layout) {
    JointState a = decode(src, skeleton, layout);
    JointState b = decode(tgt, skeleton, layout);
    int T = std::min(a.frame_count, b.frame_count);
    if (a.frame_count != T) a = crop(a, T);
    if (b.frame_count != T) b = crop(b, T);
    return combine_similarity(part_position_distance(a, b, parts),
                              part_rotation_distance(a, b, parts), beta);
}

SimilarityCurveSet supervision_curves(const MotionSequence& src, const MotionSequence& tgt,
                                      const Skeleton& skeleton, const PartDecomposition& parts,
                                      const GlobalNormStats& stats, double beta, double epsilon,
                                      const FrameLayout& layout) {
    return normalize(raw_similarity(src, tgt, skeleton, parts, beta, layout), stats, epsilon, beta);
}

std::string curves_to_csv(const SimilarityCurveSet& curves) {
    std::string out = "part,frame,s_raw,s_global,s_final\n";
    for (int i = 0; i < curves.s_raw.rows(); ++i) {
        for (int t = 0; t < curves.s_raw.cols(); ++t) {
            out += PartDecomposition::names()[i];
            out += ',';
            out += std::to_string(t);
            out += ',';
            out += csv_double(curves.s_raw.at(i, t));
            out += ',';
            out += csv_double(curves.s_global.at(i, t));
            out += ',';
            out += csv_double(curves.s_final.at(i, t));
            out += '\n';
        }
    }
    return out;
}

std::string part_frame_csv(const Tensor& scores_t_by_part, const std::string& value_header) {
    if (scores_t_by_part.cols() != PartDecomposition::kPartCount)
        fail("part_frame_csv: expected [T x 5] scores, got " + scores_t_by_part.shape_str());
    std::string out = "part,frame," + value_header + "\n";
    for (int i = 0; i < PartDecomposition::kPartCount; ++i) {
        for (int t = 0; t < scores_t_by_part.rows(); ++t) {
            out += PartDecomposition::names()[i];
            out += ',';
            out += std::to_string(t);
            out += ',';
            out += csv_double(scores_t_by_part.at(t, i));
            out += '\n';
        }
    }
    return out;
}

std::string stats_to_json(const GlobalNormStats& stats, double beta, double epsilon) {
    nlohmann::ordered_json j;
    j["s_min"] = stats.s_min;
    j["s_max"] = stats.s_max;
    j["beta"] = beta;
    j["epsilon"] = epsilon;
    return j.dump(2);
}

GlobalNormStats stats_from_json(const std::string& text, double* beta, double* epsilon) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(std::string("stats json: ") + e.what());
    }
    if (!j.contains("s_min") || !j.contains("s_max"))
        fail("stats json: expected \"s_min\" and \"s_max\"");
    GlobalNormStats st;
    auto mins = j["s_min"].get<std::vector<double>>();
    auto maxs = j["s_max"].get<std::vector<double>>();
    if (mins.size() != st.s_min.size() || maxs.size() != st.s_max.size())
        fail("stats json: s_min/s_max must each have 5 entries");
    std::copy(mins.begin(), mins.end(), st.s_min.begin());
    std::copy(maxs.begin(), maxs.end(), st.s_max.begin());
    for (size_t i = 0; i < st.s_min.size(); ++i)
        if (st.s_min[i] > st.s_max[i])
            fail("stats json: s_min > s_max for part " + std::to_string(i));
    if (beta && j.contains("beta")) *beta = j["beta"].get<double>();
    if (epsilon && j.contains("epsilon")) *epsilon = j["epsilon"].get<double>();
    return st;
}

void save_stats(const GlobalNormStats& stats, double beta, double epsilon,
                const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write stats file: " + path);
    out << stats_to_json(stats, beta, epsilon) << "\n";
}

GlobalNormStats load_stats(const std::string& path, double* beta, double* epsilon) {
    std::ifstream in(path);
    if (!in) fail("cannot open stats file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return stats_from_json(ss.str(), beta, epsilon);
}

} // namespace motedit
