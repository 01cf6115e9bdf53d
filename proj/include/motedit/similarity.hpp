#pragma once

#include <array>
#include <string>
#include <vector>

#include "motedit/motion.hpp"
#include "motedit/tensor.hpp"

namespace motedit {

// Per-part, per-frame distance curves between a source/target motion pair.
struct RawDistanceCurves {
    Tensor d_pos; // [5 x T] mean Euclidean joint-position distance, meters
    Tensor d_rot; // [5 x T] mean rotation-vector distance, radians
};

// Dataset-wide per-part extremes of the raw similarity, fitted on the training
// split and frozen.
struct GlobalNormStats {
    std::array<double, PartDecomposition::kPartCount> s_min{};
    std::array<double, PartDecomposition::kPartCount> s_max{};
};

struct SimilarityCurveSet {
    Tensor s_raw;    // [5 x T], <= 0 (negated distances)
    Tensor s_global; // [5 x T], dataset-level normalization
    Tensor s_final;  // [5 x T], additional per-sequence normalization
    double beta = 0.5;
    double epsilon = 1e-8;
};

Tensor part_position_distance(const JointState& src, const JointState& tgt,
                              const PartDecomposition& parts);
Tensor part_rotation_distance(const JointState& src, const JointState& tgt,
                              const PartDecomposition& parts);
Tensor combine_similarity(const Tensor& d_pos, const Tensor& d_rot, double beta);

GlobalNormStats fit_global_stats(const std::vector<Tensor>& raw_curves);
SimilarityCurveSet normalize(const Tensor& s_raw, const GlobalNormStats& stats, double epsilon,
                             double beta);

// End-to-end entry point: decode both motions, crop to the shorter length,
// build distance curves, combine and normalize.
SimilarityCurveSet supervision_curves(const MotionSequence& src, const MotionSequence& tgt,
                                      const Skeleton& skeleton, const PartDecomposition& parts,
                                      const GlobalNormStats& stats, double beta, double epsilon,
                                      const FrameLayout& layout = FrameLayout{});
Tensor raw_similarity(const MotionSequence& src, const MotionSequence& tgt,
                      const Skeleton& skeleton, const PartDecomposition& parts, double beta,
                      const FrameLayout& layout = FrameLayout{});

// CSV export, header `part,frame,s_raw,s_global,s_final`; parts by name in
// canonical order, values via csv_double.
std::string curves_to_csv(const SimilarityCurveSet& curves);
// Same schema for an arbitrary [T x 5] per-frame score matrix (one value column).
std::string part_frame_csv(const Tensor& scores_t_by_part, const std::string& value_header);

std::string stats_to_json(const GlobalNormStats& stats, double beta, double epsilon);
GlobalNormStats stats_from_json(const std::string& text, double* beta = nullptr,
                                double* epsilon = nullptr);
void save_stats(const GlobalNormStats& stats, double beta, double epsilon,
                const std::string& path);
GlobalNormStats load_stats(const std::string& path, double* beta = nullptr,
                           double* epsilon = nullptr);

} // namespace motedit
