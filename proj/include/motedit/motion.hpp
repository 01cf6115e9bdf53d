#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace motedit {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>; // row-major
using SixD = std::array<double, 6>; // first two rotation-matrix columns

Mat3 mat3_identity();
Mat3 mat3_mul(const Mat3& a, const Mat3& b);
Vec3 mat3_apply(const Mat3& m, const Vec3& v);
Mat3 axis_angle_to_matrix(const Vec3& v);
// canonical: magnitude in [0, pi], deterministic axis sign at pi
Vec3 matrix_to_axis_angle(const Mat3& m);
SixD matrix_to_sixd(const Mat3& m);
Mat3 sixd_to_matrix(const SixD& s); // Gram-Schmidt, deterministic degenerate fallback

// Per-frame feature packing: 3 translation + 12 orientation + 192 pose = 207.
// Orientation block: raw 6D of the root world rotation, then 6 rotation-velocity
// features that do not participate in kinematics. Pose block: 32 slots of 6 dims;
// slots 0..21 hold per-joint local rotations stored as 6D minus the identity
// encoding (so a rest pose is all zeros), slots 22..31 are reserved and zero.
struct FrameLayout {
    int translation_offset = 0;
    int translation_width = 3;
    int orientation_offset = 3;
    int orientation_width = 12;
    int pose_offset = 15;
    int pose_width = 192;
    int pose_slots = 32;
    int rot_dims_per_slot = 6;

    int frame_dim() const { return translation_width + orientation_width + pose_width; }
    int slot_offset(int slot) const { return pose_offset + slot * rot_dims_per_slot; }
    void validate() const; // widths sum to 207, slots * dims = 192
};

class MotionSequence {
public:
    MotionSequence(std::vector<double> frames, int frame_count, double fps);
    static MotionSequence zeros(int frame_count, double fps);

    int frame_count() const { return frame_count_; }
    double fps() const { return fps_; }
    double at(int t, int d) const { return frames_[static_cast<size_t>(t) * kFrameDim + d]; }
    double& at(int t, int d) { return frames_[static_cast<size_t>(t) * kFrameDim + d]; }
    const double* frame(int t) const { return frames_.data() + static_cast<size_t>(t) * kFrameDim; }
    double* frame(int t) { return frames_.data() + static_cast<size_t>(t) * kFrameDim; }
    const std::vector<double>& raw() const { return frames_; }
    bool operator==(const MotionSequence& o) const {
        return frame_count_ == o.frame_count_ && fps_ == o.fps_ && frames_ == o.frames_;
    }

    static constexpr int kFrameDim = 207;

private:
    std::vector<double> frames_;
    int frame_count_ = 0;
    double fps_ = 0.0;
};

struct Skeleton {
    static constexpr int kJointCount = 22;
    std::array<int, kJointCount> parent{};
    std::array<Vec3, kJointCount> offset{};

    void validate() const; // root = self at index with exactly one root, acyclic
    int root() const;
};

// Part order is fixed: torso, left_arm, right_arm, left_leg, right_leg.
struct PartDecomposition {
    static constexpr int kPartCount = 5;
    std::array<std::vector<int>, kPartCount> joints;

    void validate() const; // disjoint, exhaustive over 0..21, non-empty
    static const std::array<std::string, kPartCount>& names();
};

struct JointState {
    int frame_count = 0;
    double fps = 0.0;
    std::vector<double> positions; // T x 22 x 3, world space
    std::vector<double> rotations; // T x 22 x 3, axis-angle; joint 0 carries the
                                   // composite world rotation of the root

    Vec3 position(int t, int j) const;
    Vec3 rotation(int t, int j) const;
    void set_position(int t, int j, const Vec3& v);
    void set_rotation(int t, int j, const Vec3& v);
    static JointState zeros(int frame_count, double fps);
};

JointState decode(const MotionSequence& motion, const Skeleton& skeleton,
                  const FrameLayout& layout = FrameLayout{});
MotionSequence encode(const JointState& state, const Skeleton& skeleton,
                      const FrameLayout& layout = FrameLayout{});

MotionSequence load_motion(const std::string& path);
void save_motion(const MotionSequence& motion, const std::string& path);
MotionSequence motion_from_json(const std::string& text);
std::string motion_to_json(const MotionSequence& motion);

const Skeleton& default_skeleton();
const PartDecomposition& default_parts();
// JSON config {"parents": [22], "offsets": [[3] x 22], "parts": {...}}
void load_skeleton_config(const std::string& path, Skeleton& skeleton, PartDecomposition& parts);
std::string skeleton_config_json(const Skeleton& skeleton, const PartDecomposition& parts);

} // namespace motedit
