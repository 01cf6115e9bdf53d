#include "motedit/motion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace motedit {

namespace {

constexpr SixD kIdentity6D = {1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Vec3 cross3(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

// Joints in an order where every parent precedes its children.
std::array<int, Skeleton::kJointCount> topo_order(const Skeleton& s) {
    std::array<int, Skeleton::kJointCount> order{};
    std::array<bool, Skeleton::kJointCount> placed{};
    int root = s.root();
    order[0] = root;
    placed[root] = true;
    int n = 1;
    while (n < Skeleton::kJointCount) {
        int before = n;
        for (int j = 0; j < Skeleton::kJointCount; ++j) {
            if (!placed[j] && placed[s.parent[j]]) {
                order[n++] = j;
                placed[j] = true;
            }
        }
        if (n == before) fail("skeleton: parent graph is not a tree");
    }
    return order;
}

} // namespace

Mat3 mat3_identity() { return {1, 0, 0, 0, 1, 0, 0, 0, 1}; }

Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r[i * 3 + j] = a[i * 3] * b[j] + a[i * 3 + 1] * b[3 + j] + a[i * 3 + 2] * b[6 + j];
    return r;
}

Vec3 mat3_apply(const Mat3& m, const Vec3& v) {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
            m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

Mat3 axis_angle_to_matrix(const Vec3& v) {
    double theta = norm3(v);
    if (theta < 1e-12) return mat3_identity();
    double x = v[0] / theta, y = v[1] / theta, z = v[2] / theta;
    double c = std::cos(theta), s = std::sin(theta), t = 1.0 - c;
    return {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
            t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
            t * x * z - s * y, t * y * z + s * x, t * z * z + c};
}

Vec3 matrix_to_axis_angle(const Mat3& m) {
    double c = 0.5 * (m[0] + m[4] + m[8] - 1.0);
    c = std::clamp(c, -1.0, 1.0);
    double theta = std::acos(c);
    if (theta < 1e-12) return {0.0, 0.0, 0.0};

    // Skew-symmetric part: 2 sin(theta) * axis.
    Vec3 skew = {m[7] - m[5], m[2] - m[6], m[3] - m[1]};
    double s2 = norm3(skew);
    Vec3 a;
    if (s2 > 1e-6) {
        a = {skew[0] / s2, skew[1] / s2, skew[2] / s2};
    } else {
        // Near pi the skew part vanishes; recover magnitudes from the diagonal
        // (m_kk = c + (1-c) a_k^2) and relative signs from the symmetric part.
        double one = 1.0 - c;
        int k = 0;
        if (m[4] > m[0]) k = 1;
        if (m[8] > m[k * 3 + k]) k = 2;
        double ak = std::sqrt(std::max(0.0, (m[k * 3 + k] - c) / one));
        a = {0, 0, 0};
        a[k] = ak;
        for (int i = 0; i < 3; ++i)
            if (i != k) a[i] = (m[k * 3 + i] + m[i * 3 + k]) / (2.0 * one * ak);
        double n = norm3(a);
        for (double& ai : a) ai /= n;
        if (dot3(a, skew) < 0.0) {
            for (double& ai : a) ai = -ai;
        } else if (s2 <= 1e-12) {
            // Exactly pi: both signs represent the same rotation; make the
            // first non-zero component positive.
            for (int i = 0; i < 3; ++i) {
                if (std::abs(a[i]) > 1e-12) {
                    if (a[i] < 0.0)
                        for (double& ai : a) ai = -ai;
                    break;
                }
            }
        }
    }
    return {a[0] * theta, a[1] * theta, a[2] * theta};
}

SixD matrix_to_sixd(const Mat3& m) { return {m[0], m[3], m[6], m[1], m[4], m[7]}; }

Mat3 sixd_to_matrix(const SixD& s) {
    Vec3 a1 = {s[0], s[1], s[2]};
    Vec3 a2 = {s[3], s[4], s[5]};
    double n1 = norm3(a1);
    Vec3 b1 = n1 > 1e-8 ? Vec3{a1[0] / n1, a1[1] / n1, a1[2] / n1} : Vec3{1, 0, 0};
    double d = dot3(b1, a2);
    Vec3 b2 = {a2[0] - d * b1[0], a2[1] - d * b1[1], a2[2] - d * b1[2]};
    double n2 = norm3(b2);
    if (n2 > 1e-8) {
        for (double& v : b2) v /= n2;
    } else {
        // Degenerate second column: orthogonalize a fixed fallback axis instead.
        Vec3 e = std::abs(b1[1]) < 0.9 ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
        double de = dot3(b1, e);
        b2 = {e[0] - de * b1[0], e[1] - de * b1[1], e[2] - de * b1[2]};
        double ne = norm3(b2);
        for (double& v : b2) v /= ne;
    }
    Vec3 b3 = cross3(b1, b2);
    return {b1[0], b2[0], b3[0], b1[1], b2[1], b3[1], b1[2], b2[2], b3[2]};
}

void FrameLayout::validate() const {
    if (translation_width + orientation_width + pose_width != MotionSequence::kFrameDim)
        fail("frame layout: widths do not sum to 207");
    if (pose_slots * rot_dims_per_slot != pose_width)
        fail("frame layout: pose slots do not tile the pose block");
    if (orientation_offset != translation_offset + translation_width ||
        pose_offset != orientation_offset + orientation_width)
        fail("frame layout: blocks are not contiguous");
}

MotionSequence::MotionSequence(std::vector<double> frames, int frame_count, double fps)
    : frames_(std::move(frames)), frame_count_(frame_count), fps_(fps) {
    if (frame_count_ < 2) fail("motion: need at least 2 frames, got " + std::to_string(frame_count_));
    if (!(fps_ > 0.0)) fail("motion: fps must be positive");
    if (frames_.size() != static_cast<size_t>(frame_count_) * kFrameDim)
        fail("motion: frame buffer has " + std::to_string(frames_.size()) + " values, expected " +
             std::to_string(static_cast<size_t>(frame_count_) * kFrameDim));
    for (size_t i = 0; i < frames_.size(); ++i)
        if (!std::isfinite(frames_[i]))
            fail("motion: non-finite value at frame " + std::to_string(i / kFrameDim) +
                 " feature " + std::to_string(i % kFrameDim));
}

MotionSequence MotionSequence::zeros(int frame_count, double fps) {
    return MotionSequence(std::vector<double>(static_cast<size_t>(frame_count) * kFrameDim, 0.0),
                          frame_count, fps);
}

int Skeleton::root() const {
    for (int j = 0; j < kJointCount; ++j)
        if (parent[j] == j) return j;
    fail("skeleton: no root joint (parent[j] == j)");
}

void Skeleton::validate() const {
    int roots = 0;
    for (int j = 0; j < kJointCount; ++j) {
        if (parent[j] < 0 || parent[j] >= kJointCount)
            fail("skeleton: parent of joint " + std::to_string(j) + " out of range");
        if (parent[j] == j) ++roots;
    }
    if (roots != 1) fail("skeleton: expected exactly one root, found " + std::to_string(roots));
    topo_order(*this); // throws on cycles
    for (int j = 0; j < kJointCount; ++j)
        for (double v : offset[j])
            if (!std::isfinite(v)) fail("skeleton: non-finite offset at joint " + std::to_string(j));
}

const std::array<std::string, PartDecomposition::kPartCount>& PartDecomposition::names() {
    static const std::array<std::string, kPartCount> n = {"torso", "left_arm", "right_arm",
                                                          "left_leg", "right_leg"};
    return n;
}

void PartDecomposition::validate() const {
    std::array<int, Skeleton::kJointCount> seen{};
    for (int p = 0; p < kPartCount; ++p) {
        if (joints[p].empty()) fail("parts: " + names()[p] + " has no joints");
        for (int j : joints[p]) {
            if (j < 0 || j >= Skeleton::kJointCount)
                fail("parts: " + names()[p] + " references joint " + std::to_string(j));
            ++seen[j];
        }
    }
    for (int j = 0; j < Skeleton::kJointCount; ++j) {
        if (seen[j] == 0) fail("parts: joint " + std::to_string(j) + " not assigned to any part");
        if (seen[j] > 1) fail("parts: joint " + std::to_string(j) + " assigned to multiple parts");
    }
}

Vec3 JointState::position(int t, int j) const {
    size_t i = (static_cast<size_t>(t) * Skeleton::kJointCount + j) * 3;
    return {positions[i], positions[i + 1], positions[i + 2]};
}

Vec3 JointState::rotation(int t, int j) const {
    size_t i = (static_cast<size_t>(t) * Skeleton::kJointCount + j) * 3;
    return {rotations[i], rotations[i + 1], rotations[i + 2]};
}

void JointState::set_position(int t, int j, const Vec3& v) {
    size_t i = (static_cast<size_t>(t) * Skeleton::kJointCount + j) * 3;
    positions[i] = v[0];
    positions[i + 1] = v[1];
    positions[i + 2] = v[2];
}

void JointState::set_rotation(int t, int j, const Vec3& v) {
    size_t i = (static_cast<size_t>(t) * Skeleton::kJointCount + j) * 3;
    rotations[i] = v[0];
    rotations[i + 1] = v[1];
    rotations[i + 2] = v[2];
}

JointState JointState::zeros(int frame_count, double fps) {
    JointState s;
    s.frame_count = frame_count;
    s.fps = fps;
    s.positions.assign(static_cast<size_t>(frame_count) * Skeleton::kJointCount * 3, 0.0);
    s.rotations.assign(static_cast<size_t>(frame_count) * Skeleton::kJointCount * 3, 0.0);
    return s;
}

JointState decode(const MotionSequence& motion, const Skeleton& skeleton, const FrameLayout& layout) {
    layout.validate();
    skeleton.validate();
    auto order = topo_order(skeleton);
    int root = skeleton.root();
    JointState state = JointState::zeros(motion.frame_count(), motion.fps());

    for (int t = 0; t < motion.frame_count(); ++t) {
        const double* f = motion.frame(t);
        for (int d = 0; d < MotionSequence::kFrameDim; ++d)
            if (!std::isfinite(f[d]))
                fail("decode: non-finite value at frame " + std::to_string(t) + " feature " +
                     std::to_string(d));

        SixD glob6;
        for (int i = 0; i < 6; ++i) glob6[i] = f[layout.orientation_offset + i];
        Mat3 r_glob = sixd_to_matrix(glob6);

        std::array<Mat3, Skeleton::kJointCount> local;
        for (int j = 0; j < Skeleton::kJointCount; ++j) {
            SixD s;
            for (int i = 0; i < 6; ++i) s[i] = f[layout.slot_offset(j) + i] + kIdentity6D[i];
            local[j] = sixd_to_matrix(s);
        }

        std::array<Mat3, Skeleton::kJointCount> world;
        std::array<Vec3, Skeleton::kJointCount> pos;
        world[root] = mat3_mul(r_glob, local[root]);
        pos[root] = {f[layout.translation_offset] + skeleton.offset[root][0],
                     f[layout.translation_offset + 1] + skeleton.offset[root][1],
                     f[layout.translation_offset + 2] + skeleton.offset[root][2]};
        for (int k = 1; k < Skeleton::kJointCount; ++k) {
            int j = order[k];
            int p = skeleton.parent[j];
            world[j] = mat3_mul(world[p], local[j]);
            Vec3 step = mat3_apply(world[p], skeleton.offset[j]);
            pos[j] = {pos[p][0] + step[0], pos[p][1] + step[1], pos[p][2] + step[2]};
        }

        for (int j = 0; j < Skeleton::kJointCount; ++j) {
            state.set_position(t, j, pos[j]);
            state.set_rotation(t, j, j == root ? matrix_to_axis_angle(world[root])
                                               : matrix_to_axis_angle(local[j]));
        }
    }
    return state;
}

MotionSequence encode(const JointState& state, const Skeleton& skeleton, const FrameLayout& layout) {
    layout.validate();
    skeleton.validate();
    int root = skeleton.root();
    std::vector<double> frames(static_cast<size_t>(state.frame_count) * MotionSequence::kFrameDim,
                               0.0);

    for (int t = 0; t < state.frame_count; ++t) {
        double* f = frames.data() + static_cast<size_t>(t) * MotionSequence::kFrameDim;
        Vec3 p = state.position(t, root);
        f[layout.translation_offset] = p[0] - skeleton.offset[root][0];
        f[layout.translation_offset + 1] = p[1] - skeleton.offset[root][1];
        f[layout.translation_offset + 2] = p[2] - skeleton.offset[root][2];

        // Canonical form: the root world rotation goes into the orientation
        // block, slot 0 stays identity (stored as zeros) and the velocity
        // features are left at zero.
        SixD glob6 = matrix_to_sixd(axis_angle_to_matrix(state.rotation(t, root)));
        for (int i = 0; i < 6; ++i) f[layout.orientation_offset + i] = glob6[i];

        for (int j = 0; j < Skeleton::kJointCount; ++j) {
            if (j == root) continue;
            SixD s = matrix_to_sixd(axis_angle_to_matrix(state.rotation(t, j)));
            for (int i = 0; i < 6; ++i) f[layout.slot_offset(j) + i] = s[i] - kIdentity6D[i];
        }
    }
    return MotionSequence(std::move(frames), state.frame_count, state.fps);
}

MotionSequence motion_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(std::string("motion json: ") + e.what());
    }
    if (!j.is_object() || !j.contains("fps") || !j.contains("frames"))
        fail("motion json: expected object with \"fps\" and \"frames\"");
    if (!j["fps"].is_number()) fail("motion json: \"fps\" must be a number");
    double fps = j["fps"].get<double>();
    const auto& rows = j["frames"];
    if (!rows.is_array()) fail("motion json: \"frames\" must be an array");
    std::vector<double> flat;
    flat.reserve(rows.size() * MotionSequence::kFrameDim);
    for (size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (!row.is_array() || row.size() != MotionSequence::kFrameDim)
            fail("motion json: frame " + std::to_string(r) + " has " +
                 std::to_string(row.is_array() ? row.size() : 0) + " values, expected " +
                 std::to_string(MotionSequence::kFrameDim));
        for (size_t d = 0; d < row.size(); ++d) {
            if (!row[d].is_number())
                fail("motion json: frame " + std::to_string(r) + " feature " + std::to_string(d) +
                     " is not a number");
            flat.push_back(row[d].get<double>());
        }
    }
    return MotionSequence(std::move(flat), static_cast<int>(rows.size()), fps);
}

std::string motion_to_json(const MotionSequence& motion) {
    nlohmann::json rows = nlohmann::json::array();
    for (int t = 0; t < motion.frame_count(); ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (int d = 0; d < MotionSequence::kFrameDim; ++d) row.push_back(motion.at(t, d));
        rows.push_back(std::move(row));
    }
    nlohmann::json j;
    j["fps"] = motion.fps();
    j["frames"] = std::move(rows);
    return j.dump();
}

MotionSequence load_motion(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open motion file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return motion_from_json(ss.str());
}

void save_motion(const MotionSequence& motion, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write motion file: " + path);
    out << motion_to_json(motion) << "\n";
}

const Skeleton& default_skeleton() {
    static const Skeleton s = [] {
        Skeleton k;
        k.parent = {0, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19};
        k.offset = {{{0.00, 0.00, 0.00},   // pelvis
                     {0.10, -0.06, 0.00},  // left hip
                     {-0.10, -0.06, 0.00}, // right hip
                     {0.00, 0.12, 0.00},   // spine1
                     {0.00, -0.40, 0.00},  // left knee
                     {0.00, -0.40, 0.00},  // right knee
                     {0.00, 0.13, 0.00},   // spine2
                     {0.00, -0.42, 0.00},  // left ankle
                     {0.00, -0.42, 0.00},  // right ankle
                     {0.00, 0.13, 0.00},   // spine3
                     {0.00, -0.06, 0.13},  // left foot
                     {0.00, -0.06, 0.13},  // right foot
                     {0.00, 0.14, 0.00},   // neck
                     {0.06, 0.10, 0.00},   // left collar
                     {-0.06, 0.10, 0.00},  // right collar
                     {0.00, 0.12, 0.00},   // head
                     {0.11, 0.00, 0.00},   // left shoulder
                     {-0.11, 0.00, 0.00},  // right shoulder
                     {0.27, 0.00, 0.00},   // left elbow
                     {-0.27, 0.00, 0.00},  // right elbow
                     {0.26, 0.00, 0.00},   // left wrist
                     {-0.26, 0.00, 0.00}}};// right wrist
        k.validate();
        return k;
    }();
    return s;
}

const PartDecomposition& default_parts() {
    static const PartDecomposition p = [] {
        PartDecomposition d;
        d.joints = {{{0, 3, 6, 9, 12, 15},   // torso
                     {13, 16, 18, 20},       // left arm
                     {14, 17, 19, 21},       // right arm
                     {1, 4, 7, 10},          // left leg
                     {2, 5, 8, 11}}};        // right leg
        d.validate();
        return d;
    }();
    return p;
}

std::string skeleton_config_json(const Skeleton& skeleton, const PartDecomposition& parts) {
    nlohmann::ordered_json j;
    j["parents"] = skeleton.parent;
    nlohmann::ordered_json offs = nlohmann::ordered_json::array();
    for (const auto& o : skeleton.offset) offs.push_back(o);
    j["offsets"] = std::move(offs);
    nlohmann::ordered_json pj;
    for (int p = 0; p < PartDecomposition::kPartCount; ++p)
        pj[PartDecomposition::names()[p]] = parts.joints[p];
    j["parts"] = std::move(pj);
    return j.dump(2);
}

void load_skeleton_config(const std::string& path, Skeleton& skeleton, PartDecomposition& parts) {
    std::ifstream in(path);
    if (!in) fail("cannot open skeleton file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        fail(std::string("skeleton json: ") + e.what());
    }
    if (!j.contains("parents") || !j.contains("offsets") || !j.contains("parts"))
        fail("skeleton json: expected \"parents\", \"offsets\" and \"parts\"");
    const auto& par = j["parents"];
    const auto& off = j["offsets"];
    if (!par.is_array() || par.size() != Skeleton::kJointCount)
        fail("skeleton json: \"parents\" must list " + std::to_string(Skeleton::kJointCount) +
             " joints");
    if (!off.is_array() || off.size() != Skeleton::kJointCount)
        fail("skeleton json: \"offsets\" must list " + std::to_string(Skeleton::kJointCount) +
             " joints");
    Skeleton s;
    for (int i = 0; i < Skeleton::kJointCount; ++i) {
        s.parent[i] = par[i].get<int>();
        const auto& o = off[i];
        if (!o.is_array() || o.size() != 3)
            fail("skeleton json: offset " + std::to_string(i) + " must have 3 components");
        for (int c = 0; c < 3; ++c) s.offset[i][c] = o[c].get<double>();
    }
    s.validate();
    PartDecomposition d;
    for (int p = 0; p < PartDecomposition::kPartCount; ++p) {
        const std::string& name = PartDecomposition::names()[p];
        if (!j["parts"].contains(name)) fail("skeleton json: parts missing \"" + name + "\"");
        d.joints[p] = j["parts"][name].get<std::vector<int>>();
    }
    d.validate();
    skeleton = s;
    parts = d;
}

} // namespace motedit
