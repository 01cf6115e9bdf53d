#pragma once

// Test-local reference implementations, written independently of the library
// code paths they are compared against: forward kinematics through quaternion
// chains instead of matrix chains, and the whole similarity-supervision
// pipeline as plain scalar loops.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "motedit/motion.hpp"
#include "motedit/rng.hpp"
#include "motedit/tensor.hpp"

namespace testref {

using motedit::Mat3;
using motedit::MotionSequence;
using motedit::PartDecomposition;
using motedit::SixD;
using motedit::Skeleton;
using motedit::Vec3;

struct Quat {
    double w = 1, x = 0, y = 0, z = 0;
};

inline Quat qmul(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline Vec3 qrot(const Quat& q, const Vec3& v) {
    Quat p{0, v[0], v[1], v[2]};
    Quat c{q.w, -q.x, -q.y, -q.z};
    Quat r = qmul(qmul(q, p), c);
    return {r.x, r.y, r.z};
}

inline Quat quat_of(const Mat3& m) {
    double tr = m[0] + m[4] + m[8];
    Quat q;
    if (tr > 0) {
        double s = 2.0 * std::sqrt(tr + 1.0);
        q = {0.25 * s, (m[7] - m[5]) / s, (m[2] - m[6]) / s, (m[3] - m[1]) / s};
    } else if (m[0] > m[4] && m[0] > m[8]) {
        double s = 2.0 * std::sqrt(1.0 + m[0] - m[4] - m[8]);
        q = {(m[7] - m[5]) / s, 0.25 * s, (m[1] + m[3]) / s, (m[2] + m[6]) / s};
    } else if (m[4] > m[8]) {
        double s = 2.0 * std::sqrt(1.0 + m[4] - m[0] - m[8]);
        q = {(m[2] - m[6]) / s, (m[1] + m[3]) / s, 0.25 * s, (m[5] + m[7]) / s};
    } else {
        double s = 2.0 * std::sqrt(1.0 + m[8] - m[0] - m[4]);
        q = {(m[3] - m[1]) / s, (m[2] + m[6]) / s, (m[5] + m[7]) / s, 0.25 * s};
    }
    return q;
}

// Gram-Schmidt on the two stored columns, third column by cross product.
inline Mat3 mat_of_sixd(const SixD& s) {
    Vec3 a1{s[0], s[1], s[2]}, a2{s[3], s[4], s[5]};
    auto norm = [](const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); };
    auto cross = [](const Vec3& a, const Vec3& b) {
        return Vec3{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                    a[0] * b[1] - a[1] * b[0]};
    };
    auto dot = [](const Vec3& a, const Vec3& b) {
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    };
    double n1 = norm(a1);
    Vec3 b1 = n1 > 1e-8 ? Vec3{a1[0] / n1, a1[1] / n1, a1[2] / n1} : Vec3{1, 0, 0};
    double d = dot(b1, a2);
    Vec3 b2{a2[0] - d * b1[0], a2[1] - d * b1[1], a2[2] - d * b1[2]};
    double n2 = norm(b2);
    if (n2 > 1e-8) {
        for (double& v : b2) v /= n2;
    } else {
        Vec3 e = std::fabs(b1[1]) < 0.9 ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
        double de = dot(b1, e);
        b2 = {e[0] - de * b1[0], e[1] - de * b1[1], e[2] - de * b1[2]};
        double ne = norm(b2);
        for (double& v : b2) v /= ne;
    }
    Vec3 b3 = cross(b1, b2);
    return {b1[0], b2[0], b3[0], b1[1], b2[1], b3[1], b1[2], b2[2], b3[2]};
}

// canonical axis-angle (angle in [0, pi]) straight from a quaternion
inline Vec3 rotvec_of(Quat q) {
    if (q.w < 0) q = {-q.w, -q.x, -q.y, -q.z};
    double vn = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
    if (vn < 1e-300) return {0, 0, 0};
    double angle = 2.0 * std::atan2(vn, q.w);
    return {q.x / vn * angle, q.y / vn * angle, q.z / vn * angle};
}

struct Frame {
    std::array<Vec3, Skeleton::kJointCount> pos;
    std::array<Vec3, Skeleton::kJointCount> rotvec;
};

inline Frame fk(const MotionSequence& m, int t, const Skeleton& sk) {
    motedit::FrameLayout layout;
    SixD glob6;
    for (int k = 0; k < 6; ++k) glob6[k] = m.at(t, layout.orientation_offset + k);
    Quat q_glob = quat_of(mat_of_sixd(glob6));

    Frame out;
    std::array<Quat, Skeleton::kJointCount> world;
    for (int j = 0; j < Skeleton::kJointCount; ++j) {
        SixD s;
        for (int k = 0; k < 6; ++k) s[k] = m.at(t, layout.slot_offset(j) + k);
        s[0] += 1.0; // slots hold the offset from the identity 6D encoding
        s[4] += 1.0;
        Quat lq = quat_of(mat_of_sixd(s));
        if (j == sk.root()) {
            world[j] = qmul(q_glob, lq);
            out.pos[j] = {m.at(t, 0) + sk.offset[j][0], m.at(t, 1) + sk.offset[j][1],
                          m.at(t, 2) + sk.offset[j][2]};
        } else {
            int p = sk.parent[j];
            world[j] = qmul(world[p], lq);
            Vec3 step = qrot(world[p], sk.offset[j]);
            out.pos[j] = {out.pos[p][0] + step[0], out.pos[p][1] + step[1],
                          out.pos[p][2] + step[2]};
        }
        out.rotvec[j] = rotvec_of(j == sk.root() ? world[j] : lq);
    }
    return out;
}

// weighted part distance curves, negated: one row per part, one column per
// common frame (shorter sequence wins)
inline motedit::Tensor raw_curves(const MotionSequence& a, const MotionSequence& b,
                                  const Skeleton& sk, const PartDecomposition& parts,
                                  double beta) {
    int tc = std::min(a.frame_count(), b.frame_count());
    motedit::Tensor s(PartDecomposition::kPartCount, tc);
    for (int t = 0; t < tc; ++t) {
        Frame fa = fk(a, t, sk);
        Frame fb = fk(b, t, sk);
        for (int i = 0; i < PartDecomposition::kPartCount; ++i) {
            double dp = 0, dr = 0;
            for (int j : parts.joints[i]) {
                double px = fa.pos[j][0] - fb.pos[j][0], py = fa.pos[j][1] - fb.pos[j][1],
                       pz = fa.pos[j][2] - fb.pos[j][2];
                double rx = fa.rotvec[j][0] - fb.rotvec[j][0],
                       ry = fa.rotvec[j][1] - fb.rotvec[j][1],
                       rz = fa.rotvec[j][2] - fb.rotvec[j][2];
                dp += std::sqrt(px * px + py * py + pz * pz);
                dr += std::sqrt(rx * rx + ry * ry + rz * rz);
            }
            dp /= static_cast<double>(parts.joints[i].size());
            dr /= static_cast<double>(parts.joints[i].size());
            s.at(i, t) = -(beta * dp + (1.0 - beta) * dr);
        }
    }
    return s;
}

struct NormStats {
    std::array<double, PartDecomposition::kPartCount> lo{}, hi{};
};

inline NormStats fit_stats(const std::vector<motedit::Tensor>& raws) {
    NormStats st;
    st.lo.fill(1e300);
    st.hi.fill(-1e300);
    for (const auto& s : raws)
        for (int i = 0; i < s.rows(); ++i)
            for (int t = 0; t < s.cols(); ++t) {
                st.lo[i] = std::min(st.lo[i], s.at(i, t));
                st.hi[i] = std::max(st.hi[i], s.at(i, t));
            }
    return st;
}

struct Curves {
    motedit::Tensor global, final_; // [parts x T]
};

// per-part dataset min-max, then one min-max over the whole sequence matrix
inline Curves normalize(const motedit::Tensor& raw, const NormStats& st, double epsilon) {
    Curves out;
    out.global = motedit::Tensor(raw.rows(), raw.cols());
    for (int i = 0; i < raw.rows(); ++i)
        for (int t = 0; t < raw.cols(); ++t)
            out.global.at(i, t) = (raw.at(i, t) - st.lo[i]) / (st.hi[i] - st.lo[i] + epsilon);
    double lo = out.global[0], hi = out.global[0];
    for (size_t k = 0; k < out.global.numel(); ++k) {
        lo = std::min(lo, out.global[k]);
        hi = std::max(hi, out.global[k]);
    }
    out.final_ = motedit::Tensor(raw.rows(), raw.cols());
    for (size_t k = 0; k < out.global.numel(); ++k)
        out.final_[k] = (out.global[k] - lo) / (hi - lo + epsilon);
    return out;
}

// arbitrary (non-dataset) motion with every feature group populated
inline MotionSequence random_motion(int frames, double fps, motedit::Rng& rng) {
    MotionSequence m = MotionSequence::zeros(frames, fps);
    motedit::FrameLayout layout;
    for (int t = 0; t < frames; ++t) {
        for (int d = 0; d < 3; ++d) m.at(t, d) = rng.normal();
        for (int k = 0; k < 6; ++k) m.at(t, layout.orientation_offset + k) = 0.35 * rng.normal();
        for (int slot = 0; slot < layout.pose_slots; ++slot)
            for (int k = 0; k < 6; ++k)
                m.at(t, layout.slot_offset(slot) + k) = 0.35 * rng.normal();
    }
    return m;
}

} // namespace testref
