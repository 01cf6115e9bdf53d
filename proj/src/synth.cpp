#include "motedit/synth.hpp"

#include "motedit/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace motedit {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

constexpr double kTau = 6.283185307179586476925287;

// One sinusoid per joint: theta(t) = amp * sin(tau * freq * t / fps + phase) + offset
struct JointWave {
    Vec3 axis{0, 0, 1};
    double amp = 0, freq = 0, phase = 0, offset = 0;

    double angle(int t, double fps) const {
        return amp * std::sin(kTau * freq * t / fps + phase) + offset;
    }
};

// Joints a part's edits may touch: every position affected by them stays
// inside the part (for the torso that restricts edits to neck and head).
const std::array<std::vector<int>, PartDecomposition::kPartCount>& ownable_joints() {
    static const std::array<std::vector<int>, PartDecomposition::kPartCount> own = {{
        {12, 15},         // torso
        {13, 16, 18, 20}, // left arm
        {14, 17, 19, 21}, // right arm
        {1, 4, 7, 10},    // left leg
        {2, 5, 8, 11},    // right leg
    }};
    return own;
}

const std::array<std::string, PartDecomposition::kPartCount>& part_phrases() {
    static const std::array<std::string, PartDecomposition::kPartCount> p = {
        "torso", "left arm", "right arm", "left leg", "right leg"};
    return p;
}

Vec3 random_axis(Rng& rng) {
    Vec3 a;
    double n = 0;
    do {
        a = {rng.normal(), rng.normal(), rng.normal()};
        n = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    } while (n < 1e-6);
    for (double& v : a) v /= n;
    return a;
}

std::string instruction_for(const std::string& kind, bool increase, int variant,
                            const std::vector<int>& parts) {
    std::string p = part_phrases()[parts[0]];
    for (size_t i = 1; i < parts.size(); ++i) p += " and the " + part_phrases()[parts[i]];
    if (kind == "amplitude") {
        if (increase)
            return variant ? "exaggerate the swing of the " + p
                           : "increase the range of the " + p + " motion";
        return variant ? "dampen the swing of the " + p
                       : "reduce the range of the " + p + " motion";
    }
    if (kind == "speed") {
        if (increase)
            return variant ? "make the " + p + " move faster" : "speed up the " + p + " movement";
        return variant ? "make the " + p + " move slower" : "slow down the " + p + " movement";
    }
    if (kind == "phase")
        return variant ? "offset the rhythm of the " + p
                       : "shift the timing of the " + p + " motion";
    if (kind == "mirror")
        return variant ? "invert the " + p + " movement" : "mirror the " + p + " motion";
    return variant ? "keep the " + p + " still" : "freeze the " + p + " completely";
}

nlohmann::json motion_json_obj(const MotionSequence& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int t = 0; t < m.frame_count(); ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (int d = 0; d < MotionSequence::kFrameDim; ++d) row.push_back(m.at(t, d));
        rows.push_back(std::move(row));
    }
    nlohmann::json j;
    j["fps"] = m.fps();
    j["frames"] = std::move(rows);
    return j;
}

} // namespace

// ---------------------------------------------------------------------------
// FrozenTextEncoder

FrozenTextEncoder::FrozenTextEncoder(std::vector<std::string> words, int model_dim, uint64_t seed)
    : words_(std::move(words)) {
    if (words_.empty()) fail("text encoder: empty vocabulary");
    for (size_t i = 0; i < words_.size(); ++i) {
        if (!index_.emplace(words_[i], static_cast<int>(i)).second)
            fail("text encoder: duplicate word " + words_[i]);
    }
    Rng rng(seed);
    table_ = Tensor::normal({static_cast<int>(words_.size()), model_dim}, rng);
}

FrozenTextEncoder FrozenTextEncoder::standard(int model_dim) {
    return FrozenTextEncoder(builtin_vocabulary(), model_dim, kFrozenTextSeed);
}

std::vector<int> FrozenTextEncoder::tokenize(const std::string& text) const {
    std::vector<int> out;
    std::istringstream ss(text);
    std::string word;
    while (ss >> word) {
        std::transform(word.begin(), word.end(), word.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        auto it = index_.find(word);
        if (it == index_.end()) {
            std::string vocab;
            for (const auto& w : words_) vocab += (vocab.empty() ? "" : " ") + w;
            fail("text encoder: unknown word \"" + word + "\"; vocabulary: " + vocab);
        }
        out.push_back(it->second);
    }
    if (out.empty()) fail("text encoder: empty instruction");
    return out;
}

Tensor FrozenTextEncoder::embed(const std::vector<int>& tokens) const {
    if (tokens.empty()) fail("text encoder: empty token sequence");
    int d = table_.cols();
    Tensor f(static_cast<int>(tokens.size()), d);
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] < 0 || tokens[i] >= table_.rows())
            fail("text encoder: token id " + std::to_string(tokens[i]) + " out of range");
        Tensor pos = timestep_embedding(static_cast<int>(i), d);
        for (int c = 0; c < d; ++c) f.at(static_cast<int>(i), c) = table_.at(tokens[i], c) + pos.at(0, c);
    }
    return f;
}

Tensor FrozenTextEncoder::embed_text(const std::string& text) const {
    return embed(tokenize(text));
}

// ---------------------------------------------------------------------------
// FrozenMotionCodec

FrozenMotionCodec::FrozenMotionCodec(int model_dim, uint64_t seed, double gain) {
    if (model_dim < MotionSequence::kFrameDim)
        fail("motion codec: model_dim must be >= " + std::to_string(MotionSequence::kFrameDim) +
             " for an exact right inverse");
    Rng rng(seed);
    enc_ = Tensor::normal({MotionSequence::kFrameDim, model_dim}, rng);
    double s = gain / std::sqrt(static_cast<double>(MotionSequence::kFrameDim));
    for (size_t i = 0; i < enc_.numel(); ++i) enc_[i] *= s;

    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Mat> a(enc_.data(), enc_.rows(), enc_.cols());
    Mat gram = a * a.transpose(); // [207 x 207], SPD for a full-rank random map
    Mat pinv = a.transpose() * gram.llt().solve(Mat::Identity(gram.rows(), gram.cols()));
    dec_ = Tensor(static_cast<int>(pinv.rows()), static_cast<int>(pinv.cols()));
    Eigen::Map<Mat>(dec_.data(), dec_.rows(), dec_.cols()) = pinv;
}

FrozenMotionCodec FrozenMotionCodec::standard(int model_dim) {
    return FrozenMotionCodec(model_dim, kFrozenCodecSeed, kFrozenCodecGain);
}

Tensor FrozenMotionCodec::encode(const MotionSequence& motion) const {
    Tensor frames(motion.frame_count(), MotionSequence::kFrameDim);
    std::copy(motion.raw().begin(), motion.raw().end(), frames.data());
    return matmul(frames, enc_);
}

MotionSequence FrozenMotionCodec::decode(const Tensor& features, double fps) const {
    if (features.cols() != dec_.rows())
        fail("motion codec: features " + features.shape_str() + " do not match decoder " +
             dec_.shape_str());
    Tensor frames = matmul(features, dec_);
    std::vector<double> flat(frames.data(), frames.data() + frames.numel());
    return MotionSequence(std::move(flat), frames.rows(), fps);
}

// ---------------------------------------------------------------------------
// Dataset generation

std::vector<EditTriplet> generate_dataset(int count, uint64_t seed, const RunConfig& cfg,
                                          const FrozenTextEncoder& text) {
    if (count < 1) fail("generate_dataset: count must be >= 1");
    const Skeleton& skel = default_skeleton();
    std::vector<EditTriplet> out;
    out.reserve(count);

    static const char* kKinds[] = {"amplitude", "speed", "phase", "mirror", "freeze"};

    for (int idx = 0; idx < count; ++idx) {
        Rng rng(mix_seed(seed, static_cast<uint64_t>(idx)));
        int T = rng.range_int(cfg.t_min, cfg.t_max);

        std::array<JointWave, Skeleton::kJointCount> waves;
        for (int j = 0; j < Skeleton::kJointCount; ++j) {
            JointWave w;
            w.axis = random_axis(rng);
            w.amp = j == 0 ? rng.uniform(0.1, 0.25) : rng.uniform(0.3, 0.9);
            w.freq = rng.uniform(0.2, 0.9);
            w.phase = rng.uniform(0.0, kTau);
            w.offset = rng.uniform(-0.25, 0.25);
            waves[j] = w;
        }
        double vx = rng.uniform(-0.4, 0.4), vz = rng.uniform(-0.4, 0.4);
        double bob_amp = rng.uniform(0.0, 0.04), bob_freq = rng.uniform(0.5, 1.5);

        int kind_id = static_cast<int>(rng.below(5));
        int n_parts = rng.uniform() < 0.35 ? 2 : 1;
        std::array<int, PartDecomposition::kPartCount> order = {0, 1, 2, 3, 4};
        for (int i = PartDecomposition::kPartCount - 1; i > 0; --i)
            std::swap(order[i], order[static_cast<int>(rng.below(static_cast<uint64_t>(i + 1)))]);
        std::vector<int> parts(order.begin(), order.begin() + n_parts);
        std::sort(parts.begin(), parts.end());

        bool increase = rng.uniform() < 0.5;
        double factor = increase ? 2.0 : 0.5;
        double phase_shift = (rng.uniform() < 0.5 ? 1.0 : -1.0) * rng.uniform(1.0, 3.0);
        int variant = static_cast<int>(rng.below(2));

        std::array<JointWave, Skeleton::kJointCount> edited = waves;
        const std::string kind = kKinds[kind_id];
        for (int p : parts) {
            for (int j : ownable_joints()[p]) {
                JointWave& w = edited[j];
                if (kind == "amplitude") {
                    w.amp *= factor;
                } else if (kind == "speed") {
                    w.freq *= factor;
                } else if (kind == "phase") {
                    w.phase += phase_shift;
                } else if (kind == "mirror") {
                    w.amp = -w.amp;
                    w.offset = -w.offset;
                } else { // freeze at the first frame's pose
                    double frozen = waves[j].angle(0, cfg.fps);
                    w.amp = 0.0;
                    w.offset = frozen;
                }
            }
        }

        auto build = [&](const std::array<JointWave, Skeleton::kJointCount>& ws) {
            JointState state = JointState::zeros(T, cfg.fps);
            for (int t = 0; t < T; ++t) {
                state.set_position(t, 0,
                                   {vx * t / cfg.fps,
                                    bob_amp * std::sin(kTau * bob_freq * t / cfg.fps),
                                    vz * t / cfg.fps});
                for (int j = 0; j < Skeleton::kJointCount; ++j) {
                    double a = ws[j].angle(t, cfg.fps);
                    state.set_rotation(t, j,
                                       {ws[j].axis[0] * a, ws[j].axis[1] * a, ws[j].axis[2] * a});
                }
            }
            return encode(state, skel);
        };

        EditTriplet trip{build(waves), build(edited), "", {}, parts, kind};
        trip.instruction = instruction_for(kind, increase, variant, parts);
        trip.tokens = text.tokenize(trip.instruction);
        out.push_back(std::move(trip));
    }
    return out;
}

std::string dataset_to_jsonl(const std::vector<EditTriplet>& triplets) {
    std::string out;
    for (const auto& t : triplets) {
        nlohmann::ordered_json j;
        j["edit_kind"] = t.edit_kind;
        j["edited_parts"] = t.edited_parts;
        j["instruction"] = t.instruction;
        j["tokens"] = t.tokens;
        j["source"] = motion_json_obj(t.source);
        j["target"] = motion_json_obj(t.target);
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_dataset(const std::vector<EditTriplet>& triplets, const std::string& path) {
    std::ofstream outf(path);
    if (!outf) fail("cannot write dataset: " + path);
    outf << dataset_to_jsonl(triplets);
    if (!outf) fail("dataset write failed: " + path);
}

std::vector<EditTriplet> load_dataset(const std::string& path, const FrozenTextEncoder& text) {
    std::ifstream in(path);
    if (!in) fail("cannot open dataset: " + path);
    std::vector<EditTriplet> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
        if (j.is_object() && j.contains("config") && !j.contains("source")) continue; // metadata
        for (const char* key : {"edit_kind", "edited_parts", "instruction", "source", "target"})
            if (!j.contains(key))
                fail("dataset line " + std::to_string(line_no) + ": missing \"" + key + "\"");
        EditTriplet t{motion_from_json(j["source"].dump()), motion_from_json(j["target"].dump()),
                      j["instruction"].get<std::string>(), {},
                      j["edited_parts"].get<std::vector<int>>(), j["edit_kind"].get<std::string>()};
        if (t.edited_parts.empty()) fail("dataset line " + std::to_string(line_no) + ": no edited parts");
        for (int p : t.edited_parts)
            if (p < 0 || p >= PartDecomposition::kPartCount)
                fail("dataset line " + std::to_string(line_no) + ": bad part index");
        if (t.source.frame_count() != t.target.frame_count())
            fail("dataset line " + std::to_string(line_no) + ": source/target length mismatch");
        t.tokens = text.tokenize(t.instruction);
        out.push_back(std::move(t));
    }
    if (out.empty()) fail("dataset is empty: " + path);
    return out;
}

std::vector<std::string> builtin_vocabulary() {
    return {"and",   "arm",    "completely", "dampen", "down",   "exaggerate", "faster",
            "freeze", "increase", "invert",  "keep",   "left",   "leg",        "make",
            "mirror", "motion",  "move",     "movement", "of",   "offset",     "range",
            "reduce", "rhythm",  "right",    "shift",  "slow",   "slower",     "speed",
            "still",  "swing",   "the",      "timing", "torso",  "up"};
}

void save_vocabulary(const std::vector<std::string>& words, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write vocabulary: " + path);
    nlohmann::ordered_json j;
    j["words"] = words;
    out << j.dump(2) << "\n";
}

std::vector<std::string> load_vocabulary(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open vocabulary: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        fail(std::string("vocabulary json: ") + e.what());
    }
    if (!j.contains("words")) fail("vocabulary json: expected \"words\"");
    auto words = j["words"].get<std::vector<std::string>>();
    if (words.empty()) fail("vocabulary json: empty word list");
    return words;
}

} // namespace motedit
