#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "motedit/config.hpp"
#include "motedit/motion.hpp"
#include "motedit/tensor.hpp"

namespace motedit {

// Seeds and gain for the frozen stand-ins. Deliberately independent of the run
// configuration so datasets and checkpoints stay comparable across configs.
inline constexpr uint64_t kFrozenTextSeed = 0x9d2c5680f1a3c1e5ull;
inline constexpr uint64_t kFrozenCodecSeed = 0x5851f42d4c957f2dull;
// Scales the codec projection so encoded synthetic motions land near unit std.
inline constexpr double kFrozenCodecGain = 5.0;

struct EditTriplet {
    MotionSequence source;
    MotionSequence target;
    std::string instruction;
    std::vector<int> tokens;
    std::vector<int> edited_parts; // indices into PartDecomposition order
    std::string edit_kind;         // amplitude | speed | phase | mirror | freeze
};

// Stand-in for a pretrained text encoder: fixed vocabulary, seeded random
// embedding table, sinusoidal positions. Immutable after construction.
class FrozenTextEncoder {
public:
    FrozenTextEncoder(std::vector<std::string> words, int model_dim, uint64_t seed);
    static FrozenTextEncoder standard(int model_dim); // built-in vocabulary, fixed seed

    std::vector<int> tokenize(const std::string& text) const; // unknown word -> error
    Tensor embed(const std::vector<int>& tokens) const;       // [L x D]
    Tensor embed_text(const std::string& text) const;
    const std::vector<std::string>& vocabulary() const { return words_; }
    int model_dim() const { return table_.cols(); }

private:
    std::vector<std::string> words_;
    std::map<std::string, int> index_;
    Tensor table_; // [V x D]
};

// Stand-in for the frozen motion encoder/decoder: a fixed random linear map
// with its exact right pseudo-inverse, so decode(encode(m)) == m up to
// round-off and diffusion-space errors translate directly to pose space.
class FrozenMotionCodec {
public:
    FrozenMotionCodec(int model_dim, uint64_t seed, double gain);
    static FrozenMotionCodec standard(int model_dim); // fixed seed and gain

    Tensor encode(const MotionSequence& motion) const;       // [T x D]
    MotionSequence decode(const Tensor& features, double fps) const;
    int model_dim() const { return enc_.cols(); }

private:
    Tensor enc_; // [207 x D]
    Tensor dec_; // [D x 207]
};

// Sinusoidal per-joint motions with a templated edit applied to 1-2 parts.
// Edits only touch joints whose position subtree stays inside the owning part
// (for the torso that means neck and head), so the most-changed part per the
// supervision curves is the edited one by construction, and untouched parts
// are bitwise identical between source and target.
std::vector<EditTriplet> generate_dataset(int count, uint64_t seed, const RunConfig& cfg,
                                          const FrozenTextEncoder& text);

// JSON-lines, one triplet per line; motions inline in the motion JSON schema.
// The loader skips metadata lines (objects carrying "config" but no "source").
std::string dataset_to_jsonl(const std::vector<EditTriplet>& triplets);
void save_dataset(const std::vector<EditTriplet>& triplets, const std::string& path);
std::vector<EditTriplet> load_dataset(const std::string& path, const FrozenTextEncoder& text);

std::vector<std::string> builtin_vocabulary();
void save_vocabulary(const std::vector<std::string>& words, const std::string& path);
std::vector<std::string> load_vocabulary(const std::string& path);

} // namespace motedit
