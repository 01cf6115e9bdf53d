#pragma once

#include <cstdint>
#include <string>

namespace motedit {

// Resolved run configuration. Serialized as JSON; every output artifact
// embeds the FNV-1a hash of the canonical serialization so results can be
// traced back to the exact settings that produced them.
struct RunConfig {
    uint64_t seed = 42;

    // model
    int model_dim = 256;
    int heads = 4;
    int pmm_layers = 2;
    int denoiser_layers = 4;
    int ff_mult = 4;

    // part similarity
    double beta = 0.5;
    double epsilon = 1e-8;
    double lambda_smooth = 0.1;

    // diffusion schedule
    int train_steps = 300;
    int sample_steps = 200;

    // optimizer (AdamW)
    double lr = 1e-4;
    double weight_decay = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 32;
    int optim_steps = 2000;
    int epochs = 0; // when > 0, overrides optim_steps as epochs * ceil(train/batch)

    // synthetic data
    int train_triplets = 512;
    int holdout_triplets = 128;
    int t_min = 24;
    int t_max = 60;
    double fps = 20.0;

    // module toggles (ablations)
    bool use_bmi = true;
    bool use_pmm = true;
    bool use_psm = true;

    int threads = 1;
    int log_every = 25;

    // optional external asset overrides; "" = built-in defaults
    std::string skeleton_path;
    std::string vocab_path;

    std::string to_json() const;            // canonical, ordered keys
    static RunConfig from_json(const std::string& text);
    static RunConfig load(const std::string& path);
    void save(const std::string& path) const;

    uint64_t hash() const;                  // FNV-1a of to_json()
    std::string hash_hex() const;
    int resolved_steps() const;
};

uint64_t fnv1a(const std::string& text);

} // namespace motedit
