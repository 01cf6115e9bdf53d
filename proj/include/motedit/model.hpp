#pragma once

#include <functional>
#include <string>
#include <vector>

#include "motedit/bmi.hpp"
#include "motedit/config.hpp"
#include "motedit/diffusion.hpp"
#include "motedit/pmm.hpp"
#include "motedit/similarity.hpp"
#include "motedit/synth.hpp"

namespace motedit {

struct StepLosses {
    double total = 0, psm = 0, smooth = 0, diffusion = 0;
};

// Everything needed to train and run the editor: frozen stand-ins, trainable
// parameters, schedule, normalization stats. The trainable path is
//   F_t = embed(text), F_m = encode(source)
//   BMI -> F_t', F_m'         (skippable for ablation)
//   PMM -> R, F_m''           (skippable)
//   denoiser over corrupted target features, conditioned on F_m'' per frame
//   and on F_t' via cross-attention
// with loss L_diff + L_PSM + lambda_s * L_smooth (the PMM terms skippable).
class EditPipeline {
public:
    explicit EditPipeline(const RunConfig& cfg);

    // Fit the dataset-level similarity stats on the training split.
    void fit_stats(const std::vector<EditTriplet>& train_set);

    // S_bar for one triplet as the [T x 5] supervision layout.
    Tensor supervision_for(const EditTriplet& t) const;

    // One optimizer step over a batch; gradients averaged across samples.
    // rng drives timestep and noise draws.
    StepLosses train_step(const std::vector<const EditTriplet*>& batch, Rng& rng);

    // Epoch-shuffled minibatch training for config().resolved_steps() steps.
    // fit_stats must have run first when the PSM loss is enabled.
    std::vector<StepLosses> fit(const std::vector<EditTriplet>& train_set,
                                const std::function<void(int, const StepLosses&)>& on_step = {});

    struct EditResult {
        MotionSequence motion;
        Tensor editability; // [T x 5]; 0.5 everywhere when the PMM is disabled
    };
    EditResult edit(const MotionSequence& source, const std::string& instruction,
                    uint64_t sample_seed, int sample_steps_override = 0);

    // Feature-space conditioning pass without gradients (exposed for tests).
    struct Conditioning {
        Tensor text;        // F_t'
        Tensor motion;      // F_m''
        Tensor editability; // [T x 5]
    };
    Conditioning condition(const MotionSequence& source, const std::string& instruction);

    void save(const std::string& dir) const;   // checkpoint.bin + stats.json
    void load(const std::string& dir);

    const RunConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const NoiseSchedule& schedule() const { return schedule_; }
    const FrozenTextEncoder& text_encoder() const { return text_; }
    const FrozenMotionCodec& codec() const { return codec_; }
    const GlobalNormStats& stats() const { return stats_; }
    void set_stats(const GlobalNormStats& s) { stats_ = s; }

    // Graph-building forward shared by training and tests. Returns the loss
    // terms for one sample at a fixed diffusion timestep.
    struct SampleGraph {
        Var total, diffusion;
        Var psm, smooth;   // only valid when has_pmm_loss
        bool has_pmm_loss = false;
        Var editability;   // only valid when has_editability
        bool has_editability = false;
    };
    SampleGraph build_sample(Graph& g, const EditTriplet& t, int timestep,
                             const Tensor& noise);

private:
    struct AdamSlot {
        Tensor m, v;
    };

    Conditioning condition_features(const Tensor& f_t_raw, const Tensor& f_m_raw);
    void adam_step();

    RunConfig cfg_;
    AttentionConfig attn_;
    NoiseSchedule schedule_;
    FrozenTextEncoder text_;
    FrozenMotionCodec codec_;
    ParamStore params_;
    GlobalNormStats stats_{};
    Skeleton skeleton_;
    PartDecomposition parts_;
    std::map<std::string, AdamSlot> adam_;
    long adam_t_ = 0;
};

} // namespace motedit
