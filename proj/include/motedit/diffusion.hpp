#pragma once

#include <functional>
#include <vector>

#include "motedit/layers.hpp"

namespace motedit {

struct NoiseSchedule {
    int train_steps = 300;
    int sample_steps = 200;
    std::vector<double> betas;      // [train_steps], increasing, in (0,1)
    std::vector<double> alphas_bar; // [train_steps], strictly decreasing

    // Cosine alpha-bar schedule with the usual 0.008 offset; betas clipped
    // at 0.999.
    static NoiseSchedule cosine(int train_steps, int sample_steps);
    void validate() const;
    // Ascending strided subset of {0..train_steps-1}, endpoints included;
    // the sampler walks it in reverse.
    std::vector<int> sample_indices() const;
};

// sqrt(abar_t) x0 + sqrt(1 - abar_t) noise
Tensor q_sample(const Tensor& x0, int t, const Tensor& noise, const NoiseSchedule& sched);

// Standard sinusoidal embedding of an integer timestep, [1 x dim].
Tensor timestep_embedding(int t, int dim);

// Noise predictor: transformer encoder over noisy feature frames. Input is the
// per-frame concat of x_t with the conditioning features (the modulated source
// features), projected to model_dim, plus the timestep embedding on every
// frame; each block self-attends, cross-attends to the text features, then
// applies a feed-forward; pre-layer-norm with residuals, final norm + linear.
void init_denoiser(ParamStore& ps, const AttentionConfig& cfg, int layers, int ff_mult, Rng& rng);
Var denoise(Graph& g, Var x_t, Var cond_frames, Var text, int t, const AttentionConfig& cfg,
            ParamStore& ps, int layers);

// Per-sample training objective at a fixed t: (1/T) ||noise - eps_hat||_F^2,
// i.e. mean squared error per frame over the feature channels.
struct DiffusionStep {
    Var loss;
    Var eps_hat;
};
DiffusionStep diffusion_loss(Graph& g, const Tensor& x0, const Tensor& noise, int t,
                             Var cond_frames, Var text, const AttentionConfig& cfg,
                             ParamStore& ps, const NoiseSchedule& sched, int layers);

// Ancestral sampling over the strided step subset. The model callback makes
// stubs and trained denoisers interchangeable. Deterministic given rng state.
using EpsModel = std::function<Tensor(const Tensor& x_t, int t)>;
Tensor ddpm_sample(const EpsModel& model, int rows, int cols, const NoiseSchedule& sched,
                   Rng& rng);

} // namespace motedit
