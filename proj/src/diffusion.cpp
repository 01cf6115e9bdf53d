#include "motedit/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace motedit {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

double cosine_f(double u) {
    double x = std::cos((u + 0.008) / 1.008 * M_PI / 2.0);
    return x * x;
}

void check_t(int t, const NoiseSchedule& sched, const char* what) {
    if (t < 0 || t >= sched.train_steps)
        fail(std::string(what) + ": timestep " + std::to_string(t) + " outside [0, " +
             std::to_string(sched.train_steps - 1) + "]");
}

} // namespace

NoiseSchedule NoiseSchedule::cosine(int train_steps, int sample_steps) {
    if (train_steps < 1) fail("schedule: train_steps must be >= 1");
    if (sample_steps < 1 || sample_steps > train_steps)
        fail("schedule: sample_steps must lie in [1, train_steps]");
    NoiseSchedule s;
    s.train_steps = train_steps;
    s.sample_steps = sample_steps;
    s.betas.resize(train_steps);
    s.alphas_bar.resize(train_steps);
    double f0 = cosine_f(0.0);
    double abar = 1.0;
    for (int t = 0; t < train_steps; ++t) {
        double lo = cosine_f(static_cast<double>(t) / train_steps) / f0;
        double hi = cosine_f(static_cast<double>(t + 1) / train_steps) / f0;
        double beta = std::min(1.0 - hi / lo, 0.999);
        s.betas[t] = beta;
        abar *= 1.0 - beta;
        s.alphas_bar[t] = abar;
    }
    s.validate();
    return s;
}

void NoiseSchedule::validate() const {
    if (static_cast<int>(betas.size()) != train_steps ||
        static_cast<int>(alphas_bar.size()) != train_steps)
        fail("schedule: array sizes disagree with train_steps");
    double prev_abar = 1.0;
    for (int t = 0; t < train_steps; ++t) {
        if (!(betas[t] > 0.0 && betas[t] < 1.0))
            fail("schedule: beta out of (0,1) at step " + std::to_string(t));
        if (!(alphas_bar[t] < prev_abar))
            fail("schedule: alpha_bar not strictly decreasing at step " + std::to_string(t));
        prev_abar = alphas_bar[t];
    }
}

std::vector<int> NoiseSchedule::sample_indices() const {
    std::vector<int> idx(sample_steps);
    if (sample_steps == 1) {
        idx[0] = train_steps - 1;
        return idx;
    }
    for (int i = 0; i < sample_steps; ++i) {
        double pos = static_cast<double>(i) * (train_steps - 1) / (sample_steps - 1);
        idx[i] = static_cast<int>(std::lround(pos));
    }
    for (int i = 1; i < sample_steps; ++i)
        if (idx[i] <= idx[i - 1]) fail("schedule: sample indices not strictly increasing");
    return idx;
}

Tensor q_sample(const Tensor& x0, int t, const Tensor& noise, const NoiseSchedule& sched) {
    check_t(t, sched, "q_sample");
    if (!x0.same_shape(noise)) shape_error("q_sample", x0, noise);
    double abar = sched.alphas_bar[t];
    double a = std::sqrt(abar), b = std::sqrt(1.0 - abar);
    Tensor out(x0.shape());
    for (size_t i = 0; i < out.numel(); ++i) out[i] = a * x0[i] + b * noise[i];
    return out;
}

Tensor timestep_embedding(int t, int dim) {
    Tensor e(1, dim);
    int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / half);
        e.at(0, i) = std::sin(t * freq);
        e.at(0, half + i) = std::cos(t * freq);
    }
    if (dim % 2 == 1) e.at(0, dim - 1) = 0.0;
    return e;
}

void init_denoiser(ParamStore& ps, const AttentionConfig& cfg, int layers, int ff_mult, Rng& rng) {
    cfg.validate();
    int d = cfg.model_dim;
    init_linear(ps, "den.in", 2 * d, d, rng);
    for (int l = 0; l < layers; ++l) {
        std::string prefix = "den.block" + std::to_string(l);
        init_mha(ps, prefix + ".self", cfg, rng);
        init_mha(ps, prefix + ".cross", cfg, rng);
        init_mlp(ps, prefix + ".ff", d, ff_mult * d, rng);
    }
    init_linear(ps, "den.out", d, d, rng);
}

Var denoise(Graph& g, Var x_t, Var cond_frames, Var text, int t, const AttentionConfig& cfg,
            ParamStore& ps, int layers) {
    const Tensor& xv = g.val(x_t);
    const Tensor& cv = g.val(cond_frames);
    if (xv.rows() != cv.rows() || xv.cols() != cfg.model_dim || cv.cols() != cfg.model_dim)
        fail("denoise: noisy features " + xv.shape_str() + " vs conditioning " + cv.shape_str());
    Var x = linear(g, g.concat_cols({x_t, cond_frames}), ps, "den.in");
    x = g.add_rowvec(x, g.input(timestep_embedding(t, cfg.model_dim)));
    for (int l = 0; l < layers; ++l) {
        std::string prefix = "den.block" + std::to_string(l);
        Var n = g.layer_norm(x);
        x = g.add(x, mha(g, n, n, cfg, ps, prefix + ".self"));
        x = g.add(x, mha(g, g.layer_norm(x), g.layer_norm(text), cfg, ps, prefix + ".cross"));
        x = g.add(x, mlp(g, g.layer_norm(x), ps, prefix + ".ff"));
    }
    return linear(g, g.layer_norm(x), ps, "den.out");
}

DiffusionStep diffusion_loss(Graph& g, const Tensor& x0, const Tensor& noise, int t,
                             Var cond_frames, Var text, const AttentionConfig& cfg,
                             ParamStore& ps, const NoiseSchedule& sched, int layers) {
    check_t(t, sched, "diffusion_loss");
    Var x_t = g.input(q_sample(x0, t, noise, sched));
    DiffusionStep step;
    step.eps_hat = denoise(g, x_t, cond_frames, text, t, cfg, ps, layers);
    Var diff = g.sub(step.eps_hat, g.input(noise));
    step.loss = g.scale(g.sum(g.mul(diff, diff)), 1.0 / static_cast<double>(x0.rows()));
    return step;
}

Tensor ddpm_sample(const EpsModel& model, int rows, int cols, const NoiseSchedule& sched,
                   Rng& rng) {
    std::vector<int> steps = sched.sample_indices();
    Tensor x = Tensor::normal({rows, cols}, rng);
    for (int i = static_cast<int>(steps.size()) - 1; i >= 0; --i) {
        int t = steps[i];
        double abar_t = sched.alphas_bar[t];
        Tensor eps = model(x, t);
        if (!eps.same_shape(x)) shape_error("ddpm_sample model output", eps, x);
        // x0 estimate from the noise prediction
        Tensor x0(x.shape());
        double inv_sqrt_abar = 1.0 / std::sqrt(abar_t);
        double sq1m = std::sqrt(1.0 - abar_t);
        for (size_t k = 0; k < x.numel(); ++k) x0[k] = (x[k] - sq1m * eps[k]) * inv_sqrt_abar;
        if (i == 0) {
            x = std::move(x0);
            break;
        }
        int s = steps[i - 1];
        double abar_s = sched.alphas_bar[s];
        double ratio = abar_t / abar_s; // product of alphas over (s, t]
        double denom = 1.0 - abar_t;
        double c0 = std::sqrt(abar_s) * (1.0 - ratio) / denom;
        double ct = std::sqrt(ratio) * (1.0 - abar_s) / denom;
        double sigma = std::sqrt((1.0 - abar_s) * (1.0 - ratio) / denom);
        Tensor next(x.shape());
        for (size_t k = 0; k < x.numel(); ++k)
            next[k] = c0 * x0[k] + ct * x[k] + sigma * rng.normal();
        x = std::move(next);
    }
    return x;
}

} // namespace motedit
