#include "motedit/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "motedit/graph.hpp"

namespace motedit {

namespace {

Tensor first_rows(const Tensor& x, int rows) {
    if (rows == x.rows()) return x;
    Tensor out(rows, x.cols());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < x.cols(); ++c) out.at(r, c) = x.at(r, c);
    return out;
}

} // namespace

EditPipeline::EditPipeline(const RunConfig& cfg)
    : cfg_(cfg),
      attn_{cfg.model_dim, cfg.heads},
      schedule_(NoiseSchedule::cosine(cfg.train_steps, cfg.sample_steps)),
      text_(cfg.vocab_path.empty()
                ? FrozenTextEncoder::standard(cfg.model_dim)
                : FrozenTextEncoder(load_vocabulary(cfg.vocab_path), cfg.model_dim,
                                    kFrozenTextSeed)),
      codec_(FrozenMotionCodec::standard(cfg.model_dim)),
      params_(cfg.seed),
      skeleton_(default_skeleton()),
      parts_(default_parts()) {
    attn_.validate();
    if (!cfg.skeleton_path.empty()) load_skeleton_config(cfg.skeleton_path, skeleton_, parts_);
    Rng rng(cfg.seed);
    if (cfg.use_bmi) init_bmi(params_, attn_, cfg.ff_mult, rng);
    if (cfg.use_pmm) init_pmm(params_, attn_, cfg.pmm_layers, cfg.ff_mult, rng);
    init_denoiser(params_, attn_, cfg.denoiser_layers, cfg.ff_mult, rng);
    // Neutral stats until fitted or loaded: identity dataset normalization.
    stats_.s_min.fill(0.0);
    stats_.s_max.fill(1.0);
}

void EditPipeline::fit_stats(const std::vector<EditTriplet>& train_set) {
    std::vector<Tensor> raws;
    raws.reserve(train_set.size());
    for (const auto& t : train_set)
        raws.push_back(raw_similarity(t.source, t.target, skeleton_, parts_, cfg_.beta));
    stats_ = fit_global_stats(raws);
}

Tensor EditPipeline::supervision_for(const EditTriplet& t) const {
    SimilarityCurveSet curves = supervision_curves(t.source, t.target, skeleton_, parts_, stats_,
                                                   cfg_.beta, cfg_.epsilon);
    return transpose(curves.s_final); // [T x 5]
}

EditPipeline::SampleGraph EditPipeline::build_sample(Graph& g, const EditTriplet& t, int timestep,
                                                     const Tensor& noise) {
    const int tc = std::min(t.source.frame_count(), t.target.frame_count());
    Tensor f_t_raw = text_.embed(t.tokens);
    Tensor f_m_raw = first_rows(codec_.encode(t.source), tc);
    Tensor x0 = first_rows(codec_.encode(t.target), tc);
    if (!noise.same_shape(x0))
        throw std::runtime_error("train sample: noise shape " + noise.shape_str() +
                                 " does not match target features " + x0.shape_str());

    Var f_t = g.input(std::move(f_t_raw));
    Var f_m = g.input(std::move(f_m_raw));
    Var text_cond = f_t;
    Var motion_feat = f_m;
    if (cfg_.use_bmi) {
        BmiOutput b = bmi_forward(g, f_t, f_m, attn_, params_);
        text_cond = b.text;
        motion_feat = b.motion;
    }

    SampleGraph out;
    Var cond = motion_feat;
    if (cfg_.use_pmm) {
        PmmOutput p = pmm_forward(g, motion_feat, attn_, params_, cfg_.pmm_layers);
        cond = p.modulated;
        out.editability = p.editability;
        out.has_editability = true;
    }

    DiffusionStep d = diffusion_loss(g, x0, noise, timestep, cond, text_cond, attn_, params_,
                                     schedule_, cfg_.denoiser_layers);
    out.diffusion = d.loss;
    out.total = d.loss;
    if (cfg_.use_pmm && cfg_.use_psm) {
        Tensor s_bar = supervision_for(t);
        PmmLoss pl = pmm_loss(g, out.editability, s_bar, cfg_.lambda_smooth);
        out.psm = pl.psm;
        out.smooth = pl.smooth;
        out.has_pmm_loss = true;
        out.total = g.add(out.total, pl.total);
    }
    return out;
}

StepLosses EditPipeline::train_step(const std::vector<const EditTriplet*>& batch, Rng& rng) {
    if (batch.empty()) throw std::runtime_error("train step: empty batch");
    params_.zero_grads();
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    StepLosses losses;
    for (const EditTriplet* t : batch) {
        const int tc = std::min(t->source.frame_count(), t->target.frame_count());
        const int step = static_cast<int>(rng.below(static_cast<uint64_t>(cfg_.train_steps)));
        Tensor noise = Tensor::normal({tc, cfg_.model_dim}, rng);
        Graph g;
        SampleGraph sg = build_sample(g, *t, step, noise);
        g.backward(g.scale(sg.total, inv_n));
        losses.total += g.val(sg.total)[0] * inv_n;
        losses.diffusion += g.val(sg.diffusion)[0] * inv_n;
        if (sg.has_pmm_loss) {
            losses.psm += g.val(sg.psm)[0] * inv_n;
            losses.smooth += g.val(sg.smooth)[0] * inv_n;
        }
    }
    adam_step();
    return losses;
}

std::vector<StepLosses> EditPipeline::fit(const std::vector<EditTriplet>& train_set,
                                          const std::function<void(int, const StepLosses&)>& on_step) {
    if (train_set.empty()) throw std::runtime_error("fit: empty training set");
    const int steps = cfg_.resolved_steps();
    const int n = static_cast<int>(train_set.size());
    Rng rng(mix_seed(cfg_.seed, 0x747261696eull)); // one stream for shuffles and noise
    std::vector<int> order;
    size_t cursor = 0;
    std::vector<StepLosses> history;
    history.reserve(steps);
    for (int step = 0; step < steps; ++step) {
        std::vector<const EditTriplet*> batch;
        batch.reserve(cfg_.batch_size);
        while (static_cast<int>(batch.size()) < cfg_.batch_size) {
            if (cursor >= order.size()) {
                order = shuffled_indices(n, rng);
                cursor = 0;
            }
            batch.push_back(&train_set[order[cursor++]]);
        }
        StepLosses l = train_step(batch, rng);
        history.push_back(l);
        if (on_step) on_step(step, l);
    }
    return history;
}

void EditPipeline::adam_step() {
    ++adam_t_;
    const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(adam_t_));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(adam_t_));
    for (auto& [name, entry] : params_) {
        AdamSlot& slot = adam_[name];
        if (slot.m.empty()) {
            slot.m = Tensor::full(entry.value.shape(), 0.0);
            slot.v = Tensor::full(entry.value.shape(), 0.0);
        }
        double* p = entry.value.data();
        const double* gr = entry.grad.data();
        double* m = slot.m.data();
        double* v = slot.v.data();
        const size_t n = entry.value.numel();
        for (size_t i = 0; i < n; ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * gr[i];
            v[i] = b2 * v[i] + (1.0 - b2) * gr[i] * gr[i];
            const double m_hat = m[i] / corr1;
            const double v_hat = v[i] / corr2;
            // decoupled weight decay
            p[i] -= cfg_.lr * (m_hat / (std::sqrt(v_hat) + cfg_.adam_eps) +
                               cfg_.weight_decay * p[i]);
        }
    }
}

EditPipeline::Conditioning EditPipeline::condition_features(const Tensor& f_t_raw,
                                                            const Tensor& f_m_raw) {
    Graph g;
    Var f_t = g.input(f_t_raw);
    Var f_m = g.input(f_m_raw);
    Var text_cond = f_t;
    Var motion_feat = f_m;
    if (cfg_.use_bmi) {
        BmiOutput b = bmi_forward(g, f_t, f_m, attn_, params_);
        text_cond = b.text;
        motion_feat = b.motion;
    }
    Conditioning out;
    if (cfg_.use_pmm) {
        PmmOutput p = pmm_forward(g, motion_feat, attn_, params_, cfg_.pmm_layers);
        out.motion = g.val(p.modulated);
        out.editability = g.val(p.editability);
    } else {
        out.motion = g.val(motion_feat);
        out.editability = Tensor::full({f_m_raw.rows(), PartDecomposition::kPartCount}, 0.5);
    }
    out.text = g.val(text_cond);
    return out;
}

EditPipeline::Conditioning EditPipeline::condition(const MotionSequence& source,
                                                   const std::string& instruction) {
    return condition_features(text_.embed_text(instruction), codec_.encode(source));
}

EditPipeline::EditResult EditPipeline::edit(const MotionSequence& source,
                                            const std::string& instruction, uint64_t sample_seed,
                                            int sample_steps_override) {
    Conditioning cond = condition(source, instruction);
    NoiseSchedule sched = schedule_;
    if (sample_steps_override > 0) {
        sched = NoiseSchedule::cosine(cfg_.train_steps, sample_steps_override);
    }
    EpsModel model = [&](const Tensor& x_t, int t) {
        Graph g;
        Var eps = denoise(g, g.input(x_t), g.input(cond.motion), g.input(cond.text), t, attn_,
                          params_, cfg_.denoiser_layers);
        return g.val(eps);
    };
    Rng rng(mix_seed(cfg_.seed, sample_seed));
    Tensor features =
        ddpm_sample(model, source.frame_count(), cfg_.model_dim, sched, rng);
    EditResult out{codec_.decode(features, source.fps()), cond.editability};
    return out;
}

void EditPipeline::save(const std::string& dir) const {
    params_.save(dir + "/checkpoint.bin");
    save_stats(stats_, cfg_.beta, cfg_.epsilon, dir + "/stats.json");
}

void EditPipeline::load(const std::string& dir) {
    ParamStore loaded = ParamStore::load(dir + "/checkpoint.bin");
    for (const auto& name : params_.names()) {
        if (!loaded.has(name))
            throw std::runtime_error("checkpoint: missing parameter " + name +
                                     " (was it trained with different module switches?)");
        if (!loaded.at(name).value.same_shape(params_.at(name).value))
            throw std::runtime_error("checkpoint: shape mismatch for " + name);
    }
    if (loaded.size() != params_.size())
        throw std::runtime_error("checkpoint: parameter count mismatch (config has " +
                                 std::to_string(params_.size()) + ", file has " +
                                 std::to_string(loaded.size()) + ")");
    params_ = std::move(loaded);
    stats_ = load_stats(dir + "/stats.json");
    adam_.clear();
    adam_t_ = 0;
}

} // namespace motedit
