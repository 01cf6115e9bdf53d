#include "motedit/bmi.hpp"

#include <stdexcept>

namespace motedit {

void init_bmi(ParamStore& ps, const AttentionConfig& cfg, int ff_mult, Rng& rng) {
    init_mha(ps, "bmi.text_self", cfg, rng);
    init_mha(ps, "bmi.text_cross", cfg, rng);
    init_mha(ps, "bmi.motion_cross", cfg, rng);
    init_mlp(ps, "bmi.mlp", cfg.model_dim, ff_mult * cfg.model_dim, rng);
}

BmiOutput bmi_forward(Graph& g, Var f_t, Var f_m, const AttentionConfig& cfg, ParamStore& ps) {
    if (g.val(f_t).cols() != cfg.model_dim || g.val(f_m).cols() != cfg.model_dim)
        throw std::runtime_error("bmi: feature dim mismatch, text " + g.val(f_t).shape_str() +
                                 " motion " + g.val(f_m).shape_str() + " vs model_dim " +
                                 std::to_string(cfg.model_dim));

    Var t1 = g.add(f_t, mha(g, g.layer_norm(f_t), g.layer_norm(f_t), cfg, ps, "bmi.text_self"));
    Var t_out = g.add(t1, mha(g, g.layer_norm(t1), g.layer_norm(f_m), cfg, ps, "bmi.text_cross"));
    Var m1 = g.add(f_m, mha(g, g.layer_norm(f_m), g.layer_norm(t_out), cfg, ps, "bmi.motion_cross"));
    Var m_out = g.add(m1, mlp(g, g.layer_norm(m1), ps, "bmi.mlp"));
    return {t_out, m_out};
}

} // namespace motedit
