#include "motedit/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace motedit {

void AttentionConfig::validate() const {
    if (model_dim <= 0 || heads <= 0 || model_dim % heads != 0)
        throw std::runtime_error("attention config: model_dim " + std::to_string(model_dim) +
                                 " not divisible by heads " + std::to_string(heads));
}

void init_linear(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng) {
    ps.create(prefix + ".w", {in, out}, in, rng);
    ps.create_zeros(prefix + ".b", {1, out});
}

void init_mha(ParamStore& ps, const std::string& prefix, const AttentionConfig& cfg, Rng& rng) {
    cfg.validate();
    for (const char* part : {".q", ".k", ".v", ".o"})
        init_linear(ps, prefix + part, cfg.model_dim, cfg.model_dim, rng);
}

void init_mlp(ParamStore& ps, const std::string& prefix, int dim, int hidden, Rng& rng) {
    init_linear(ps, prefix + ".fc1", dim, hidden, rng);
    init_linear(ps, prefix + ".fc2", hidden, dim, rng);
}

Var linear(Graph& g, Var x, ParamStore& ps, const std::string& prefix) {
    return g.add_rowvec(g.matmul(x, g.param(ps, prefix + ".w")), g.param(ps, prefix + ".b"));
}

Var mha(Graph& g, Var q_in, Var kv_in, const AttentionConfig& cfg, ParamStore& ps,
        const std::string& prefix) {
    cfg.validate();
    Var q = linear(g, q_in, ps, prefix + ".q");
    Var k = linear(g, kv_in, ps, prefix + ".k");
    Var v = linear(g, kv_in, ps, prefix + ".v");
    int dh = cfg.head_dim();
    double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Var> heads;
    heads.reserve(cfg.heads);
    for (int h = 0; h < cfg.heads; ++h) {
        Var qh = g.slice_cols(q, h * dh, (h + 1) * dh);
        Var kh = g.slice_cols(k, h * dh, (h + 1) * dh);
        Var vh = g.slice_cols(v, h * dh, (h + 1) * dh);
        Var attn = g.softmax_rows(g.scale(g.matmul(qh, g.transpose(kh)), inv_scale));
        heads.push_back(g.matmul(attn, vh));
    }
    return linear(g, g.concat_cols(heads), ps, prefix + ".o");
}

Var mlp(Graph& g, Var x, ParamStore& ps, const std::string& prefix) {
    return linear(g, g.gelu(linear(g, x, ps, prefix + ".fc1")), ps, prefix + ".fc2");
}

} // namespace motedit
