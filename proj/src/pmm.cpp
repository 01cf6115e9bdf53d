#include "motedit/pmm.hpp"

#include <cmath>
#include <stdexcept>

namespace motedit {

namespace {

constexpr int kParts = PartDecomposition::kPartCount;

} // namespace

Tensor part_group_matrix(int model_dim) {
    if (model_dim < kParts)
        throw std::runtime_error("part groups: model_dim " + std::to_string(model_dim) +
                                 " smaller than part count");
    Tensor b(kParts, model_dim);
    int base = model_dim / kParts, rem = model_dim % kParts;
    int d = 0;
    for (int i = 0; i < kParts; ++i) {
        int width = base + (i < rem ? 1 : 0);
        for (int k = 0; k < width; ++k) b.at(i, d++) = 1.0;
    }
    return b;
}

void init_pmm(ParamStore& ps, const AttentionConfig& cfg, int layers, int ff_mult, Rng& rng) {
    cfg.validate();
    int d = cfg.model_dim;
    ps.create("pmm.queries", {kParts, d}, d, rng);
    ps.create("pmm.attn.wq", {d, d}, d, rng);
    ps.create("pmm.attn.wk", {d, d}, d, rng);
    for (int l = 0; l < layers; ++l) {
        std::string prefix = "pmm.block" + std::to_string(l);
        init_mha(ps, prefix + ".attn", cfg, rng);
        init_mlp(ps, prefix + ".ff", d, d, rng); // part tokens use a narrow FF
    }
    init_mlp(ps, "pmm.head", d, d, rng);
    init_mlp(ps, "pmm.mod", d, ff_mult * d, rng);
}

Var part_attention(Graph& g, Var f_m, Var queries, ParamStore& ps, int model_dim) {
    if (g.val(f_m).cols() != model_dim || g.val(queries).cols() != model_dim)
        throw std::runtime_error("part_attention: dim mismatch, motion " +
                                 g.val(f_m).shape_str() + " queries " +
                                 g.val(queries).shape_str());
    Var q = g.matmul(queries, g.param(ps, "pmm.attn.wq"));
    Var k = g.matmul(f_m, g.param(ps, "pmm.attn.wk"));
    double inv_scale = 1.0 / std::sqrt(static_cast<double>(model_dim));
    return g.softmax_rows(g.scale(g.matmul(q, g.transpose(k)), inv_scale));
}

Var part_aggregate(Graph& g, Var attention, Var f_m) { return g.matmul(attention, f_m); }

Var part_transformer(Graph& g, Var z, const AttentionConfig& cfg, ParamStore& ps, int layers) {
    Var x = z;
    for (int l = 0; l < layers; ++l) {
        std::string prefix = "pmm.block" + std::to_string(l);
        Var n = g.layer_norm(x);
        x = g.add(x, mha(g, n, n, cfg, ps, prefix + ".attn"));
        x = g.add(x, mlp(g, g.layer_norm(x), ps, prefix + ".ff"));
    }
    return x;
}

Var editability_head(Graph& g, Var z_hat, Var f_m, ParamStore& ps, int model_dim) {
    Var keys = mlp(g, z_hat, ps, "pmm.head"); // [5 x D]
    double inv_scale = 1.0 / std::sqrt(static_cast<double>(model_dim));
    return g.sigmoid(g.scale(g.matmul(f_m, g.transpose(keys)), inv_scale));
}

Var modulate(Graph& g, Var f_m, Var r, ParamStore& ps) {
    const Tensor& rv = g.val(r);
    const Tensor& fv = g.val(f_m);
    if (rv.cols() != kParts || rv.rows() != fv.rows())
        throw std::runtime_error("modulate: R " + rv.shape_str() + " does not match motion " +
                                 fv.shape_str());
    Var gate = g.matmul(r, g.input(part_group_matrix(fv.cols()))); // [T x D]
    return g.add(f_m, g.mul(gate, mlp(g, f_m, ps, "pmm.mod")));
}

PmmOutput pmm_forward(Graph& g, Var f_m, const AttentionConfig& cfg, ParamStore& ps, int layers) {
    PmmOutput out;
    Var queries = g.param(ps, "pmm.queries");
    out.attention = part_attention(g, f_m, queries, ps, cfg.model_dim);
    out.aggregated = part_aggregate(g, out.attention, f_m);
    out.transformed = part_transformer(g, out.aggregated, cfg, ps, layers);
    out.editability = editability_head(g, out.transformed, f_m, ps, cfg.model_dim);
    out.modulated = modulate(g, f_m, out.editability, ps);
    return out;
}

PmmLoss pmm_loss(Graph& g, Var r, const Tensor& s_bar, double lambda_s) {
    const Tensor& rv = g.val(r);
    if (!rv.same_shape(s_bar)) shape_error("pmm_loss", rv, s_bar);
    int T = rv.rows(), N = rv.cols();
    PmmLoss loss;
    loss.psm = g.mean(g.abs(g.sub(r, g.input(s_bar))));
    if (T >= 2) {
        Var diff = g.sub(g.slice_rows(r, 1, T), g.slice_rows(r, 0, T - 1));
        loss.smooth = g.scale(g.sum(g.abs(diff)), 1.0 / static_cast<double>(N * T));
    } else {
        loss.smooth = g.input(Tensor::full({1, 1}, 0.0));
    }
    loss.total = g.add(loss.psm, g.scale(loss.smooth, lambda_s));
    return loss;
}

} // namespace motedit
