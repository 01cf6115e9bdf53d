#pragma once

#include "motedit/layers.hpp"
#include "motedit/motion.hpp"

namespace motedit {

// Part-aware modulation: learnable part queries attend over motion features,
// a 2-layer transformer mixes the 5 part tokens, a head turns them into
// per-frame editability weights R in (0,1), and R gates a residual MLP on the
// motion features. Channel groups: 256 features split into 5 contiguous
// blocks (52,51,51,51,51), one per part.

struct PmmOutput {
    Var attention;   // [5 x T], rows sum to 1
    Var aggregated;  // [5 x D]
    Var transformed; // [5 x D]
    Var editability; // [T x 5]
    Var modulated;   // [T x D]
};

struct PmmLoss {
    Var total;  // psm + lambda_s * smooth
    Var psm;    // mean |R - S_bar|
    Var smooth; // (1/(N T)) sum of adjacent-frame |differences|
};

void init_pmm(ParamStore& ps, const AttentionConfig& cfg, int layers, int ff_mult, Rng& rng);

Var part_attention(Graph& g, Var f_m, Var queries, ParamStore& ps, int model_dim);
Var part_aggregate(Graph& g, Var attention, Var f_m);
Var part_transformer(Graph& g, Var z, const AttentionConfig& cfg, ParamStore& ps, int layers);
Var editability_head(Graph& g, Var z_hat, Var f_m, ParamStore& ps, int model_dim);
Var modulate(Graph& g, Var f_m, Var r, ParamStore& ps);

PmmOutput pmm_forward(Graph& g, Var f_m, const AttentionConfig& cfg, ParamStore& ps, int layers);
PmmLoss pmm_loss(Graph& g, Var r, const Tensor& s_bar, double lambda_s); // s_bar [T x 5]

// 0/1 matrix [5 x model_dim] mapping part weights onto their channel group.
Tensor part_group_matrix(int model_dim);

} // namespace motedit
