#pragma once

#include "motedit/layers.hpp"

namespace motedit {

// Bidirectional text-motion interaction. Text runs [L x D], motion runs
// [T x D]; both keep their shape. Pre-layer-norm with residuals throughout:
//   t1   = F_t + SelfAttn(LN(F_t))
//   F_t' = t1  + CrossAttn(q = LN(t1),  kv = LN(F_m))
//   m1   = F_m + CrossAttn(q = LN(F_m), kv = LN(F_t'))
//   F_m' = m1  + MLP(LN(m1))            (MLP on the motion branch only)
struct BmiOutput {
    Var text;   // F_t'
    Var motion; // F_m'
};

void init_bmi(ParamStore& ps, const AttentionConfig& cfg, int ff_mult, Rng& rng);
BmiOutput bmi_forward(Graph& g, Var f_t, Var f_m, const AttentionConfig& cfg, ParamStore& ps);

} // namespace motedit
