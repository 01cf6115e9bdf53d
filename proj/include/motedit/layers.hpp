#pragma once

#include <string>

#include "motedit/graph.hpp"

namespace motedit {

struct AttentionConfig {
    int model_dim = 256;
    int heads = 4;

    int head_dim() const { return model_dim / heads; }
    void validate() const; // model_dim divisible by heads
};

// Parameter creation. Weight matrices are stored [in x out] (y = x W + b) and
// initialized uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)); biases start at zero.
void init_linear(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng);
void init_mha(ParamStore& ps, const std::string& prefix, const AttentionConfig& cfg, Rng& rng);
void init_mlp(ParamStore& ps, const std::string& prefix, int dim, int hidden, Rng& rng);

// Graph builders over previously created parameters.
Var linear(Graph& g, Var x, ParamStore& ps, const std::string& prefix);
Var mha(Graph& g, Var q_in, Var kv_in, const AttentionConfig& cfg, ParamStore& ps,
        const std::string& prefix);
Var mlp(Graph& g, Var x, ParamStore& ps, const std::string& prefix); // fc2(gelu(fc1 x))

} // namespace motedit
