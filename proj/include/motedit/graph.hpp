#pragma once

#include <functional>
#include <string>
#include <vector>

#include "motedit/param_store.hpp"
#include "motedit/tensor.hpp"

namespace motedit {

// Handle into a Graph's tape.
struct Var {
    int id = -1;
};

// Reverse-mode tape over Tensor values. One graph per forward pass; backward()
// walks the tape in reverse creation order. Parameter leaves accumulate their
// gradients straight into the owning ParamStore.
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var input(Tensor value);                       // constant leaf
    Var param(ParamStore& store, const std::string& name);

    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var add(Var a, Var b);          // same shape
    Var add_rowvec(Var x, Var bias); // [m x n] + [1 x n]
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);          // elementwise
    Var scale(Var a, double s);
    Var abs(Var a);                 // d|x|/dx at 0 taken as 0
    Var slice_rows(Var a, int r0, int r1);
    Var slice_cols(Var a, int c0, int c1);
    Var concat_cols(const std::vector<Var>& parts);
    Var softmax_rows(Var a);
    Var layer_norm(Var a);          // per row, no affine, eps 1e-5
    Var gelu(Var a);                // exact erf form
    Var sigmoid(Var a);
    Var sum(Var a);                 // -> [1 x 1]
    Var mean(Var a);                // -> [1 x 1]

    // Seeds d(loss)=1 and propagates. loss must be scalar-shaped.
    void backward(Var loss);

    const Tensor& val(Var v) const { return val_ref(v.id); }
    const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        const Tensor* alias = nullptr;    // parameter leaves borrow the store's tensor
        Tensor grad;
        std::function<void(Graph&)> back; // empty for leaves
        ParamStore* store = nullptr;      // set for parameter leaves
        std::string param_name;
    };

    int push(Tensor value, std::function<void(Graph&)> back);
    Tensor& grad_ref(int id) { return nodes_[id].grad; }
    const Tensor& val_ref(int id) const {
        const Node& n = nodes_[id];
        return n.alias ? *n.alias : n.value;
    }

    std::vector<Node> nodes_;
    int out_ = -1; // node whose backward closure is currently running
};

} // namespace motedit
