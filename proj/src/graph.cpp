#include "motedit/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace motedit {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInvSqrt2 = 0.70710678118654752;
constexpr double kInvSqrt2Pi = 0.39894228040143268;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

void accumulate(Tensor& g, const Tensor& delta) {
    for (size_t i = 0; i < g.numel(); ++i) g[i] += delta[i];
}

} // namespace

int Graph::push(Tensor value, std::function<void(Graph&)> back) {
    Node n;
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Var Graph::input(Tensor value) { return {push(std::move(value), nullptr)}; }

Var Graph::param(ParamStore& store, const std::string& name) {
    Var v{push(Tensor{}, nullptr)};
    nodes_[v.id].alias = &store.value(name); // store outlives the graph; not resized mid-pass
    nodes_[v.id].store = &store;
    nodes_[v.id].param_name = name;
    return v;
}

Var Graph::matmul(Var a, Var b) {
    Tensor c = motedit::matmul(val_ref(a.id), val_ref(b.id)); // shape-checked there
    int ia = a.id, ib = b.id;
    return {push(std::move(c), [ia, ib](Graph& g) {
        const Tensor& dc = g.grad_ref(g.out_);
        add_matmul_nt(g.grad_ref(ia), dc, g.val_ref(ib));
        add_matmul_tn(g.grad_ref(ib), g.val_ref(ia), dc);
    })};
}

Var Graph::transpose(Var a) {
    int ia = a.id;
    return {push(motedit::transpose(val_ref(ia)), [ia](Graph& g) {
        accumulate(g.grad_ref(ia), motedit::transpose(g.grad_ref(g.out_)));
    })};
}

Var Graph::add(Var a, Var b) {
    if (!val_ref(a.id).same_shape(val_ref(b.id)))
        shape_error("add", val_ref(a.id), val_ref(b.id));
    int ia = a.id, ib = b.id;
    return {push(motedit::add(val_ref(ia), val_ref(ib)), [ia, ib](Graph& g) {
        accumulate(g.grad_ref(ia), g.grad_ref(g.out_));
        accumulate(g.grad_ref(ib), g.grad_ref(g.out_));
    })};
}

Var Graph::add_rowvec(Var x, Var bias) {
    const Tensor& xv = val_ref(x.id);
    const Tensor& bv = val_ref(bias.id);
    if (bv.rows() != 1 || bv.cols() != xv.cols()) shape_error("add_rowvec", xv, bv);
    Tensor y(xv.shape());
    for (int r = 0; r < xv.rows(); ++r)
        for (int c = 0; c < xv.cols(); ++c) y.at(r, c) = xv.at(r, c) + bv.at(0, c);
    int ix = x.id, ib = bias.id;
    return {push(std::move(y), [ix, ib](Graph& g) {
        const Tensor& dy = g.grad_ref(g.out_);
        accumulate(g.grad_ref(ix), dy);
        Tensor& db = g.grad_ref(ib);
        for (int r = 0; r < dy.rows(); ++r)
            for (int c = 0; c < dy.cols(); ++c) db.at(0, c) += dy.at(r, c);
    })};
}

Var Graph::sub(Var a, Var b) {
    if (!val_ref(a.id).same_shape(val_ref(b.id)))
        shape_error("sub", val_ref(a.id), val_ref(b.id));
    int ia = a.id, ib = b.id;
    return {push(motedit::sub(val_ref(ia), val_ref(ib)), [ia, ib](Graph& g) {
        const Tensor& dc = g.grad_ref(g.out_);
        accumulate(g.grad_ref(ia), dc);
        Tensor& gb = g.grad_ref(ib);
        for (size_t i = 0; i < gb.numel(); ++i) gb[i] -= dc[i];
    })};
}

Var Graph::mul(Var a, Var b) {
    const Tensor& av = val_ref(a.id);
    const Tensor& bv = val_ref(b.id);
    if (!av.same_shape(bv)) shape_error("mul", av, bv);
    Tensor y(av.shape());
    for (size_t i = 0; i < y.numel(); ++i) y[i] = av[i] * bv[i];
    int ia = a.id, ib = b.id;
    return {push(std::move(y), [ia, ib](Graph& g) {
        const Tensor& dc = g.grad_ref(g.out_);
        const Tensor& av2 = g.val_ref(ia);
        const Tensor& bv2 = g.val_ref(ib);
        Tensor& ga = g.grad_ref(ia);
        Tensor& gb = g.grad_ref(ib);
        for (size_t i = 0; i < dc.numel(); ++i) {
            ga[i] += dc[i] * bv2[i];
            gb[i] += dc[i] * av2[i];
        }
    })};
}

Var Graph::scale(Var a, double s) {
    int ia = a.id;
    return {push(motedit::scale(val_ref(ia), s), [ia, s](Graph& g) {
        const Tensor& dc = g.grad_ref(g.out_);
        Tensor& ga = g.grad_ref(ia);
        for (size_t i = 0; i < dc.numel(); ++i) ga[i] += s * dc[i];
    })};
}

Var Graph::abs(Var a) {
    const Tensor& av = val_ref(a.id);
    Tensor y(av.shape());
    for (size_t i = 0; i < y.numel(); ++i) y[i] = std::abs(av[i]);
    int ia = a.id;
    return {push(std::move(y), [ia](Graph& g) {
        const Tensor& dc = g.grad_ref(g.out_);
        const Tensor& av2 = g.val_ref(ia);
        Tensor& ga = g.grad_ref(ia);
        for (size_t i = 0; i < dc.numel(); ++i) {
            double s = av2[i] > 0.0 ? 1.0 : (av2[i] < 0.0 ? -1.0 : 0.0);
            ga[i] += dc[i] * s;
        }
    })};
}

Var Graph::slice_rows(Var a, int r0, int r1) {
    const Tensor& av = val_ref(a.id);
    if (r0 < 0 || r1 > av.rows() || r0 >= r1)
        fail("slice_rows: [" + std::to_string(r0) + "," + std::to_string(r1) + ") of " +
             av.shape_str());
    Tensor y(r1 - r0, av.cols());
    for (int r = r0; r < r1; ++r)
        for (int c = 0; c < av.cols(); ++c) y.at(r - r0, c) = av.at(r, c);
    int ia = a.id;
    return {push(std::move(y), [ia, r0, r1](Graph& g) {
        const Tensor& dc = g.grad_ref(g.out_);
        Tensor& ga = g.grad_ref(ia);
        for (int r = r0; r < r1; ++r)
            for (int c = 0; c < dc.cols(); ++c) ga.at(r, c) += dc.at(r - r0, c);
    })};
}

Var Graph::slice_cols(Var a, int c0, int c1) {
    const Tensor& av = val_ref(a.id);
    if (c0 < 0 || c1 > av.cols() || c0 >= c1)
        fail("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) + ") of " +
             av.shape_str());
    Tensor y(av.rows(), c1 - c0);
    for (int r = 0; r < av.rows(); ++r)
        for (int c = c0; c < c1; ++c) y.at(r, c - c0) = av.at(r, c);
    int ia = a.id;
    return {push(std::move(y), [ia, c0, c1](Graph& g) {
        const Tensor& dc = g.grad_ref(g.out_);
        Tensor& ga = g.grad_ref(ia);
        for (int r = 0; r < dc.rows(); ++r)
            for (int c = c0; c < c1; ++c) ga.at(r, c) += dc.at(r, c - c0);
    })};
}

Var Graph::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) fail("concat_cols: no inputs");
    int rows = val_ref(parts[0].id).rows();
    int cols = 0;
    for (Var p : parts) {
        if (val_ref(p.id).rows() != rows)
            shape_error("concat_cols", val_ref(parts[0].id), val_ref(p.id));
        cols += val_ref(p.id).cols();
    }
    Tensor y(rows, cols);
    std::vector<int> ids, offsets;
    int off = 0;
    for (Var p : parts) {
        const Tensor& pv = val_ref(p.id);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < pv.cols(); ++c) y.at(r, off + c) = pv.at(r, c);
        ids.push_back(p.id);
        offsets.push_back(off);
        off += pv.cols();
    }
    return {push(std::move(y), [ids, offsets](Graph& g) {
        const Tensor& dc = g.grad_ref(g.out_);
        for (size_t k = 0; k < ids.size(); ++k) {
            Tensor& gp = g.grad_ref(ids[k]);
            for (int r = 0; r < gp.rows(); ++r)
                for (int c = 0; c < gp.cols(); ++c) gp.at(r, c) += dc.at(r, offsets[k] + c);
        }
    })};
}

Var Graph::softmax_rows(Var a) {
    const Tensor& av = val_ref(a.id);
    Tensor y(av.shape());
    for (int r = 0; r < av.rows(); ++r) {
        double m = av.at(r, 0);
        for (int c = 1; c < av.cols(); ++c) m = std::max(m, av.at(r, c));
        double z = 0.0;
        for (int c = 0; c < av.cols(); ++c) {
            double e = std::exp(av.at(r, c) - m);
            y.at(r, c) = e;
            z += e;
        }
        for (int c = 0; c < av.cols(); ++c) y.at(r, c) /= z;
    }
    int ia = a.id;
    return {push(std::move(y), [ia](Graph& g) {
        const Tensor& yv = g.val_ref(g.out_);
        const Tensor& dy = g.grad_ref(g.out_);
        Tensor& ga = g.grad_ref(ia);
        for (int r = 0; r < yv.rows(); ++r) {
            double dot = 0.0;
            for (int c = 0; c < yv.cols(); ++c) dot += dy.at(r, c) * yv.at(r, c);
            for (int c = 0; c < yv.cols(); ++c)
                ga.at(r, c) += yv.at(r, c) * (dy.at(r, c) - dot);
        }
    })};
}

Var Graph::layer_norm(Var a) {
    const Tensor& av = val_ref(a.id);
    int n = av.cols();
    Tensor y(av.shape());
    Tensor inv_sigma(av.rows(), 1);
    for (int r = 0; r < av.rows(); ++r) {
        double mu = 0.0;
        for (int c = 0; c < n; ++c) mu += av.at(r, c);
        mu /= n;
        double var = 0.0;
        for (int c = 0; c < n; ++c) {
            double d = av.at(r, c) - mu;
            var += d * d;
        }
        var /= n;
        double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        inv_sigma.at(r, 0) = inv;
        for (int c = 0; c < n; ++c) y.at(r, c) = (av.at(r, c) - mu) * inv;
    }
    int ia = a.id;
    Var out{push(std::move(y), nullptr)};
    // inv_sigma lives in the closure; value() stays the normalized output
    nodes_[out.id].back = [ia, inv_sigma](Graph& g) {
        const Tensor& yv = g.val_ref(g.out_);
        const Tensor& dy = g.grad_ref(g.out_);
        Tensor& ga = g.grad_ref(ia);
        int cols = yv.cols();
        for (int r = 0; r < yv.rows(); ++r) {
            double mean_dy = 0.0, mean_dyy = 0.0;
            for (int c = 0; c < cols; ++c) {
                mean_dy += dy.at(r, c);
                mean_dyy += dy.at(r, c) * yv.at(r, c);
            }
            mean_dy /= cols;
            mean_dyy /= cols;
            double inv = inv_sigma.at(r, 0);
            for (int c = 0; c < cols; ++c)
                ga.at(r, c) += (dy.at(r, c) - mean_dy - yv.at(r, c) * mean_dyy) * inv;
        }
    };
    return out;
}

Var Graph::gelu(Var a) {
    const Tensor& av = val_ref(a.id);
    Tensor y(av.shape());
    for (size_t i = 0; i < y.numel(); ++i) {
        double x = av[i];
        y[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    }
    int ia = a.id;
    return {push(std::move(y), [ia](Graph& g) {
        const Tensor& dc = g.grad_ref(g.out_);
        const Tensor& av2 = g.val_ref(ia);
        Tensor& ga = g.grad_ref(ia);
        for (size_t i = 0; i < dc.numel(); ++i) {
            double x = av2[i];
            double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
            ga[i] += dc[i] * (cdf + x * pdf);
        }
    })};
}

Var Graph::sigmoid(Var a) {
    const Tensor& av = val_ref(a.id);
    Tensor y(av.shape());
    for (size_t i = 0; i < y.numel(); ++i) y[i] = 1.0 / (1.0 + std::exp(-av[i]));
    int ia = a.id;
    return {push(std::move(y), [ia](Graph& g) {
        const Tensor& yv = g.val_ref(g.out_);
        const Tensor& dc = g.grad_ref(g.out_);
        Tensor& ga = g.grad_ref(ia);
        for (size_t i = 0; i < dc.numel(); ++i) ga[i] += dc[i] * yv[i] * (1.0 - yv[i]);
    })};
}

Var Graph::sum(Var a) {
    const Tensor& av = val_ref(a.id);
    double s = 0.0;
    for (size_t i = 0; i < av.numel(); ++i) s += av[i];
    Tensor y(1, 1);
    y[0] = s;
    int ia = a.id;
    return {push(std::move(y), [ia](Graph& g) {
        double d = g.grad_ref(g.out_)[0];
        Tensor& ga = g.grad_ref(ia);
        for (size_t i = 0; i < ga.numel(); ++i) ga[i] += d;
    })};
}

Var Graph::mean(Var a) {
    size_t n = val_ref(a.id).numel();
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

void Graph::backward(Var loss) {
    if (loss.id < 0 || loss.id >= static_cast<int>(nodes_.size()))
        fail("backward: invalid loss handle");
    if (nodes_[loss.id].value.numel() != 1)
        fail("backward: loss must be scalar, got " + nodes_[loss.id].value.shape_str());
    for (auto& n : nodes_) {
        const Tensor& v = n.alias ? *n.alias : n.value;
        if (n.grad.numel() != v.numel()) n.grad = Tensor::full(v.shape(), 0.0);
        else n.grad.fill(0.0);
    }
    nodes_[loss.id].grad[0] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        if (nodes_[i].back) {
            out_ = i;
            nodes_[i].back(*this);
        }
    }
    for (auto& n : nodes_)
        if (n.store) accumulate(n.store->grad(n.param_name), n.grad);
}

} // namespace motedit
