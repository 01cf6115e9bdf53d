#include "motedit/tensor.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace motedit {

namespace {
size_t shape_numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw std::runtime_error("tensor: negative dimension");
        n *= static_cast<size_t>(d);
    }
    return n;
}
} // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(shape_numel(shape_), 0.0);
}

Tensor::Tensor(int rows, int cols) : Tensor(std::vector<int>{rows, cols}) {}

Tensor Tensor::row(std::vector<double> values) {
    Tensor t(1, static_cast<int>(values.size()));
    for (size_t i = 0; i < values.size(); i++) t.data_[i] = values[i];
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

Tensor Tensor::uniform(std::vector<int> shape, double lo, double hi, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_) v = rng.uniform(lo, hi);
    return t;
}

Tensor Tensor::normal(std::vector<int> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_) v = rng.normal();
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::fill(double v) {
    for (auto& x : data_) x = v;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape_.size(); i++) os << (i ? " x " : "") << shape_[i];
    os << "]";
    return os.str();
}

void shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
    throw std::runtime_error(op + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

using EigenMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using EigenMapMut = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) shape_error("matmul", a, b);
    Tensor c(a.rows(), b.cols());
    EigenMap ma(a.data(), a.rows(), a.cols());
    EigenMap mb(b.data(), b.rows(), b.cols());
    EigenMapMut mc(c.data(), c.rows(), c.cols());
    mc.noalias() = ma * mb;
    return c;
}

void add_matmul_nt(Tensor& out, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) shape_error("add_matmul_nt", a, b);
    if (out.rows() != a.rows() || out.cols() != b.rows()) shape_error("add_matmul_nt", out, a);
    EigenMap ma(a.data(), a.rows(), a.cols());
    EigenMap mb(b.data(), b.rows(), b.cols());
    EigenMapMut mo(out.data(), out.rows(), out.cols());
    mo.noalias() += ma * mb.transpose();
}

void add_matmul_tn(Tensor& out, const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows()) shape_error("add_matmul_tn", a, b);
    if (out.rows() != a.cols() || out.cols() != b.cols()) shape_error("add_matmul_tn", out, a);
    EigenMap ma(a.data(), a.rows(), a.cols());
    EigenMap mb(b.data(), b.rows(), b.cols());
    EigenMapMut mo(out.data(), out.rows(), out.cols());
    mo.noalias() += ma.transpose() * mb;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw std::runtime_error("transpose: rank-2 tensor required, got " + a.shape_str());
    Tensor c(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); i++)
        for (int j = 0; j < a.cols(); j++) c.at(j, i) = a.at(i, j);
    return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) shape_error("add", a, b);
    Tensor c = a;
    for (size_t i = 0; i < c.numel(); i++) c[i] += b[i];
    return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) shape_error("sub", a, b);
    Tensor c = a;
    for (size_t i = 0; i < c.numel(); i++) c[i] -= b[i];
    return c;
}

Tensor scale(const Tensor& a, double s) {
    Tensor c = a;
    for (size_t i = 0; i < c.numel(); i++) c[i] *= s;
    return c;
}

} // namespace motedit
