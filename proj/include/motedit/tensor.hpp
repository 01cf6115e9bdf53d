#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "motedit/rng.hpp"

namespace motedit {

// Dense row-major tensor of doubles. Rank 1 or 2 in practice.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(int rows, int cols);
    static Tensor row(std::vector<double> values);             // [1 x n]
    static Tensor full(std::vector<int> shape, double value);
    static Tensor uniform(std::vector<int> shape, double lo, double hi, Rng& rng);
    static Tensor normal(std::vector<int> shape, Rng& rng);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int rows() const { return rank() == 2 ? shape_[0] : (rank() == 1 ? 1 : 0); }
    int cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : 0); }
    size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }
    double& at(int r, int c) { return data_[static_cast<size_t>(r) * shape_[1] + c]; }
    double at(int r, int c) const { return data_[static_cast<size_t>(r) * shape_[1] + c]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    void fill(double v);
    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

// a * b, shapes [m x k] x [k x n]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// out += a * b^T ([m x k] x [n x k]) and out += a^T * b ([k x m] x [k x n]),
// without materializing the transposed operand
void add_matmul_nt(Tensor& out, const Tensor& a, const Tensor& b);
void add_matmul_tn(Tensor& out, const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

// throws std::runtime_error naming the operation and offending shapes
[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const Tensor& b);

} // namespace motedit
