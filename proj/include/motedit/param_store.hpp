#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "motedit/rng.hpp"
#include "motedit/tensor.hpp"

namespace motedit {

// Named parameters with matching gradient slots. std::map keeps iteration (and
// therefore checkpoint layout and optimizer order) deterministic.
class ParamStore {
public:
    struct Entry {
        Tensor value;
        Tensor grad;
    };

    explicit ParamStore(uint64_t init_seed = 0) : init_seed_(init_seed) {}

    // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init; errors if the name exists.
    Tensor& create(const std::string& name, std::vector<int> shape, int fan_in, Rng& rng);
    Tensor& create_zeros(const std::string& name, std::vector<int> shape);
    Tensor& create_from(const std::string& name, Tensor value);

    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    Entry& at(const std::string& name);
    const Entry& at(const std::string& name) const;
    Tensor& value(const std::string& name) { return at(name).value; }
    Tensor& grad(const std::string& name) { return at(name).grad; }

    void zero_grads();
    size_t size() const { return entries_.size(); }
    size_t coord_count() const;
    std::vector<std::string> names() const;
    uint64_t init_seed() const { return init_seed_; }

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    // Binary checkpoint: "MOTEDIT1" magic, init seed, then name/shape/values
    // per entry in map order.
    void save(const std::string& path) const;
    static ParamStore load(const std::string& path);

private:
    std::map<std::string, Entry> entries_;
    uint64_t init_seed_ = 0;
};

} // namespace motedit
