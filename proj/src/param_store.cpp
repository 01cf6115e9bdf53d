#include "motedit/param_store.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace motedit {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'T', 'E', 'D', 'I', 'T', '1'};

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) fail(std::string("checkpoint: truncated while reading ") + what);
    return v;
}

} // namespace

Tensor& ParamStore::create(const std::string& name, std::vector<int> shape, int fan_in, Rng& rng) {
    if (has(name)) fail("param store: duplicate name " + name);
    if (fan_in <= 0) fail("param store: fan_in must be positive for " + name);
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Entry e;
    e.value = Tensor::uniform(shape, -bound, bound, rng);
    e.grad = Tensor::full(shape, 0.0);
    return entries_.emplace(name, std::move(e)).first->second.value;
}

Tensor& ParamStore::create_zeros(const std::string& name, std::vector<int> shape) {
    if (has(name)) fail("param store: duplicate name " + name);
    Entry e;
    e.value = Tensor::full(shape, 0.0);
    e.grad = Tensor::full(shape, 0.0);
    return entries_.emplace(name, std::move(e)).first->second.value;
}

Tensor& ParamStore::create_from(const std::string& name, Tensor value) {
    if (has(name)) fail("param store: duplicate name " + name);
    Entry e;
    e.grad = Tensor::full(value.shape(), 0.0);
    e.value = std::move(value);
    return entries_.emplace(name, std::move(e)).first->second.value;
}

ParamStore::Entry& ParamStore::at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) fail("param store: unknown parameter " + name);
    return it->second;
}

const ParamStore::Entry& ParamStore::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) fail("param store: unknown parameter " + name);
    return it->second;
}

void ParamStore::zero_grads() {
    for (auto& [name, e] : entries_) e.grad.fill(0.0);
}

size_t ParamStore::coord_count() const {
    size_t n = 0;
    for (const auto& [name, e] : entries_) n += e.value.numel();
    return n;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) out.push_back(name);
    return out;
}

void ParamStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, init_seed_);
    write_pod(out, static_cast<uint64_t>(entries_.size()));
    for (const auto& [name, e] : entries_) {
        write_pod(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(out, static_cast<uint32_t>(e.value.shape().size()));
        for (int d : e.value.shape()) write_pod(out, static_cast<int32_t>(d));
        out.write(reinterpret_cast<const char*>(e.value.data()),
                  static_cast<std::streamsize>(e.value.numel() * sizeof(double)));
    }
    if (!out) fail("checkpoint: write failed for " + path);
}

ParamStore ParamStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        fail("checkpoint: bad magic in " + path);
    ParamStore store(read_pod<uint64_t>(in, "seed"));
    uint64_t count = read_pod<uint64_t>(in, "entry count");
    for (uint64_t i = 0; i < count; ++i) {
        uint32_t name_len = read_pod<uint32_t>(in, "name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) fail("checkpoint: truncated name");
        uint32_t rank = read_pod<uint32_t>(in, "rank");
        std::vector<int> shape(rank);
        size_t numel = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            shape[d] = read_pod<int32_t>(in, "dimension");
            if (shape[d] <= 0) fail("checkpoint: bad dimension in " + name);
            numel *= static_cast<size_t>(shape[d]);
        }
        Tensor value(shape);
        in.read(reinterpret_cast<char*>(value.data()),
                static_cast<std::streamsize>(numel * sizeof(double)));
        if (!in) fail("checkpoint: truncated values for " + name);
        store.create_from(name, std::move(value));
    }
    return store;
}

} // namespace motedit
