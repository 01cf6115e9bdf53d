#include "motedit/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace motedit {

namespace {

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

GradCheckReport gradcheck(ParamStore& store, const std::function<double(bool)>& forward,
                          double tolerance, double step, int max_coords_per_tensor,
                          uint64_t sample_seed) {
    GradCheckReport report;
    report.tolerance = tolerance;
    report.step = step;

    store.zero_grads();
    double f0 = forward(true);
    // Keep a copy: the finite-difference evaluations below must not see their
    // own perturbations fold back into the analytic gradients.
    std::vector<std::pair<std::string, Tensor>> analytic;
    for (auto& [name, entry] : store) analytic.emplace_back(name, entry.grad);

    // Central differences carry round-off proportional to the loss magnitude
    // (cancellation of two nearly equal evaluations), so the near-zero floor
    // scales with |f| once the loss is larger than O(1).
    double abs_floor = tolerance * 1e-2 * std::max(1.0, std::abs(f0));
    for (auto& [name, grad] : analytic) {
        Tensor& value = store.value(name);
        GradCheckEntry e;
        e.name = name;
        size_t n = value.numel();
        std::vector<size_t> coords;
        if (n <= static_cast<size_t>(max_coords_per_tensor)) {
            coords.resize(n);
            for (size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            Rng rng(mix_seed(sample_seed, fnv1a(name)));
            coords.resize(static_cast<size_t>(max_coords_per_tensor));
            for (auto& c : coords) c = static_cast<size_t>(rng.below(static_cast<uint64_t>(n)));
        }
        for (size_t i : coords) {
            double v0 = value[i];
            value[i] = v0 + step;
            double lp = forward(false);
            value[i] = v0 - step;
            double lm = forward(false);
            value[i] = v0;
            double numeric = (lp - lm) / (2.0 * step);
            double a = grad[i];
            double diff = std::abs(a - numeric);
            double scale = std::max(std::abs(a), std::abs(numeric));
            e.max_abs_err = std::max(e.max_abs_err, diff);
            e.max_rel_err = std::max(e.max_rel_err, diff / std::max(scale, abs_floor / tolerance));
            if (diff > tolerance * scale && diff > abs_floor) e.pass = false;
            ++e.checked;
        }
        report.pass = report.pass && e.pass;
        report.entries.push_back(std::move(e));
    }
    return report;
}

std::string GradCheckReport::to_string() const {
    std::string out;
    for (const auto& e : entries) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-40s coords=%-6d max_rel=%.3e max_abs=%.3e %s\n",
                      e.name.c_str(), e.checked, e.max_rel_err, e.max_abs_err,
                      e.pass ? "ok" : "FAIL");
        out += buf;
    }
    out += pass ? "gradcheck: PASS\n" : "gradcheck: FAIL\n";
    return out;
}

} // namespace motedit
