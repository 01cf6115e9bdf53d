#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "motedit/param_store.hpp"

namespace motedit {

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    int checked = 0;
    bool pass = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double tolerance = 0.0;
    double step = 0.0;
    bool pass = true;

    std::string to_string() const;
};

// Central finite differences against the analytic gradients that forward(true)
// deposits in the store. forward(false) must return the loss without touching
// gradients. Tensors above max_coords_per_tensor coordinates are subsampled
// with a deterministic RNG. A coordinate fails when
// |analytic - numeric| exceeds tolerance * max(|analytic|, |numeric|) and an
// absolute floor of tolerance * 1e-2 * max(1, |loss|); the floor keeps
// finite-difference round-off (which grows with the loss magnitude) on
// near-zero gradients from registering as relative blowups.
GradCheckReport gradcheck(ParamStore& store, const std::function<double(bool)>& forward,
                          double tolerance = 1e-5, double step = 1e-5,
                          int max_coords_per_tensor = 10000, uint64_t sample_seed = 0);

} // namespace motedit
