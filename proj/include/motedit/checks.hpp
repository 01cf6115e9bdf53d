#pragma once

#include <string>
#include <vector>

#include "motedit/config.hpp"
#include "motedit/gradcheck.hpp"

namespace motedit {

struct CheckResult {
    std::string name;
    bool pass = true;
    std::string detail; // empty on pass
};

// Invariant and golden-value battery behind the `verify` subcommand: forward
// kinematics against an independent quaternion-chain oracle, normalization and
// loss goldens, schedule/sampler properties, modulation identities, dataset
// construction guarantees, serialization round-trips.
std::vector<CheckResult> verify_battery(const RunConfig& cfg);

// Finite-difference checks for every trainable block at reduced width, plus a
// subsampled end-to-end pass at full width. Entry names are prefixed with the
// block under test.
GradCheckReport gradcheck_battery(uint64_t seed, double tolerance = 1e-5, double step = 1e-5);

} // namespace motedit
