#pragma once

#include <cstdio>
#include <string>

namespace motedit {

// Canonical number formatting for CSV exports: %.17g, enough digits to
// round-trip a double, so byte equality of files means bit equality of values.
inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace motedit
