#pragma once

#include <ostream>

namespace rbsr {

/// Runs the embedded invariant groups, printing "PASS name" or
/// "FAIL name: detail" per group. Returns the number of failed groups.
int run_selftest(std::ostream& out);

}  // namespace rbsr
