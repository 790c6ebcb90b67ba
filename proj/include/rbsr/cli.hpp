#pragma once

namespace rbsr {

inline constexpr const char* kVersion = "rbsr 1.0.0";

/// Exit status: 0 success, 1 usage error, 2 runtime error.
int dispatch(int argc, char** argv);

}  // namespace rbsr
