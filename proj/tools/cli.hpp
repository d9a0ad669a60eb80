#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace trafficgas::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Invalid invocation detected after flag parsing; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Entry point for `trafficgas <command> [flags]`. Tables go to --output
/// when given, otherwise to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trafficgas::cli
