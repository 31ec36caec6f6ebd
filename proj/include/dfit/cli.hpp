#pragma once

namespace dfit {

/// Full command-line surface. Returns the process exit code:
/// 0 success, 1 usage error, 2 runtime/validation error.
int run_cli(int argc, const char* const* argv);

}  // namespace dfit
