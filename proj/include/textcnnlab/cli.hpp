#pragma once

namespace textcnn {

// Full command-line entry point; returns the process exit code
// (0 success, 1 validation/runtime failure, 2 usage error).
int run_cli(int argc, const char* const* argv);

}  // namespace textcnn
