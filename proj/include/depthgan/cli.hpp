#pragma once

namespace depthgan {

// Entry point shared by the binary and the CLI tests.
// Exit codes: 0 success, 1 usage, 2 configuration, 3 runtime failure.
int cli_main(int argc, const char* const* argv);

}  // namespace depthgan
