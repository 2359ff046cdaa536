#pragma once

namespace brushgym {

// Entry point of the command-line harness. Returns the process exit code:
// 0 success, 1 internal error, 2 usage/configuration error.
int cli_main(int argc, char** argv);

}  // namespace brushgym
