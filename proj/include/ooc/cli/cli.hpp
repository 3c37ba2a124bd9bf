#pragma once

namespace ooc::cli {

// Entry point behind the `ooc` binary: parses the subcommand and dispatches.
// Returns a process exit code (0 on success).
int run_command(int argc, char** argv);

}  // namespace ooc::cli
