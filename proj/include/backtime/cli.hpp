#pragma once

#include <string>

namespace backtime {

/// Root directory for command outputs: $BACKTIME_ARTIFACT_ROOT, else
/// ./artifacts. Each subcommand defaults to a subdirectory of it.
std::string artifact_root();

/// Full command-line entry point; returns the process exit code. Error kinds
/// map to distinct codes so scripts can tell misconfiguration from parse
/// failures from numerical trouble.
int run_cli(int argc, const char* const* argv);

}  // namespace backtime
