#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace jcnp {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/**
 * Command-line entry point. args excludes the program name. Subcommands:
 * make-data, train, sr, eval, analyze; `<subcommand> --help` lists its flags.
 * Returns 0 on success, 1 on usage or configuration errors, 2 on data errors
 * (unreadable files, dimension mismatches, bad checkpoints) and 3 when
 * training hits a non-finite loss.
 */
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jcnp
