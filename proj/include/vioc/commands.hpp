#ifndef VIOC_COMMANDS_HPP
#define VIOC_COMMANDS_HPP

#include "vioc/config.hpp"

namespace vioc {

enum ExitCode : int {
    kExitSuccess = 0,
    kExitInvalidConfig = 1,
    kExitNotConverged = 2,
    kExitAssertionFailed = 3,
};

// Each command writes into config.out_dir: config.yaml, run.log, its CSV
// tables and summary.json. The return value is the process exit code.
int cmd_solve(const RunConfig& config);
int cmd_optimize(const RunConfig& config);
int cmd_sweep(const RunConfig& config);
int cmd_scan(const RunConfig& config);

/// Entry point of the `vioc` executable.
int run_cli(int argc, char** argv);

} // namespace vioc

#endif // VIOC_COMMANDS_HPP
