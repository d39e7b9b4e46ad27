#pragma once

namespace cbml {

// Entry point of the command line tool. Returns the process exit code:
// 0 success, 2 validation error, 3 any other failure.
int run_cli(int argc, char** argv);

}  // namespace cbml
