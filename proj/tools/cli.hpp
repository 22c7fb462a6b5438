#pragma once

// Entry point of the `pohmm` tool. Returns 0 on success, 2 on input or usage
// errors, 1 on numerical failures.
int run_cli(int argc, const char* const* argv);
