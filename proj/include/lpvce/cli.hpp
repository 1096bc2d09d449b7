#pragma once

#include <string>
#include <vector>

namespace lpvce {

// Command-line entry point (train, calibrate, vce, sweep, bench, metrics,
// scaling-probe, oracle-check). Returns the process exit code; artifacts are
// written under the configured output directory. Flags take precedence over
// the optional --config JSON file, which takes precedence over defaults.
int dispatch(const std::vector<std::string>& args);

}  // namespace lpvce
