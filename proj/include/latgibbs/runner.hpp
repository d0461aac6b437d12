#pragma once

#include <string>

#include "latgibbs/config.hpp"

namespace latgibbs {

struct RunResult {
    int exit_code = 0;
    std::string csv_path;
    std::string manifest_path;
    std::string summary_path;  // verify kinds only
    std::vector<std::string> messages;
};

/// Executes the experiment and writes: results.csv (fixed column order:
/// epsilon, kappa, value, stderr, method, cutoff, tail_bound, seed),
/// manifest.json (config digest, version, wall time), and for verify runs
/// verify_summary.json. Identical config+seed reproduce identical CSV bytes
/// for any thread count. Failed cells leave FAILED marker rows and a nonzero
/// exit code; partial results are preserved.
RunResult run(const ExperimentConfig& config);

}  // namespace latgibbs
