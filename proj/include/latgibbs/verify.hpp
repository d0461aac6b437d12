#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace latgibbs {

struct CheckResult {
    std::string name;
    std::string status;  // pass | fail | inconclusive
    std::uint64_t seed = 0;
    std::string instance;                    // reproducible instance description
    std::map<std::string, double> witness;   // both sides, constants, gaps
    std::string note;
};

struct VerifyOptions {
    std::uint64_t seed = 2026;
    int threads = 1;
    int zigzag_fields = 1000;
    bool quick = false;  // smaller MC budgets for unit-test runs
};

struct VerifySummary {
    std::vector<CheckResult> checks;
    int n_pass = 0;
    int n_fail = 0;
    int n_inconclusive = 0;
    double inconclusive_rate = 0.0;
    bool release_ok = false;  // zero failures and inconclusive rate < 5%
};

std::vector<CheckResult> check_zigzag(const VerifyOptions& opt);
std::vector<CheckResult> check_free_energy_inequalities(const VerifyOptions& opt);
std::vector<CheckResult> check_tightness(const VerifyOptions& opt);
std::vector<CheckResult> check_measure_property(const VerifyOptions& opt);

VerifySummary run_battery(const VerifyOptions& opt);

/// Machine-readable summary (name, status, witness, seed per check).
std::string summary_to_json(const VerifySummary& summary);

}  // namespace latgibbs
