#pragma once

#include <optional>
#include <string>
#include <vector>

#include "latgibbs/free_energy.hpp"
#include "latgibbs/homogenize.hpp"
#include "latgibbs/sbv_energy.hpp"
#include "latgibbs/verify.hpp"

namespace latgibbs {

/// One experiment: kind plus everything needed to reproduce it. Parsed from a
/// single JSON document; unknown fields are rejected and the textual form
/// round-trips losslessly.
struct ExperimentConfig {
    int schema_version = 1;
    std::string kind;  // free-energy | homogenize | sbv-probe | verify | scan
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_dir = ".";

    PotentialFamily potential;
    std::vector<Box> region_boxes;
    std::size_t dim_m = 1;
    Profile profile;
    ConstraintSpec constraint;
    std::vector<double> eps_schedule;
    std::vector<double> kappa_schedule;
    ChainConfig sampler;
    double beta = 1.0;

    // homogenize extras
    LinearMap hom_matrix;
    Box hom_cell;

    // sbv probe extras
    JumpDatum probe_datum;
    Box probe_cell;

    // verify extras
    int verify_zigzag_fields = 1000;
    bool verify_quick = false;

    // normalized textual form captured at parse time; the digest and the
    // lossless round-trip contract both hang off this
    std::string raw;

    std::string canonical_json() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> diagnostics;
    HypothesisReport hypotheses;
};

/// Static validation: schema, schedules, and the potential-hypothesis
/// pre-check (no estimators run).
ValidationReport validate_config(const ExperimentConfig& config);

}  // namespace latgibbs
