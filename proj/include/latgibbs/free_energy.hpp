#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "latgibbs/hamiltonian.hpp"
#include "latgibbs/sampler.hpp"

namespace latgibbs {

struct EstimateMeta {
    double epsilon = 0.0;
    double kappa = std::numeric_limits<double>::infinity();
    std::string mode;  // bulk | pinned | soft_clamp
    int cutoff = 0;
    double tail_bound = 0.0;
    std::uint64_t seed = 0;
    double sigma_ref = 0.0;    // tether scale after feasibility rescaling
    double p_ref = 1.0;        // constraint probability under the reference
    int lambda_stages = 0;
    std::string digest;        // reproduction digest of the producing setup
    std::vector<std::string> warnings;
};

/// A free-energy value in the -(eps^d/|A|) log Z convention.
struct FreeEnergyEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::string method;  // exact_quadrature | thermodynamic_integration | extrapolated
    EstimateMeta meta;
};

/// -(eps^d/|A|) log of the constrained partition integral by nested
/// Gauss-Legendre quadrature with exact per-level limits. Total degrees of
/// freedom must be <= 4 (and m = 1); larger systems get an explicit refusal
/// pointing at the sampling estimator.
FreeEnergyEstimate exact_free_energy(const HamiltonianSpec& h, const ConstraintSpec& constraint);

/// Restricted mass: integral of exp(-H) over the constraint set intersected
/// with {H >= energy_floor}. Shares the exact integrator; used by the
/// tightness checks. Returns the integral (not a free energy).
double restricted_partition_mass(const HamiltonianSpec& h, const ConstraintSpec& constraint,
                                 double energy_floor, double* err_estimate = nullptr);

struct TIOptions {
    int gl_points = 8;
    int max_panel_depth = 7;
    long long pref_samples = 40000;
    int threads = 1;
};

/// Two-stage estimate: (i) product tether reference with per-site
/// log-partition by quadrature and directly sampled constraint probability,
/// rescaled until the feasible mass is >= 1e-2; (ii) thermodynamic
/// integration along H_lambda = H_ref + lambda (H - H_ref) on an adaptive
/// panelized Gauss-Legendre lambda grid driven by the constrained sampler.
FreeEnergyEstimate ti_free_energy(const HamiltonianSpec& h, const ConstraintSpec& constraint,
                                  const ChainConfig& cfg, const TIOptions& opt = {});

/// Picks exact quadrature when the instance is small enough, TI otherwise.
FreeEnergyEstimate estimate_free_energy(const HamiltonianSpec& h,
                                        const ConstraintSpec& constraint,
                                        const ChainConfig& cfg, const TIOptions& opt = {});

enum class GRefMode { p_power, sbv_g };

/// Free energy of the nearest-neighbour reference system
/// lambda sum_i sum_{R^{e_i}} |grad_i phi|^p (or g_eps(|grad_i phi|)).
FreeEnergyEstimate reference_free_energy_G(double lambda,
                                           std::shared_ptr<const LatticeRegion> region,
                                           const ConstraintSpec& constraint, GRefMode mode,
                                           const ChainConfig& cfg, double p = 2.0,
                                           const SBVPotential* sbv_base = nullptr,
                                           const TIOptions& opt = {});

struct ScanProblem {
    PotentialFamily potential;
    Profile target;
    std::vector<Box> domain_boxes;
    std::size_t dim_m = 1;
    ConstraintMode mode = ConstraintMode::bulk;
    double p = 2.0;
    double beta = 1.0;
    ChainConfig chain_template;
    TIOptions ti;
    std::uint64_t seed = 1;
};

struct ScanCell {
    double epsilon = 0.0;
    double kappa = 0.0;
    std::optional<FreeEnergyEstimate> estimate;
    std::string error;  // nonempty when the cell failed
};

struct KappaSummary {
    double kappa = 0.0;
    double liminf_surrogate = 0.0;  // min over the eps-tail
    double limsup_surrogate = 0.0;  // max over the eps-tail
    double err = 0.0;
    bool converged = false;
};

struct LimitScan {
    std::vector<ScanCell> cells;  // kappa-major, then eps in schedule order
    std::vector<KappaSummary> per_kappa;
    double f_prime = 0.0;   // sup over kappa of the liminf surrogate
    double f_second = 0.0;  // sup over kappa of the limsup surrogate
    double err = 0.0;
    bool converged = false;
    bool kappa_monotone = true;  // nonincreasing in kappa within errors
};

/// Grid of estimates over the (strictly decreasing) schedules with
/// liminf/limsup surrogates over the eps-tail and the kappa-supremum
/// extrapolation. Failed cells are recorded and the scan continues.
LimitScan limit_scan(const ScanProblem& problem, const std::vector<double>& eps_schedule,
                     const std::vector<double>& kappa_schedule);

struct RateReport {
    double value = 0.0;
    double err = 0.0;
};

/// I(v) = F-estimate(v) - F-estimate(v*); refuses non-converged scans.
RateReport rate_functional_report(const LimitScan& scan_u, const LimitScan& scan_minimizer);

/// FNV-1a digest of a description string; stamped into estimate metadata.
std::string digest_string(const std::string& text);

}  // namespace latgibbs
