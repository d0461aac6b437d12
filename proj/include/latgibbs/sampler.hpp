#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "latgibbs/hamiltonian.hpp"
#include "latgibbs/lattice.hpp"
#include "latgibbs/profile.hpp"

namespace latgibbs {

enum class ConstraintMode { bulk, pinned, soft_clamp };

/// Admissible set: (eps^d/|A|) sum_{x in A_eps} |u(x) - eps phi(x)|^p <= kappa^p,
/// plus mode extras (exterior pinned to the discretized target, or a per-site
/// window |phi - psi| < clamp_width on the boundary strip of width R0).
struct ConstraintSpec {
    Profile target;
    double kappa = std::numeric_limits<double>::infinity();
    double p = 2.0;
    ConstraintMode mode = ConstraintMode::bulk;
    double clamp_width = 1.0;
    double clamp_R0 = 1.0;

    ConstraintSpec stripped() const {
        ConstraintSpec c = *this;
        c.target = target.stripped();
        return c;
    }
};

/// Constraint bound to a region: site residuals, budget, incremental sum.
class ConstraintState {
  public:
    ConstraintState(const ConstraintSpec& spec, std::shared_ptr<const LatticeRegion> region,
                    const std::vector<IVec>& band);

    const ConstraintSpec& spec() const { return spec_; }
    double budget() const { return budget_; }  // kappa^p |A| / eps^d
    bool unconstrained() const { return !std::isfinite(budget_); }

    /// Residual target value at a free site (u(eps i), componentwise).
    const double* site_target(std::size_t id) const { return targets_.data() + id * m_; }
    /// Expected pinned band values (empty unless pinned mode).
    const std::vector<double>& band_values() const { return band_values_; }

    double deviation_term(std::size_t id, const double* value) const;
    double deviation_sum(const DiscretizedField& f) const;

    bool clamp_ok(std::size_t id, const double* value) const;
    bool in_strip(std::size_t id) const { return !strip_.empty() && strip_[id]; }

    /// Full membership test (L^p ball, pinning, clamp).
    bool inside(const DiscretizedField& f) const;

  private:
    ConstraintSpec spec_;
    std::shared_ptr<const LatticeRegion> region_;
    std::size_t m_;
    double budget_;
    std::vector<double> targets_;      // per free site
    std::vector<double> clamp_center_; // per free site (soft clamp)
    std::vector<char> strip_;
    std::vector<double> band_values_;  // pinned mode
};

/// Public membership query on a raw field.
bool inside_constraint(const ConstraintSpec& spec, const DiscretizedField& field);

/// Product tether sum_x |(eps phi(x) - u(x)) / sigma|^p; the soft reference
/// the thermodynamic-integration path starts from.
struct TetherReference {
    double sigma = 1.0;
    double p = 2.0;

    double term(const double* target, const double* value, double eps, std::size_t m) const;
};

struct ChainConfig {
    long long steps = 4000;   // total sweeps, burn_in of them discarded
    long long burn_in = 1000;
    double proposal_scale = 0.0;  // 0 => autotune
    std::uint64_t seed = 1;
    int chains = 2;
    int thin = 1;
};

struct AcceptanceStats {
    long long site_attempts = 0;
    long long site_accepts = 0;
    long long shift_attempts = 0;
    long long shift_accepts = 0;

    double site_rate() const {
        return site_attempts ? double(site_accepts) / double(site_attempts) : 0.0;
    }
};

struct SweepRecord {
    double h_phys;     // beta-weighted lattice energy
    double h_tether;   // reference tether (0 when no tether is attached)
    double field_mean; // mean over free sites of the first component
};

struct ChainResult {
    AcceptanceStats stats;
    std::vector<SweepRecord> records;
    double mean_h = 0.0;
    DiscretizedField final_state;
};

struct SampleRun {
    std::vector<ChainResult> chains;
    AcceptanceStats combined;
    double mean_h = 0.0;
    double stderr_h = 0.0;
    double proposal_scale = 0.0;
    std::vector<std::string> warnings;
};

/// Observer for thinned states: (chain index, state). Invoked from the worker
/// running that chain; per-chain call order is deterministic.
using StateObserver = std::function<void(int, const DiscretizedField&)>;

/// Metropolis random walk for exp(-H_lambda) restricted to the constraint
/// set, H_lambda = (1-lambda) tether + lambda * energy. Single-site Gaussian
/// proposals plus one uniform-shift proposal per sweep; moves leaving the
/// constraint set are rejected. Chains use independent (seed, chain) streams
/// and may run on several threads without changing any output.
SampleRun sample(const HamiltonianSpec& h, const ConstraintSpec& constraint,
                 const ChainConfig& cfg, const TetherReference* tether = nullptr,
                 double lambda = 1.0, int threads = 1,
                 const DiscretizedField* initial = nullptr,
                 const StateObserver* observer = nullptr);

/// Proposal scale with pilot acceptance in [0.2, 0.5]; deterministic in seed.
/// Falls back to the boundary of the pilot grid (with a warning) when the
/// window is unreachable.
double autotune(const HamiltonianSpec& h, const ConstraintSpec& constraint,
                std::uint64_t seed, const TetherReference* tether = nullptr,
                double lambda = 1.0, std::vector<std::string>* warnings = nullptr,
                const DiscretizedField* initial = nullptr);

/// Feasible initial state: the discretized target (pinned band included) in
/// pinned mode, the pointwise rescale u(eps i)/eps otherwise.
DiscretizedField initial_state(const HamiltonianSpec& h, const ConstraintSpec& constraint);

}  // namespace latgibbs
