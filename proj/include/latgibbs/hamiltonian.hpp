#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "latgibbs/lattice.hpp"
#include "latgibbs/potentials.hpp"

namespace latgibbs {

enum class HamiltonianMode { interior, full };

/// Safe zig-zag constants from the coordinate-path decomposition (path length
/// <= d|xi|, each lattice bond reused <= path-length times).
inline double zigzag_constant_sobolev(std::size_t d, double p) {
    return std::pow(2.0 * static_cast<double>(d), p + 1.0);
}
inline double zigzag_constant_sbv(std::size_t d, double xi_norm) {
    return std::pow(2.0 * static_cast<double>(d), 2.0) * xi_norm;
}

/// Precomputed bond structure for one lattice energy: every direction shell
/// 0 < |xi| <= cutoff with its weight, and per-shell bond lists in field ids.
class HamiltonianSpec {
  public:
    struct Bond {
        std::uint32_t from;
        std::uint32_t to;
    };
    struct Shell {
        IVec xi;
        double c_xi;
        double xi_norm;
        std::vector<Bond> bonds;
    };

    HamiltonianSpec(PotentialFamily potential, std::shared_ptr<const LatticeRegion> region,
                    HamiltonianMode mode, double beta = 1.0,
                    std::optional<int> cutoff_override = std::nullopt,
                    double cutoff_rel_tol = 1e-6);

    const PotentialFamily& potential() const { return potential_; }
    const LatticeRegion& region() const { return *region_; }
    std::shared_ptr<const LatticeRegion> region_ptr() const { return region_; }
    HamiltonianMode mode() const { return mode_; }
    double beta() const { return beta_; }
    int cutoff() const { return cutoff_; }
    double tail_bound() const { return tail_bound_; }

    /// Exterior sites the full mode reads; empty in interior mode. Fields
    /// evaluated against this spec must carry exactly this band.
    const std::vector<IVec>& required_band() const { return band_; }

    const std::vector<Shell>& shells() const { return shells_; }
    std::size_t n_bonds() const { return n_bonds_; }

    /// beta * sum over shells and bonds of f_{xi,eps}(x, grad_xi phi(x)).
    double energy(const DiscretizedField& field) const;

    /// energy(after) - energy(before) for a single-site change; touches only
    /// incident bonds. Pinned (band) sites are rejected.
    double energy_delta(const DiscretizedField& field, std::size_t site_id,
                        const double* new_value) const;

    /// Bonds incident to a free site, as (shell index, bond index) pairs.
    struct Incidence {
        std::uint32_t shell;
        std::uint32_t bond;
    };
    const std::vector<Incidence>& incident(std::size_t site_id) const {
        return incident_[site_id];
    }

  private:
    void check_band(const DiscretizedField& field) const;
    double bond_value(const DiscretizedField& field, const Shell& sh, const Bond& b,
                      std::size_t replace_id, const double* replacement) const;

    PotentialFamily potential_;
    std::shared_ptr<const LatticeRegion> region_;
    HamiltonianMode mode_;
    double beta_;
    int cutoff_;
    double tail_bound_;
    std::vector<IVec> band_;
    std::vector<Shell> shells_;
    std::vector<std::vector<Incidence>> incident_;
    std::size_t n_bonds_ = 0;
};

/// H_full - H_interior >= 0 for the same potential/region/beta; the gap is
/// carried by bonds crossing the boundary. The field must hold the full-mode
/// band.
double interior_vs_full_gap(const HamiltonianSpec& full_spec, const DiscretizedField& field);

}  // namespace latgibbs
