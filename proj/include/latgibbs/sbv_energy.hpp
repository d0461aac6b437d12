#pragma once

#include <vector>

#include "latgibbs/free_energy.hpp"
#include "latgibbs/potentials.hpp"

namespace latgibbs {

/// Branch split of the nearest-neighbour truncated-potential energy:
/// bonds with |grad| >= T_eps carry the surface branch eps^{d-1} g2(eps|grad|),
/// the rest the bulk branch eps^d g1(|grad|). The two parts reassemble the
/// eps^d-weighted g_eps energy exactly.
struct JumpReport {
    struct JumpBond {
        std::size_t site_id;
        std::size_t axis;
        double grad_norm;
    };
    std::vector<JumpBond> jump_bonds;
    double bulk_energy = 0.0;
    double surface_energy = 0.0;

    double total() const { return bulk_energy + surface_energy; }
};

JumpReport split_energy(const DiscretizedField& field, const SBVPotential& pot);

/// eps^d sum of g_eps over nearest-neighbour bonds of the discretized profile.
double discrete_sbv_norm(const Profile& u, double eps, const SBVPotential& pot,
                         const Domain& domain);

/// Piecewise-constant datum jumping from `below` to `above` across the
/// hyperplane through `point` with normal `normal`.
struct JumpDatum {
    Vec above;
    Vec below;
    Vec point;
    Vec normal;  // restricted to +-e_i (axis-aligned geometry)

    Profile profile(std::size_t dim_d) const;
};

struct SurfaceProbeOptions {
    Box cell;
    SBVPotential potential;
    double p = 2.0;
    double beta = 1.0;
    double kappa = 0.5;
    std::vector<double> eps_schedule;
    ChainConfig chain_template;
    TIOptions ti;
    std::uint64_t seed = 1;
};

struct SurfaceProbe {
    struct Cell {
        double eps = 0.0;
        FreeEnergyEstimate jump;
        FreeEnergyEstimate baseline;
        double excess = 0.0;  // |Q| (F_jump - F_baseline) / beta
        double err = 0.0;
    };
    std::vector<Cell> cells;
    double amplitude = 0.0;       // extrapolated excess
    double err = 0.0;
    double fitted_exponent = 1.0; // of excess(eps) - amplitude ~ eps^q
    bool converged = false;
};

/// Pinned-boundary excess free energy of the jump datum over the affine
/// baseline u = below, rescaled to expose the surface amplitude, with the
/// eps-scaling exponent fitted rather than assumed.
SurfaceProbe surface_density_probe(const JumpDatum& datum, const SurfaceProbeOptions& opt);

/// The capture heuristic: a jump of amplitude delta registers as a jump bond
/// iff delta/eps reaches the threshold, i.e. eps T_eps <= delta.
bool jump_captured(double delta, double eps, const SBVPotential& pot);

}  // namespace latgibbs
