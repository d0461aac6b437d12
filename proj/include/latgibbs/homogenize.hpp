#pragma once

#include <functional>
#include <vector>

#include "latgibbs/free_energy.hpp"

namespace latgibbs {

/// Periodic cell problem with affine boundary datum u = Mx.
struct CellProblem {
    LinearMap M;
    Box cell;  // lattice-commensurate box (corner and sides multiples of eps)
    SobolevPotential potential;
    double p = 2.0;
    double beta = 1.0;
    std::vector<double> eps_schedule;
    std::vector<double> kappa_schedule;
    ChainConfig chain_template;
    TIOptions ti;
    std::uint64_t seed = 1;
};

/// Pinned-boundary free energy of the cell at one (eps, kappa). The cell is
/// canonicalized to corner-relative coordinates with the coefficient phase
/// carried as an integer, so translating the cell by a whole coefficient
/// period reproduces the estimate bit-for-bit under matched seeds.
FreeEnergyEstimate cell_free_energy(const CellProblem& problem, double eps, double kappa);

struct FHomKappa {
    double kappa = 0.0;
    double value = 0.0;  // extrapolated eps -> 0 limit
    double err = 0.0;
    double fit_order = 1.0;  // fitted exponent q in a + b eps^q
    bool converged = false;
    std::vector<FreeEnergyEstimate> cells;
};

struct FHomResult {
    std::vector<FHomKappa> per_kappa;
    double value = 0.0;
    double err = 0.0;
    bool kappa_independent = false;
    bool converged = false;
};

/// Extrapolated homogenized density estimate with the kappa-independence
/// cross-check. Needs schedules of length >= 3; a non-convergent trend is
/// flagged, the raw grid is still returned.
FHomResult f_hom_estimate(const CellProblem& problem);

/// Exact eps -> 0 limit of the 1-D nearest-neighbour pinned chain:
/// Lambda*(M) = sup_l [ l M - log int exp(l t - f(t)) dt ].
double legendre_oracle_1d(const std::function<double(double)>& bond_potential, double M);

struct ConvolutionOracle {
    double raw = 0.0;       // -(1/N) log of the N-fold self-convolution at M N
    double debiased = 0.0;  // raw minus the measured local-CLT prefactor
    double grid_error = 0.0;
};

/// Second, independent oracle: spectral N-fold self-convolution of exp(-f)
/// on a trapezoidal grid, with a grid-refinement error estimate. The
/// de-biasing curvature is measured from the convolution itself.
ConvolutionOracle convolution_oracle_1d(const std::function<double(double)>& bond_potential,
                                        double M, int N);

/// Three-point fit a + b eps^q with q in [0.5, 2]; returns (a, q) and the
/// linearized stderr of a given per-point errors.
struct ExtrapolationFit {
    double limit = 0.0;
    double order = 1.0;
    double err = 0.0;
    bool ok = false;
};
ExtrapolationFit extrapolate_eps(const std::vector<double>& eps, const std::vector<double>& values,
                                 const std::vector<double>& errors);

}  // namespace latgibbs
