#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "latgibbs/geometry.hpp"

namespace latgibbs {

enum class TailKind { mass, first_moment };  // sum C_xi vs sum |xi| C_xi

/// Interaction decay weights xi -> C_xi with a certified tail bound. Either a
/// closed-form power family c0 |xi|^{-s} or an explicit finite-support list.
class DecayWeights {
  public:
    struct PowerLaw {
        double c0;
        double s;
    };
    struct FiniteEntry {
        IVec xi;
        double c;
    };

    DecayWeights();  // power law c0 = 1, s = 4

    static DecayWeights power_law(std::size_t dim, double c0, double s);
    static DecayWeights finite(std::size_t dim, std::vector<FiniteEntry> entries);

    std::size_t dim() const { return dim_; }
    bool is_power_law() const { return std::holds_alternative<PowerLaw>(form_); }
    const PowerLaw* power() const { return std::get_if<PowerLaw>(&form_); }
    const std::vector<FiniteEntry>* entries() const;

    double coefficient(const IVec& xi) const;

    /// Certified upper bound on sum over |xi| > M of C_xi (mass) or |xi| C_xi
    /// (first_moment); nonincreasing in M.
    double tail_bound(double M, TailKind kind = TailKind::mass) const;

    /// Exact sum over 0 < |xi| <= M.
    double partial_sum(double M, TailKind kind = TailKind::mass) const;

    /// Smallest cutoff M with tail_bound(M) <= rel_tol * partial_sum(M).
    int choose_cutoff(double rel_tol = 1e-6, int max_cutoff = 4096) const;

  private:
    std::size_t dim_ = 1;
    std::variant<PowerLaw, std::vector<FiniteEntry>> form_;
};

/// Periodic coefficient a(y) = 1 + amp * prod_k sin^2(pi (y_k + phase_k) / period),
/// evaluated through a mod-period reduction with integer snapping so lattice
/// translations by one period are bitwise exact. The integer phase lets cell
/// problems be canonicalized to corner-relative coordinates.
struct PeriodicModulator {
    double amp = 0.0;
    int period = 1;
    IVec phase;  // empty = zero phase

    double operator()(const Vec& y) const;
    double a_min() const { return 1.0; }
    double a_max() const { return 1.0 + amp; }
    bool trivial() const { return amp == 0.0; }
};

/// f_{xi,eps}(x,t) = C_xi * a(x/eps) * |t|^p.
struct SobolevPotential {
    double p = 2.0;
    DecayWeights weights = DecayWeights::power_law(1, 1.0, 4.0);
    PeriodicModulator coefficient;
};

/// Truncated bond potential: g1(t) = c1 t^q below the threshold T_eps =
/// tau eps^{-gamma}, (1/eps) g2(eps t) with g2(t) = c + c2 t^alpha above.
struct SBVPotential {
    double c1 = 1.0;
    double q = 2.0;  // convex growth exponent (> 1)
    double c = 1.0;  // g2 floor (> 0)
    double c2 = 1.0;
    double alpha = 0.5;  // concave exponent in (0,1)
    double tau = 1.0;
    double gamma = 0.5;  // threshold exponent in (0,1)
    DecayWeights weights = DecayWeights::power_law(1, 1.0, 4.0);

    double threshold(double eps) const;
    double g1(double t) const;
    double g2(double t) const;
    double g_eps(double eps, double t) const;
    /// Certified upper bound on the two-sided integral of exp(-g_eps(|t|)).
    double integrability_bound(double eps) const;
};

class PotentialFamily {
  public:
    PotentialFamily() = default;
    explicit PotentialFamily(SobolevPotential p) : form_(std::move(p)) {}
    explicit PotentialFamily(SBVPotential p) : form_(std::move(p)) {}

    bool is_sobolev() const { return std::holds_alternative<SobolevPotential>(form_); }
    const SobolevPotential* sobolev() const { return std::get_if<SobolevPotential>(&form_); }
    const SBVPotential* sbv() const { return std::get_if<SBVPotential>(&form_); }

    const DecayWeights& weights() const;
    std::size_t dim() const { return weights().dim(); }
    /// Growth exponent used by constraints and references.
    double growth_p() const;

    /// Single-bond energy; |t| is the Euclidean norm of the R^m increment.
    double eval(const IVec& xi, double eps, const Vec& x, const Vec& t) const;

    /// Hot-path variant: the caller already holds C_xi and the integer site
    /// index (lattice positions snap exactly, so periodic translations match
    /// bitwise).
    double bond_energy(double c_xi, double eps, const IVec& site, double grad_norm) const;

  private:
    std::variant<SobolevPotential, SBVPotential> form_;
};

struct HypothesisCheck {
    std::string name;
    std::string status;  // "pass" | "fail"
    double fitted_constant = 0.0;
    std::string detail;
    std::string witness;  // violating (xi, eps, x, t) when failed
};

struct HypothesisReport {
    std::vector<HypothesisCheck> checks;
    bool all_pass() const;
    const HypothesisCheck* find(const std::string& name) const;
};

/// Grid-based validation of the structural hypotheses: nonnegativity,
/// increment bound with summable weights, nearest-neighbour lower bound,
/// periodicity, and for the truncated family the threshold schedule,
/// g1/g2 compatibility, doubling and uniform integrability. Failure is data.
HypothesisReport validate(const PotentialFamily& pot, const std::vector<double>& eps_schedule);

}  // namespace latgibbs
