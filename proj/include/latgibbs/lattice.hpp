#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "latgibbs/geometry.hpp"
#include "latgibbs/profile.hpp"

namespace latgibbs {

/// The set of lattice points eps*i inside a domain, in a fixed lexicographic
/// order so every downstream iteration is deterministic.
class LatticeRegion {
  public:
    LatticeRegion(double epsilon, std::size_t dim_m, Domain domain);

    double epsilon() const { return epsilon_; }
    std::size_t dim_d() const { return d_; }
    std::size_t dim_m() const { return m_; }
    const Domain& domain() const { return domain_; }
    const std::vector<IVec>& sites() const { return sites_; }
    std::size_t n_sites() const { return sites_.size(); }

    Vec position(const IVec& i) const;
    std::optional<std::size_t> site_id(const IVec& i) const;

    /// Bond origins x with the closed segment [eps x, eps x + eps xi] in the
    /// (closed) domain. Deterministic site order; xi = 0 is rejected.
    std::vector<std::size_t> reachable(const IVec& xi) const;
    /// Same with the segment required to stay in the open interior; this is
    /// the bond set the Sobolev-seminorm limit runs over.
    std::vector<std::size_t> reachable_interior(const IVec& xi) const;

    /// Sites within lattice distance R0 (in units of eps) of a lattice point
    /// outside the region; the strip where a soft clamp acts.
    std::vector<std::size_t> boundary_strip(double R0) const;

  private:
    std::vector<std::size_t> reachable_impl(const IVec& xi, bool interior) const;

    double epsilon_;
    std::size_t d_;
    std::size_t m_;
    Domain domain_;
    std::vector<IVec> sites_;
};

/// A lattice configuration; values on the region's sites plus an optional
/// pinned exterior band (exposed by id after the free sites).
class DiscretizedField {
  public:
    DiscretizedField(std::shared_ptr<const LatticeRegion> region, std::vector<IVec> band = {});

    const LatticeRegion& region() const { return *region_; }
    std::shared_ptr<const LatticeRegion> region_ptr() const { return region_; }
    const std::vector<IVec>& band() const { return band_; }
    std::size_t n_free() const { return region_->n_sites(); }
    std::size_t n_total() const { return region_->n_sites() + band_.size(); }

    double* value(std::size_t id) { return data_.data() + id * m_; }
    const double* value(std::size_t id) const { return data_.data() + id * m_; }
    std::size_t dim_m() const { return m_; }

    std::optional<std::size_t> lookup(const IVec& i) const;
    const IVec& index_of(std::size_t id) const;

    double quadrature_residual() const { return quad_residual_; }
    void set_quadrature_residual(double r) { quad_residual_ = r; }

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

  private:
    std::shared_ptr<const LatticeRegion> region_;
    std::vector<IVec> band_;            // sorted lexicographically
    std::vector<std::size_t> band_ids_; // parallel permutation (band sorted order -> id)
    std::size_t m_;
    std::vector<double> data_;
    double quad_residual_ = 0.0;
};

/// Cell averages of u rescaled by 1/eps: value(i) = (1/eps) avg_{eps i + Q(eps)} u.
/// Tensor Gauss-Legendre of order 5 per axis with one refinement pass; the
/// worst residual across cells is recorded on the field.
DiscretizedField discretize(const Profile& u, std::shared_ptr<const LatticeRegion> region,
                            std::vector<IVec> band = {});

/// Pointwise rescale u(eps i)/eps on the free sites (no cells, so it reads u
/// only at lattice points of the region).
DiscretizedField pointwise_field(const Profile& u,
                                 std::shared_ptr<const LatticeRegion> region,
                                 std::vector<IVec> band = {});

/// (phi(x + eps xi) - phi(x)) / |xi|, Euclidean |xi|.
Vec gradient(const DiscretizedField& field, const IVec& xi, const IVec& site);

/// Continuous piecewise-affine interpolant with v(eps i) = eps phi(eps i),
/// built on the Kuhn subdivision of each lattice cube (fixed vertex order).
Profile interpolate(const DiscretizedField& field);

/// sum_i sum_{interior bonds along e_i} eps^d |grad_i phi|^p.
double discrete_sobolev_seminorm(const DiscretizedField& field, double p);

}  // namespace latgibbs
