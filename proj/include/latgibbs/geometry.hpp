#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace latgibbs {

using Vec = std::vector<double>;
using IVec = std::vector<long long>;

/// Closed axis-aligned box [lo, hi].
struct Box {
    Vec lo;
    Vec hi;

    std::size_t dim() const { return lo.size(); }
    double volume() const;
    double diameter() const;
    bool contains(const Vec& x, double tol) const;           // closed membership
    bool contains_interior(const Vec& x, double tol) const;  // open membership
};

/// Finite union of axis-aligned boxes with pairwise disjoint interiors
/// (touching faces allowed). Segment queries are exact up to the snapping
/// tolerance, which is what makes reachable-set and volume tests sharp.
class Domain {
  public:
    explicit Domain(std::vector<Box> boxes);

    std::size_t dim() const { return dim_; }
    const std::vector<Box>& boxes() const { return boxes_; }
    double volume() const { return volume_; }
    double diameter() const;
    Box bounding_box() const;

    bool contains(const Vec& x) const;
    bool contains_interior(const Vec& x) const;

    /// True iff the closed segment [a, b] lies in the union (closed boxes).
    bool contains_segment(const Vec& a, const Vec& b) const;
    /// True iff [a, b] lies in the interior of the union.
    bool contains_segment_interior(const Vec& a, const Vec& b) const;

    double tol() const { return tol_; }

  private:
    bool segment_covered(const Vec& a, const Vec& b, bool interior) const;

    std::vector<Box> boxes_;
    std::size_t dim_ = 0;
    double volume_ = 0.0;
    double tol_ = 1e-9;
};

}  // namespace latgibbs
