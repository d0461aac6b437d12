#include "latgibbs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace latgibbs {

double Box::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < dim(); ++i) v *= std::max(0.0, hi[i] - lo[i]);
    return v;
}

double Box::diameter() const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) s += (hi[i] - lo[i]) * (hi[i] - lo[i]);
    return std::sqrt(s);
}

bool Box::contains(const Vec& x, double tol) const {
    for (std::size_t i = 0; i < dim(); ++i)
        if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    return true;
}

bool Box::contains_interior(const Vec& x, double tol) const {
    for (std::size_t i = 0; i < dim(); ++i)
        if (x[i] <= lo[i] + tol || x[i] >= hi[i] - tol) return false;
    return true;
}

Domain::Domain(std::vector<Box> boxes) : boxes_(std::move(boxes)) {
    if (boxes_.empty()) throw std::invalid_argument("domain needs at least one box");
    dim_ = boxes_[0].dim();
    double scale = 1.0;
    for (const auto& b : boxes_) {
        if (b.dim() != dim_ || b.hi.size() != dim_)
            throw std::invalid_argument("domain boxes have mixed dimensions");
        for (std::size_t i = 0; i < dim_; ++i) {
            if (!(b.lo[i] < b.hi[i])) throw std::invalid_argument("degenerate box");
            scale = std::max({scale, std::abs(b.lo[i]), std::abs(b.hi[i])});
        }
        volume_ += b.volume();
    }
    tol_ = 1e-9 * scale;
    // overlapping interiors would double-count volume and break bond partitions
    for (std::size_t i = 0; i < boxes_.size(); ++i)
        for (std::size_t j = i + 1; j < boxes_.size(); ++j) {
            double overlap = 1.0;
            for (std::size_t k = 0; k < dim_; ++k) {
                double lo = std::max(boxes_[i].lo[k], boxes_[j].lo[k]);
                double hi = std::min(boxes_[i].hi[k], boxes_[j].hi[k]);
                overlap *= std::max(0.0, hi - lo);
            }
            if (overlap > tol_)
                throw std::invalid_argument("domain boxes overlap with positive volume");
        }
}

double Domain::diameter() const {
    Box bb = bounding_box();
    return bb.diameter();
}

Box Domain::bounding_box() const {
    Box bb = boxes_[0];
    for (const auto& b : boxes_) {
        for (std::size_t i = 0; i < dim_; ++i) {
            bb.lo[i] = std::min(bb.lo[i], b.lo[i]);
            bb.hi[i] = std::max(bb.hi[i], b.hi[i]);
        }
    }
    return bb;
}

bool Domain::contains(const Vec& x) const {
    for (const auto& b : boxes_)
        if (b.contains(x, tol_)) return true;
    return false;
}

bool Domain::contains_interior(const Vec& x) const {
    for (const auto& b : boxes_)
        if (b.contains_interior(x, tol_)) return true;
    return false;
}

bool Domain::segment_covered(const Vec& a, const Vec& b, bool interior) const {
    // Parametrize p(t) = a + t (b-a), t in [0,1]; intersect with each box to
    // get a t-interval, then check the intervals cover [0,1]. The endpoints
    // belong to the union iff covered; connectivity of the segment makes the
    // sweep exact for a finite union.
    struct Interval {
        double lo, hi;
    };
    std::vector<Interval> ivals;
    const double eps_t = 1e-12;
    for (const auto& box : boxes_) {
        double t0 = 0.0, t1 = 1.0;
        bool empty = false;
        for (std::size_t i = 0; i < dim_ && !empty; ++i) {
            double d = b[i] - a[i];
            double blo = box.lo[i] - (interior ? -tol_ : tol_);
            double bhi = box.hi[i] + (interior ? -tol_ : tol_);
            if (std::abs(d) <= tol_) {
                if (a[i] < blo || a[i] > bhi) empty = true;
            } else {
                double u0 = (blo - a[i]) / d;
                double u1 = (bhi - a[i]) / d;
                if (u0 > u1) std::swap(u0, u1);
                t0 = std::max(t0, u0);
                t1 = std::min(t1, u1);
                if (t0 > t1 + eps_t) empty = true;
            }
        }
        if (!empty && t1 >= t0 - eps_t) ivals.push_back({t0, t1});
    }
    if (ivals.empty()) return false;
    std::sort(ivals.begin(), ivals.end(),
              [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
    double covered = 0.0;
    for (const auto& iv : ivals) {
        if (iv.lo > covered + eps_t) return false;
        covered = std::max(covered, iv.hi);
        if (covered >= 1.0 - eps_t) return true;
    }
    return covered >= 1.0 - eps_t;
}

bool Domain::contains_segment(const Vec& a, const Vec& b) const {
    return segment_covered(a, b, /*interior=*/false);
}

bool Domain::contains_segment_interior(const Vec& a, const Vec& b) const {
    return segment_covered(a, b, /*interior=*/true);
}

}  // namespace latgibbs
