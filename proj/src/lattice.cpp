#include "latgibbs/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "latgibbs/numerics.hpp"

namespace latgibbs {

namespace {

std::string ivec_str(const IVec& i) {
    std::ostringstream os;
    os << "(";
    for (std::size_t k = 0; k < i.size(); ++k) os << (k ? "," : "") << i[k];
    os << ")";
    return os.str();
}

double norm2(const IVec& xi) {
    double s = 0.0;
    for (auto v : xi) s += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(s);
}

}  // namespace

LatticeRegion::LatticeRegion(double epsilon, std::size_t dim_m, Domain domain)
    : epsilon_(epsilon), d_(domain.dim()), m_(dim_m), domain_(std::move(domain)) {
    if (!(epsilon_ > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (m_ == 0) throw std::invalid_argument("field dimension must be positive");
    const double tol = domain_.tol();
    // integer ranges per box, then dedupe into one sorted site list
    for (const auto& box : domain_.boxes()) {
        std::vector<long long> lo(d_), hi(d_);
        for (std::size_t k = 0; k < d_; ++k) {
            lo[k] = static_cast<long long>(std::ceil((box.lo[k] - tol) / epsilon_));
            hi[k] = static_cast<long long>(std::floor((box.hi[k] + tol) / epsilon_));
            if (lo[k] > hi[k]) {
                lo[k] = 1;
                hi[k] = 0;
            }
        }
        IVec idx(lo);
        bool nonempty = true;
        for (std::size_t k = 0; k < d_; ++k) nonempty = nonempty && lo[k] <= hi[k];
        while (nonempty) {
            sites_.push_back(idx);
            std::size_t k = d_;
            while (k > 0) {
                --k;
                if (++idx[k] <= hi[k]) break;
                idx[k] = lo[k];
                if (k == 0) {
                    nonempty = false;
                    break;
                }
            }
        }
    }
    std::sort(sites_.begin(), sites_.end());
    sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
}

Vec LatticeRegion::position(const IVec& i) const {
    Vec x(d_);
    for (std::size_t k = 0; k < d_; ++k) x[k] = epsilon_ * static_cast<double>(i[k]);
    return x;
}

std::optional<std::size_t> LatticeRegion::site_id(const IVec& i) const {
    auto it = std::lower_bound(sites_.begin(), sites_.end(), i);
    if (it != sites_.end() && *it == i) return static_cast<std::size_t>(it - sites_.begin());
    return std::nullopt;
}

std::vector<std::size_t> LatticeRegion::reachable_impl(const IVec& xi, bool interior) const {
    if (xi.size() != d_) throw std::invalid_argument("direction has wrong dimension");
    bool zero = std::all_of(xi.begin(), xi.end(), [](long long v) { return v == 0; });
    if (zero) throw std::invalid_argument("zero direction carries no bond");
    std::vector<std::size_t> out;
    Vec a(d_), b(d_);
    for (std::size_t id = 0; id < sites_.size(); ++id) {
        for (std::size_t k = 0; k < d_; ++k) {
            a[k] = epsilon_ * static_cast<double>(sites_[id][k]);
            b[k] = a[k] + epsilon_ * static_cast<double>(xi[k]);
        }
        bool ok = interior ? domain_.contains_segment_interior(a, b)
                           : domain_.contains_segment(a, b);
        if (ok) out.push_back(id);
    }
    return out;
}

std::vector<std::size_t> LatticeRegion::reachable(const IVec& xi) const {
    return reachable_impl(xi, /*interior=*/false);
}

std::vector<std::size_t> LatticeRegion::reachable_interior(const IVec& xi) const {
    return reachable_impl(xi, /*interior=*/true);
}

std::vector<std::size_t> LatticeRegion::boundary_strip(double R0) const {
    if (!(R0 >= 0.0)) throw std::invalid_argument("strip width must be nonnegative");
    long long r = static_cast<long long>(std::floor(R0 + 1e-12));
    std::vector<std::size_t> out;
    IVec off(d_, 0), probe(d_);
    for (std::size_t id = 0; id < sites_.size(); ++id) {
        bool near_exterior = false;
        // scan the |offset| <= R0 ball around the site for exterior lattice points
        std::fill(off.begin(), off.end(), -r);
        while (true) {
            double n2 = 0.0;
            for (std::size_t k = 0; k < d_; ++k) n2 += double(off[k]) * double(off[k]);
            if (n2 <= R0 * R0 + 1e-12) {
                for (std::size_t k = 0; k < d_; ++k) probe[k] = sites_[id][k] + off[k];
                if (!site_id(probe).has_value()) {
                    near_exterior = true;
                    break;
                }
            }
            std::size_t k = d_;
            bool done = true;
            while (k > 0) {
                --k;
                if (++off[k] <= r) {
                    done = false;
                    break;
                }
                off[k] = -r;
            }
            if (done) break;
        }
        if (near_exterior) out.push_back(id);
    }
    return out;
}

DiscretizedField::DiscretizedField(std::shared_ptr<const LatticeRegion> region,
                                   std::vector<IVec> band)
    : region_(std::move(region)), band_(std::move(band)), m_(region_->dim_m()) {
    std::sort(band_.begin(), band_.end());
    band_.erase(std::unique(band_.begin(), band_.end()), band_.end());
    for (const auto& b : band_)
        if (region_->site_id(b).has_value())
            throw std::invalid_argument("band overlaps region sites");
    data_.assign((region_->n_sites() + band_.size()) * m_, 0.0);
}

std::optional<std::size_t> DiscretizedField::lookup(const IVec& i) const {
    if (auto id = region_->site_id(i)) return id;
    auto it = std::lower_bound(band_.begin(), band_.end(), i);
    if (it != band_.end() && *it == i)
        return region_->n_sites() + static_cast<std::size_t>(it - band_.begin());
    return std::nullopt;
}

const IVec& DiscretizedField::index_of(std::size_t id) const {
    if (id < region_->n_sites()) return region_->sites()[id];
    return band_[id - region_->n_sites()];
}

namespace {

// cell average over eps*i + Q(eps) by a tensor Gauss-Legendre rule
Vec cell_average(const Profile& u, bool stripped, const LatticeRegion& region, const IVec& i,
                 int order) {
    QuadRule rule = gauss_legendre(order);
    const std::size_t d = region.dim_d();
    const std::size_t m = region.dim_m();
    const double eps = region.epsilon();
    Vec acc(m, 0.0);
    std::vector<int> k(d, 0);
    Vec x(d);
    while (true) {
        double w = 1.0;
        for (std::size_t a = 0; a < d; ++a) {
            x[a] = eps * (static_cast<double>(i[a]) + 0.5 * rule.nodes[k[a]]);
            w *= 0.5 * rule.weights[k[a]];
        }
        Vec v = stripped ? u.base_value(x) : u(x);
        for (std::size_t c = 0; c < m; ++c) acc[c] += w * v[c];
        std::size_t a = d;
        bool done = true;
        while (a > 0) {
            --a;
            if (++k[a] < order) {
                done = false;
                break;
            }
            k[a] = 0;
        }
        if (done) break;
    }
    return acc;  // mean value over the cell (weights normalized to 1)
}

// refinement pass: average of 2^d half-cells, same order
Vec cell_average_refined(const Profile& u, bool stripped, const LatticeRegion& region,
                         const IVec& i, int order) {
    QuadRule rule = gauss_legendre(order);
    const std::size_t d = region.dim_d();
    const std::size_t m = region.dim_m();
    const double eps = region.epsilon();
    Vec acc(m, 0.0);
    const long long subcells = 1LL << d;
    for (long long sc = 0; sc < subcells; ++sc) {
        std::vector<int> k(d, 0);
        Vec x(d);
        while (true) {
            double w = 1.0;
            for (std::size_t a = 0; a < d; ++a) {
                double center = ((sc >> a) & 1) ? 0.25 : -0.25;
                x[a] = eps * (static_cast<double>(i[a]) + center + 0.25 * rule.nodes[k[a]]);
                w *= 0.5 * rule.weights[k[a]];
            }
            Vec v = stripped ? u.base_value(x) : u(x);
            for (std::size_t c = 0; c < m; ++c) acc[c] += w * v[c] / static_cast<double>(subcells);
            std::size_t a = d;
            bool done = true;
            while (a > 0) {
                --a;
                if (++k[a] < order) {
                    done = false;
                    break;
                }
                k[a] = 0;
            }
            if (done) break;
        }
    }
    return acc;
}

}  // namespace

DiscretizedField discretize(const Profile& u, std::shared_ptr<const LatticeRegion> region,
                            std::vector<IVec> band) {
    if (u.dim_d() != region->dim_d() || u.dim_m() != region->dim_m())
        throw std::invalid_argument("profile/region dimension mismatch");
    DiscretizedField field(region, std::move(band));
    const double eps = region->epsilon();
    double worst = 0.0;
    for (std::size_t id = 0; id < field.n_total(); ++id) {
        const IVec& i = field.index_of(id);
        Vec avg = cell_average(u, /*stripped=*/true, *region, i, 5);
        Vec avg2 = cell_average_refined(u, /*stripped=*/true, *region, i, 5);
        double* v = field.value(id);
        for (std::size_t c = 0; c < region->dim_m(); ++c) {
            worst = std::max(worst, std::abs(avg2[c] - avg[c]) / eps);
            v[c] = (avg2[c] + u.offset()[c]) / eps;
        }
    }
    field.set_quadrature_residual(worst);
    return field;
}

DiscretizedField pointwise_field(const Profile& u, std::shared_ptr<const LatticeRegion> region,
                                 std::vector<IVec> band) {
    if (u.dim_d() != region->dim_d() || u.dim_m() != region->dim_m())
        throw std::invalid_argument("profile/region dimension mismatch");
    DiscretizedField field(region, std::move(band));
    const double eps = region->epsilon();
    for (std::size_t id = 0; id < field.n_total(); ++id) {
        Vec x = region->position(field.index_of(id));
        Vec v = u(x);
        double* out = field.value(id);
        for (std::size_t c = 0; c < region->dim_m(); ++c) out[c] = v[c] / eps;
    }
    return field;
}

Vec gradient(const DiscretizedField& field, const IVec& xi, const IVec& site) {
    const std::size_t d = field.region().dim_d();
    if (xi.size() != d || site.size() != d)
        throw std::invalid_argument("gradient: dimension mismatch");
    double n = norm2(xi);
    if (n == 0.0) throw std::invalid_argument("zero direction carries no bond");
    auto id0 = field.lookup(site);
    if (!id0) throw std::out_of_range("gradient: no value at site " + ivec_str(site));
    IVec nb(site);
    for (std::size_t k = 0; k < d; ++k) nb[k] += xi[k];
    auto id1 = field.lookup(nb);
    if (!id1) throw std::out_of_range("gradient: no value at neighbour " + ivec_str(nb));
    const double* a = field.value(*id0);
    const double* b = field.value(*id1);
    Vec g(field.dim_m());
    for (std::size_t c = 0; c < field.dim_m(); ++c) g[c] = (b[c] - a[c]) / n;
    return g;
}

Profile interpolate(const DiscretizedField& field) {
    // capture the data by value; the interpolant outlives the field
    auto region = field.region_ptr();
    auto values = std::make_shared<DiscretizedField>(field);
    const double eps = region->epsilon();
    const std::size_t d = region->dim_d();
    const std::size_t m = region->dim_m();
    auto fn = [region, values, eps, d, m](const Vec& x) {
        IVec base(d);
        Vec y(d);
        for (std::size_t k = 0; k < d; ++k) {
            double t = x[k] / eps;
            double fl = std::floor(t + 1e-12);
            base[k] = static_cast<long long>(fl);
            y[k] = t - fl;
            if (y[k] < 0.0) y[k] = 0.0;
        }
        // Kuhn simplex: sort local coordinates descending (ties by axis order)
        std::vector<std::size_t> perm(d);
        std::iota(perm.begin(), perm.end(), 0);
        std::stable_sort(perm.begin(), perm.end(),
                         [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });
        Vec out(m, 0.0);
        IVec vertex(base);
        auto add_vertex = [&](double w) {
            if (w <= 0.0) return;
            auto id = values->lookup(vertex);
            if (!id)
                throw std::out_of_range("interpolate: missing vertex " + ivec_str(vertex));
            const double* v = values->value(*id);
            for (std::size_t c = 0; c < m; ++c) out[c] += w * eps * v[c];
        };
        // weights: 1 - y_(1), y_(k) - y_(k+1), ..., y_(d)
        add_vertex(1.0 - y[perm[0]]);
        for (std::size_t k = 0; k < d; ++k) {
            vertex[perm[k]] += 1;
            double w = (k + 1 < d) ? y[perm[k]] - y[perm[k + 1]] : y[perm[k]];
            add_vertex(w);
        }
        return out;
    };
    return Profile::custom(d, m, fn, "interpolant");
}

double discrete_sobolev_seminorm(const DiscretizedField& field, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("seminorm needs p >= 1");
    const auto& region = field.region();
    const std::size_t d = region.dim_d();
    const std::size_t m = region.dim_m();
    const double epsd = std::pow(region.epsilon(), static_cast<double>(d));
    KahanSum acc;
    IVec xi(d, 0);
    for (std::size_t i = 0; i < d; ++i) {
        std::fill(xi.begin(), xi.end(), 0);
        xi[i] = 1;
        for (std::size_t id : region.reachable_interior(xi)) {
            const IVec& site = region.sites()[id];
            IVec nb(site);
            nb[i] += 1;
            auto nid = field.lookup(nb);
            if (!nid) continue;  // interior bond endpoints are sites by construction
            const double* a = field.value(id);
            const double* b = field.value(*nid);
            double s = 0.0;
            for (std::size_t c = 0; c < m; ++c) s += (b[c] - a[c]) * (b[c] - a[c]);
            acc.add(epsd * std::pow(std::sqrt(s), p));
        }
    }
    return acc.value();
}

}  // namespace latgibbs
