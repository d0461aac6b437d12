#include "latgibbs/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "latgibbs/numerics.hpp"

namespace latgibbs {

namespace {

double norm2i(const IVec& xi) {
    double s = 0.0;
    for (auto v : xi) s += double(v) * double(v);
    return std::sqrt(s);
}

}  // namespace

HamiltonianSpec::HamiltonianSpec(PotentialFamily potential,
                                 std::shared_ptr<const LatticeRegion> region,
                                 HamiltonianMode mode, double beta,
                                 std::optional<int> cutoff_override, double cutoff_rel_tol)
    : potential_(std::move(potential)),
      region_(std::move(region)),
      mode_(mode),
      beta_(beta) {
    if (potential_.dim() != region_->dim_d())
        throw std::invalid_argument("potential/region dimension mismatch");
    const auto& w = potential_.weights();
    cutoff_ = cutoff_override ? *cutoff_override : w.choose_cutoff(cutoff_rel_tol);
    if (cutoff_ < 1) throw std::invalid_argument("cutoff must be >= 1");
    tail_bound_ = w.tail_bound(cutoff_);

    const std::size_t d = region_->dim_d();
    // enumerate shells 0 < |xi|_2 <= cutoff in a fixed (|xi|^2, lex) order
    std::vector<IVec> dirs;
    {
        IVec xi(d, -cutoff_);
        while (true) {
            double n2 = 0.0;
            bool zero = true;
            for (auto v : xi) {
                n2 += double(v) * double(v);
                zero = zero && v == 0;
            }
            if (!zero && n2 <= double(cutoff_) * double(cutoff_) + 1e-12) dirs.push_back(xi);
            std::size_t a = d;
            bool done = true;
            while (a > 0) {
                --a;
                if (++xi[a] <= cutoff_) {
                    done = false;
                    break;
                }
                xi[a] = -cutoff_;
            }
            if (done) break;
        }
        std::sort(dirs.begin(), dirs.end(), [](const IVec& a, const IVec& b) {
            long long na = 0, nb = 0;
            for (auto v : a) na += v * v;
            for (auto v : b) nb += v * v;
            if (na != nb) return na < nb;
            return a < b;
        });
    }

    // full mode: collect every exterior lattice point the bonds read
    std::vector<IVec> band;
    if (mode_ == HamiltonianMode::full) {
        for (const auto& xi : dirs) {
            if (w.coefficient(xi) == 0.0) continue;
            for (const auto& site : region_->sites()) {
                IVec nb(site);
                for (std::size_t k = 0; k < d; ++k) nb[k] += xi[k];
                if (!region_->site_id(nb).has_value()) band.push_back(nb);
            }
        }
        std::sort(band.begin(), band.end());
        band.erase(std::unique(band.begin(), band.end()), band.end());
    }
    band_ = std::move(band);

    // field ids: free sites first, then the sorted band
    auto field_id = [&](const IVec& i) -> std::optional<std::size_t> {
        if (auto id = region_->site_id(i)) return id;
        auto it = std::lower_bound(band_.begin(), band_.end(), i);
        if (it != band_.end() && *it == i)
            return region_->n_sites() + static_cast<std::size_t>(it - band_.begin());
        return std::nullopt;
    };

    incident_.assign(region_->n_sites(), {});
    for (const auto& xi : dirs) {
        double c_xi = w.coefficient(xi);
        if (c_xi == 0.0) continue;
        Shell sh;
        sh.xi = xi;
        sh.c_xi = c_xi;
        sh.xi_norm = norm2i(xi);
        if (mode_ == HamiltonianMode::interior) {
            for (std::size_t id : region_->reachable(xi)) {
                IVec nb(region_->sites()[id]);
                for (std::size_t k = 0; k < d; ++k) nb[k] += xi[k];
                auto nid = region_->site_id(nb);
                if (!nid) continue;  // reachable endpoints are sites; fp guard
                sh.bonds.push_back({static_cast<std::uint32_t>(id),
                                    static_cast<std::uint32_t>(*nid)});
            }
        } else {
            for (std::size_t id = 0; id < region_->n_sites(); ++id) {
                IVec nb(region_->sites()[id]);
                for (std::size_t k = 0; k < d; ++k) nb[k] += xi[k];
                auto nid = field_id(nb);
                if (!nid) throw std::logic_error("full mode band is missing a neighbour");
                sh.bonds.push_back({static_cast<std::uint32_t>(id),
                                    static_cast<std::uint32_t>(*nid)});
            }
        }
        if (sh.bonds.empty()) continue;
        std::uint32_t shell_idx = static_cast<std::uint32_t>(shells_.size());
        for (std::uint32_t b = 0; b < sh.bonds.size(); ++b) {
            const Bond& bond = sh.bonds[b];
            if (bond.from < region_->n_sites())
                incident_[bond.from].push_back({shell_idx, b});
            if (bond.to < region_->n_sites() && bond.to != bond.from)
                incident_[bond.to].push_back({shell_idx, b});
        }
        n_bonds_ += sh.bonds.size();
        shells_.push_back(std::move(sh));
    }
}

void HamiltonianSpec::check_band(const DiscretizedField& field) const {
    if (&field.region() != region_.get() && field.region().sites() != region_->sites())
        throw std::invalid_argument("field evaluated against a spec for another region");
    if (mode_ == HamiltonianMode::full && field.band() != band_)
        throw std::invalid_argument("full mode requires the pinned exterior band");
}

double HamiltonianSpec::bond_value(const DiscretizedField& field, const Shell& sh,
                                   const Bond& b, std::size_t replace_id,
                                   const double* replacement) const {
    const std::size_t m = field.dim_m();
    const double* vf = (b.from == replace_id) ? replacement : field.value(b.from);
    const double* vt = (b.to == replace_id) ? replacement : field.value(b.to);
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        double g = vt[c] - vf[c];
        s += g * g;
    }
    double grad_norm = std::sqrt(s) / sh.xi_norm;
    return potential_.bond_energy(sh.c_xi, region_->epsilon(),
                                  field.index_of(b.from), grad_norm);
}

double HamiltonianSpec::energy(const DiscretizedField& field) const {
    check_band(field);
    const std::size_t none = field.n_total();
    KahanSum acc;
    for (const auto& sh : shells_)
        for (const auto& b : sh.bonds) acc.add(bond_value(field, sh, b, none, nullptr));
    return beta_ * acc.value();
}

double HamiltonianSpec::energy_delta(const DiscretizedField& field, std::size_t site_id,
                                     const double* new_value) const {
    if (site_id >= region_->n_sites())
        throw std::invalid_argument("energy_delta: site is pinned");
    const std::size_t none = field.n_total();
    KahanSum acc;
    for (const auto& inc : incident_[site_id]) {
        const Shell& sh = shells_[inc.shell];
        const Bond& b = sh.bonds[inc.bond];
        acc.add(bond_value(field, sh, b, site_id, new_value) -
                bond_value(field, sh, b, none, nullptr));
    }
    return beta_ * acc.value();
}

double interior_vs_full_gap(const HamiltonianSpec& full_spec, const DiscretizedField& field) {
    if (full_spec.mode() != HamiltonianMode::full)
        throw std::invalid_argument("gap needs a full-mode spec");
    HamiltonianSpec interior(full_spec.potential(), full_spec.region_ptr(),
                             HamiltonianMode::interior, full_spec.beta(), full_spec.cutoff());
    return full_spec.energy(field) - interior.energy(field);
}

}  // namespace latgibbs
