#include "latgibbs/sbv_energy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "latgibbs/homogenize.hpp"
#include "latgibbs/numerics.hpp"
#include "latgibbs/rng.hpp"

namespace latgibbs {

JumpReport split_energy(const DiscretizedField& field, const SBVPotential& pot) {
    const auto& region = field.region();
    const std::size_t d = region.dim_d();
    const std::size_t m = region.dim_m();
    const double eps = region.epsilon();
    const double epsd = std::pow(eps, double(d));
    const double T = pot.threshold(eps);
    JumpReport rep;
    KahanSum bulk, surface;
    IVec xi(d, 0);
    for (std::size_t axis = 0; axis < d; ++axis) {
        std::fill(xi.begin(), xi.end(), 0);
        xi[axis] = 1;
        for (std::size_t id : region.reachable(xi)) {
            IVec nb(region.sites()[id]);
            nb[axis] += 1;
            auto nid = field.lookup(nb);
            if (!nid) continue;
            const double* a = field.value(id);
            const double* b = field.value(*nid);
            double s = 0.0;
            for (std::size_t c = 0; c < m; ++c) s += (b[c] - a[c]) * (b[c] - a[c]);
            double g = std::sqrt(s);
            // same expression as the g_eps energy so the partition is exact
            double term = epsd * pot.g_eps(eps, g);
            if (g >= T) {
                rep.jump_bonds.push_back({id, axis, g});
                surface.add(term);
            } else {
                bulk.add(term);
            }
        }
    }
    rep.bulk_energy = bulk.value();
    rep.surface_energy = surface.value();
    return rep;
}

double discrete_sbv_norm(const Profile& u, double eps, const SBVPotential& pot,
                         const Domain& domain) {
    auto region = std::make_shared<LatticeRegion>(eps, u.dim_m(), domain);
    DiscretizedField f = discretize(u, region);
    JumpReport rep = split_energy(f, pot);
    return rep.total();
}

Profile JumpDatum::profile(std::size_t dim_d) const {
    return Profile::step(dim_d, above, below, point, normal);
}

bool jump_captured(double delta, double eps, const SBVPotential& pot) {
    return delta / eps >= pot.threshold(eps);
}

SurfaceProbe surface_density_probe(const JumpDatum& datum, const SurfaceProbeOptions& opt) {
    const std::size_t d = opt.cell.dim();
    if (d > 2) throw std::invalid_argument("surface probe supports d <= 2");
    int axis = -1;
    for (std::size_t k = 0; k < d; ++k) {
        if (datum.normal[k] != 0.0) {
            if (axis >= 0) throw std::invalid_argument("probe normal must be +-e_i");
            axis = static_cast<int>(k);
        }
    }
    if (axis < 0) throw std::invalid_argument("probe normal must be +-e_i");

    PotentialFamily fam{opt.potential};
    SurfaceProbe probe;
    std::vector<double> es, vs, ss;
    for (double eps : opt.eps_schedule) {
        SurfaceProbe::Cell cell;
        cell.eps = eps;
        auto region = std::make_shared<LatticeRegion>(eps, datum.above.size(),
                                                      Domain({opt.cell}));
        HamiltonianSpec h(fam, region, HamiltonianMode::full, opt.beta);

        ConstraintSpec jump_cs;
        jump_cs.target = datum.profile(d);
        jump_cs.kappa = opt.kappa;
        jump_cs.p = opt.p;
        jump_cs.mode = ConstraintMode::pinned;

        ConstraintSpec base_cs = jump_cs;
        base_cs.target = Profile::constant(d, datum.below);

        ChainConfig cfg = opt.chain_template;
        cfg.seed = mix_seed(opt.seed, 0x50BE0000ULL + std::hash<double>{}(eps));
        TIOptions ti = opt.ti;
        cell.jump = estimate_free_energy(h, jump_cs, cfg, ti);
        ChainConfig cfg2 = cfg;
        cfg2.seed = mix_seed(opt.seed, 0xBA5E0000ULL + std::hash<double>{}(eps));
        cell.baseline = estimate_free_energy(h, base_cs, cfg2, ti);

        double volume = region->domain().volume();
        cell.excess = volume * (cell.jump.value - cell.baseline.value) / opt.beta;
        cell.err = volume *
                   std::sqrt(cell.jump.stderr_ * cell.jump.stderr_ +
                             cell.baseline.stderr_ * cell.baseline.stderr_) /
                   opt.beta;
        probe.cells.push_back(cell);
        es.push_back(eps);
        vs.push_back(cell.excess);
        ss.push_back(cell.err);
    }
    if (probe.cells.size() >= 3) {
        ExtrapolationFit fit = extrapolate_eps(es, vs, ss);
        probe.amplitude = fit.limit;
        probe.fitted_exponent = fit.order;
        probe.err = std::sqrt(fit.err * fit.err + ss.back() * ss.back());
        probe.converged = fit.ok;
    } else if (!probe.cells.empty()) {
        probe.amplitude = vs.back();
        probe.err = ss.back();
        probe.converged = false;
    }
    return probe;
}

}  // namespace latgibbs
