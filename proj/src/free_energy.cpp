#include "latgibbs/free_energy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "latgibbs/numerics.hpp"
#include "latgibbs/parallel.hpp"
#include "latgibbs/rng.hpp"

namespace latgibbs {

namespace {

double pow_abs(double x, double p) {
    x = std::abs(x);
    if (p == 2.0) return x * x;
    if (p == 1.0) return x;
    return std::pow(x, p);
}

std::string mode_name(ConstraintMode m) {
    switch (m) {
        case ConstraintMode::bulk: return "bulk";
        case ConstraintMode::pinned: return "pinned";
        case ConstraintMode::soft_clamp: return "soft_clamp";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// exact quadrature
// ---------------------------------------------------------------------------

struct ExactSetup {
    const HamiltonianSpec* h;
    std::unique_ptr<ConstraintState> cs;
    DiscretizedField field;  // workspace, variables overwritten in place
    std::vector<std::size_t> vars;
    double eps;
    double budget;
    double h0;
    std::vector<std::pair<double, double>> free_limits;  // kappa = inf fallback box
    std::vector<char> limit_exact;  // clamp windows are domain walls, not truncations

    ExactSetup(const HamiltonianSpec& hs, const ConstraintSpec& spec)
        : h(&hs), field(initial_state(hs, spec)), eps(hs.region().epsilon()) {
        cs = std::make_unique<ConstraintState>(spec, hs.region_ptr(), hs.required_band());
        if (hs.region().dim_m() != 1)
            throw std::invalid_argument(
                "exact quadrature supports m = 1; use the sampling estimator");
        for (std::size_t id = 0; id < hs.region().n_sites(); ++id) vars.push_back(id);
        if (vars.size() > 4)
            throw std::invalid_argument(
                "exact quadrature limited to 4 degrees of freedom; use the sampling "
                "estimator (ti_free_energy)");
        budget = cs->budget();
        if (!std::isfinite(budget) && hs.mode() == HamiltonianMode::interior &&
            spec.mode != ConstraintMode::soft_clamp)
            throw std::invalid_argument(
                "unconstrained interior energies have a translation zero mode; the "
                "partition integral diverges");
        h0 = hs.energy(field);
    }

    // per-variable interval when the L^p ball does not bound it
    void build_free_limits() {
        free_limits.assign(vars.size(), {0.0, 0.0});
        limit_exact.assign(vars.size(), 0);
        for (std::size_t k = 0; k < vars.size(); ++k) {
            std::size_t id = vars[k];
            if (cs->spec().mode == ConstraintMode::soft_clamp && cs->in_strip(id)) {
                // clamp window bounds the variable exactly
                double center = cs->site_target(id)[0] / eps;
                free_limits[k] = {center - cs->spec().clamp_width,
                                  center + cs->spec().clamp_width};
                limit_exact[k] = 1;
                continue;
            }
            double center = *field.value(id);
            double L = std::max(1.0, eps);
            bool confined = false;
            for (int iter = 0; iter < 60 && !confined; ++iter) {
                double dmin = std::numeric_limits<double>::infinity();
                for (double s : {-1.0, 1.0}) {
                    double v = center + s * L;
                    dmin = std::min(dmin, h->energy_delta(field, id, &v));
                }
                if (dmin >= 60.0) {
                    confined = true;
                    break;
                }
                L *= 1.7;
            }
            if (!confined)
                throw std::runtime_error(
                    "free direction: the partition integral does not converge");
            free_limits[k] = {center - L, center + L};
        }
    }
};

// weight hook lets the tightness check reuse the integrator with an
// indicator on the energy
using LeafWeight = std::function<double(double /*h_total*/)>;

// per-level composite Gauss-Legendre (`panels` panels of `n` nodes) with
// exact limits from the remaining L^p budget; tracks the largest integrand
// value seen near a truncated (non-exact) interval end
double nested_integral(ExactSetup& setup, int n, int panels, const LeafWeight& leaf,
                       double* boundary_mass) {
    const auto p = setup.cs->spec().p;
    QuadRule rule = gauss_legendre(n);
    double bmass = 0.0;
    std::function<double(std::size_t, double, bool)> level =
        [&](std::size_t k, double remaining, bool near_trunc) -> double {
        std::size_t id = setup.vars[k];
        double lo, hi;
        bool exact_ends = true;
        double t = setup.cs->site_target(id)[0];
        if (std::isfinite(setup.budget)) {
            double R = std::pow(std::max(remaining, 0.0), 1.0 / p);
            lo = (t - R) / setup.eps;
            hi = (t + R) / setup.eps;
            if (setup.cs->spec().mode == ConstraintMode::soft_clamp &&
                setup.cs->in_strip(id)) {
                double center = t / setup.eps;
                lo = std::max(lo, center - setup.cs->spec().clamp_width);
                hi = std::min(hi, center + setup.cs->spec().clamp_width);
            }
        } else {
            lo = setup.free_limits[k].first;
            hi = setup.free_limits[k].second;
            exact_ends = setup.limit_exact[k] != 0;
        }
        if (!(hi > lo)) return 0.0;
        const double pw = (hi - lo) / panels;
        KahanSum acc;
        for (int pi = 0; pi < panels; ++pi) {
            const double a = lo + pi * pw;
            const double mid = a + 0.5 * pw, half = 0.5 * pw;
            for (int i = 0; i < n; ++i) {
                double v = mid + half * rule.nodes[i];
                *setup.field.value(id) = v;
                double w = rule.weights[i] * half;
                bool near_end =
                    !exact_ends && (v - lo < 0.05 * (hi - lo) || hi - v < 0.05 * (hi - lo));
                double term;
                double spent = pow_abs(t - setup.eps * v, p);
                if (k + 1 < setup.vars.size()) {
                    term = level(k + 1, remaining - spent, near_trunc || near_end);
                } else {
                    double ht = setup.h->energy(setup.field);
                    term = leaf(ht) * std::exp(-(ht - setup.h0));
                    if (near_trunc || near_end) bmass = std::max(bmass, term);
                }
                acc.add(w * term);
            }
        }
        *setup.field.value(id) = t / setup.eps;  // restore a neutral value
        return acc.value();
    };
    double out = level(0, setup.budget, false);
    if (boundary_mass) *boundary_mass = bmass;
    return out;
}

struct ExactResult {
    double log_integral;
    double rel_residual;
};

ExactResult exact_log_integral(const HamiltonianSpec& h, const ConstraintSpec& spec,
                               const LeafWeight& leaf, int n_coarse = 24, int n_fine = 40,
                               int panels = 0) {
    ConstraintSpec stripped = spec.stripped();
    ExactSetup setup(h, stripped);
    if (!std::isfinite(setup.budget)) setup.build_free_limits();
    if (panels <= 0) panels = std::isfinite(setup.budget) ? 1 : 2;
    for (int inflate = 0; inflate < 4; ++inflate) {
        double bm = 0.0;
        double coarse = nested_integral(setup, n_coarse, panels, leaf, nullptr);
        double fine = nested_integral(setup, n_fine, panels, leaf, &bm);
        if (!std::isfinite(setup.budget) && bm > 1e-10 && inflate < 3) {
            bool grew = false;
            for (std::size_t k = 0; k < setup.free_limits.size(); ++k) {
                if (setup.limit_exact[k]) continue;
                auto& lim = setup.free_limits[k];
                double mid = 0.5 * (lim.first + lim.second);
                double half = 0.5 * (lim.second - lim.first) * 1.6;
                lim = {mid - half, mid + half};
                grew = true;
            }
            if (grew) continue;
        }
        if (!(fine > 0.0)) throw std::runtime_error("partition integral vanished");
        double rel = std::abs(fine - coarse) / fine + bm;
        return {std::log(fine) - setup.h0, rel};
    }
    throw std::runtime_error("unreachable");
}

}  // namespace

std::string digest_string(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << hash;
    return os.str();
}

FreeEnergyEstimate exact_free_energy(const HamiltonianSpec& h, const ConstraintSpec& constraint) {
    auto res = exact_log_integral(h, constraint, [](double) { return 1.0; });
    const double epsd = std::pow(h.region().epsilon(), double(h.region().dim_d()));
    const double pref = epsd / h.region().domain().volume();
    FreeEnergyEstimate est;
    est.value = -pref * res.log_integral;
    est.stderr_ = pref * res.rel_residual;
    est.method = "exact_quadrature";
    est.meta.epsilon = h.region().epsilon();
    est.meta.kappa = constraint.kappa;
    est.meta.mode = mode_name(constraint.mode);
    est.meta.cutoff = h.cutoff();
    est.meta.tail_bound = h.tail_bound();
    std::ostringstream os;
    os << "exact|eps=" << est.meta.epsilon << "|kappa=" << est.meta.kappa << "|mode="
       << est.meta.mode << "|cutoff=" << est.meta.cutoff;
    est.meta.digest = digest_string(os.str());
    return est;
}

double restricted_partition_mass(const HamiltonianSpec& h, const ConstraintSpec& constraint,
                                 double energy_floor, double* err_estimate) {
    ConstraintSpec stripped = constraint.stripped();
    ExactSetup setup(h, stripped);
    if (!std::isfinite(setup.budget)) setup.build_free_limits();
    auto leaf = [energy_floor](double ht) { return ht >= energy_floor ? 1.0 : 0.0; };
    // the indicator is discontinuous: many small panels beat high order
    int panels = setup.vars.size() <= 1 ? 512 : (setup.vars.size() == 2 ? 72 : 24);
    double coarse = nested_integral(setup, 6, panels, leaf, nullptr) * std::exp(-setup.h0);
    double fine =
        nested_integral(setup, 6, panels + panels / 2, leaf, nullptr) * std::exp(-setup.h0);
    if (err_estimate) *err_estimate = std::abs(fine - coarse);
    return fine;
}

// ---------------------------------------------------------------------------
// thermodynamic integration
// ---------------------------------------------------------------------------

namespace {

// int over R^m of exp(-|y|_2^p) dy
double power_density_mass(double p, std::size_t m) {
    if (m == 1)
        return 2.0 * integrate_adaptive([p](double r) { return std::exp(-pow_abs(r, p)); },
                                        0.0, std::pow(70.0, 1.0 / p) + 2.0, 1e-13);
    const double pi = std::acos(-1.0);
    double surface = 2.0 * std::pow(pi, m / 2.0) / std::tgamma(m / 2.0);
    double radial = integrate_adaptive(
        [p, m](double r) { return std::pow(r, double(m - 1)) * std::exp(-pow_abs(r, p)); }, 0.0,
        std::pow(80.0, 1.0 / p) + 2.0, 1e-13);
    return surface * radial;
}

// draw y in R^m with density ~ exp(-|y|^p); p = 2 is the product Gaussian
void sample_power_density(double p, std::size_t m, Rng& rng, double* out) {
    if (p == 2.0) {
        const double s = 1.0 / std::sqrt(2.0);
        for (std::size_t c = 0; c < m; ++c) out[c] = s * rng.normal();
        return;
    }
    // radial inverse-CDF on a cached grid
    struct Table {
        std::vector<double> r, cdf;
    };
    static std::map<std::pair<double, std::size_t>, Table> cache;
    static std::mutex mu;
    Table* tab;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_pair(p, m);
        auto it = cache.find(key);
        if (it == cache.end()) {
            Table t;
            double rmax = std::pow(70.0, 1.0 / p) + 2.0;
            int n = 4000;
            t.r.resize(n + 1);
            t.cdf.resize(n + 1);
            double acc = 0.0;
            double prev = 0.0;
            t.r[0] = 0.0;
            t.cdf[0] = 0.0;
            for (int i = 1; i <= n; ++i) {
                double r = rmax * i / n;
                double f = std::pow(r, double(m - 1)) * std::exp(-pow_abs(r, p));
                acc += 0.5 * (prev + f) * (rmax / n);
                prev = f;
                t.r[i] = r;
                t.cdf[i] = acc;
            }
            for (auto& c : t.cdf) c /= acc;
            it = cache.emplace(key, std::move(t)).first;
        }
        tab = &it->second;
    }
    double u = rng.uniform();
    auto it2 = std::lower_bound(tab->cdf.begin(), tab->cdf.end(), u);
    std::size_t hi = std::min<std::size_t>(it2 - tab->cdf.begin(), tab->cdf.size() - 1);
    std::size_t lo = hi > 0 ? hi - 1 : 0;
    double c0 = tab->cdf[lo], c1 = tab->cdf[hi];
    double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
    double radius = tab->r[lo] + frac * (tab->r[hi] - tab->r[lo]);
    if (m == 1) {
        out[0] = rng.uniform() < 0.5 ? -radius : radius;
        return;
    }
    double norm = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        out[c] = rng.normal();
        norm += out[c] * out[c];
    }
    norm = std::sqrt(norm);
    for (std::size_t c = 0; c < m; ++c) out[c] *= radius / (norm > 0 ? norm : 1.0);
}

struct StageResult {
    double mean = 0.0;
    double se = 0.0;
    double acceptance = 0.0;
};

struct TIContext {
    const HamiltonianSpec* h;
    ConstraintSpec constraint;  // stripped
    ChainConfig cfg;
    TIOptions opt;
    TetherReference tether;
    DiscretizedField init;
    int stage_counter = 0;

    TIContext(const HamiltonianSpec& hs, const ConstraintSpec& spec, const ChainConfig& c,
              const TIOptions& o)
        : h(&hs), constraint(spec.stripped()), cfg(c), opt(o),
          init(initial_state(hs, constraint)) {}

    StageResult run_stage(double lambda, std::uint64_t stream) {
        ChainConfig sc = cfg;
        sc.seed = mix_seed(cfg.seed, 0xA11CE000ULL + stream);
        sc.proposal_scale = 0.0;  // per-stage autotune
        SampleRun run = sample(*h, constraint, sc, &tether, lambda, opt.threads, &init);
        if (run.combined.site_rate() < 0.01) {
            std::ostringstream os;
            os << "lambda stage " << lambda << ": acceptance "
               << run.combined.site_rate() << " below 1%";
            throw std::runtime_error(os.str());
        }
        // per-chain means guard against slow modes that batch means miss
        std::vector<double> pooled;
        std::vector<double> chain_means;
        double se_within_sq = 0.0;
        for (const auto& ch : run.chains) {
            std::vector<double> xs;
            xs.reserve(ch.records.size());
            for (const auto& r : ch.records) xs.push_back(r.h_phys - r.h_tether);
            MeanStderr ms = batch_mean_stderr(xs);
            chain_means.push_back(ms.mean);
            se_within_sq += ms.stderr_ * ms.stderr_;
            pooled.insert(pooled.end(), xs.begin(), xs.end());
        }
        StageResult out;
        MeanStderr all = batch_mean_stderr(pooled);
        out.mean = all.mean;
        double se_within = std::sqrt(se_within_sq) / double(run.chains.size());
        double se_between = 0.0;
        if (chain_means.size() > 1) {
            double mu = 0.0;
            for (double m : chain_means) mu += m;
            mu /= chain_means.size();
            double ss = 0.0;
            for (double m : chain_means) ss += (m - mu) * (m - mu);
            se_between = std::sqrt(ss / (chain_means.size() - 1.0) / chain_means.size());
        }
        out.se = std::max({all.stderr_, se_within, se_between});
        out.acceptance = run.combined.site_rate();
        return out;
    }
};

struct PanelNode {
    double lambda;
    double weight;
    StageResult res;
};

// integrate the stage means over [a,b]; split where neighbouring node means
// disagree beyond their combined noise, up to the depth cap
void integrate_panel(TIContext& ctx, double a, double b, int depth,
                     std::vector<PanelNode>& nodes, int& stages_used) {
    QuadRule rule = gauss_legendre(ctx.opt.gl_points);
    std::vector<PanelNode> local;
    local.reserve(ctx.opt.gl_points);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < ctx.opt.gl_points; ++i) {
        PanelNode n;
        n.lambda = mid + half * rule.nodes[i];
        n.weight = rule.weights[i] * half;
        n.res = ctx.run_stage(n.lambda, static_cast<std::uint64_t>(ctx.stage_counter++));
        local.push_back(n);
    }
    stages_used += ctx.opt.gl_points;
    bool smooth = true;
    for (std::size_t i = 0; i + 1 < local.size() && smooth; ++i) {
        double gap = std::abs(local[i].res.mean - local[i + 1].res.mean);
        double noise = 3.0 * (local[i].res.se + local[i + 1].res.se);
        double scale = 0.25 * (std::abs(local[i].res.mean) + std::abs(local[i + 1].res.mean));
        if (gap > noise + scale + 1e-12) smooth = false;
    }
    if (!smooth && depth < ctx.opt.max_panel_depth && stages_used < 400) {
        integrate_panel(ctx, a, mid, depth + 1, nodes, stages_used);
        integrate_panel(ctx, mid, b, depth + 1, nodes, stages_used);
        return;
    }
    nodes.insert(nodes.end(), local.begin(), local.end());
}

}  // namespace

FreeEnergyEstimate ti_free_energy(const HamiltonianSpec& h, const ConstraintSpec& constraint,
                                  const ChainConfig& cfg, const TIOptions& opt) {
    const auto& region = h.region();
    const std::size_t m = region.dim_m();
    const std::size_t n = region.n_sites();
    const double eps = region.epsilon();
    const double epsd = std::pow(eps, double(region.dim_d()));
    const double pref = epsd / region.domain().volume();
    const double p = constraint.p;

    TIContext ctx(h, constraint, cfg, opt);
    ConstraintState cs(ctx.constraint, h.region_ptr(), h.required_band());

    // reference scale: start near the constraint radius, halve until feasible
    double sigma = std::isfinite(constraint.kappa) ? std::min(1.0, constraint.kappa) : 1.0;
    double p_ref = 1.0, p_ref_se = 0.0;
    if (!cs.unconstrained() || constraint.mode == ConstraintMode::soft_clamp) {
        std::vector<double> y(m), val(m);
        for (int attempt = 0;; ++attempt) {
            if (attempt > 60) throw std::runtime_error("reference rescaling failed to find feasible mass");
            Rng rng(cfg.seed, 0xFEA51B1EULL + attempt);
            long long hits = 0;
            const long long ns = opt.pref_samples;
            for (long long s = 0; s < ns; ++s) {
                KahanSum dev;
                bool clamp_fail = false;
                for (std::size_t id = 0; id < n && !clamp_fail; ++id) {
                    sample_power_density(p, m, rng, y.data());
                    const double* t = cs.site_target(id);
                    for (std::size_t c = 0; c < m; ++c) val[c] = (t[c] + sigma * y[c]) / eps;
                    dev.add(cs.deviation_term(id, val.data()));
                    if (!cs.clamp_ok(id, val.data())) clamp_fail = true;
                }
                if (!clamp_fail && (cs.unconstrained() || dev.value() <= cs.budget())) ++hits;
            }
            double phat = double(hits) / double(ns);
            if (phat >= 1e-2) {
                // Wilson interval half-width
                double z = 1.0, nn = double(ns);
                double centre = (phat + z * z / (2 * nn)) / (1 + z * z / nn);
                double half = z / (1 + z * z / nn) *
                              std::sqrt(phat * (1 - phat) / nn + z * z / (4 * nn * nn));
                p_ref = phat;
                p_ref_se = half / std::max(phat, 1e-12);  // se of log P
                (void)centre;
                break;
            }
            sigma *= 0.5;
        }
    }
    ctx.tether.sigma = sigma;
    ctx.tether.p = p;

    // per-site reference log partition (sigma/eps)^m * mass(p, m)
    double mass = power_density_mass(p, m);
    double log_z_ref = double(n) * (double(m) * std::log(sigma / eps) + std::log(mass));

    std::vector<PanelNode> nodes;
    int stages_used = 0;
    integrate_panel(ctx, 0.0, 1.0, 0, nodes, stages_used);
    KahanSum integral;
    double var = 0.0;
    for (const auto& nd : nodes) {
        integral.add(nd.weight * nd.res.mean);
        var += nd.weight * nd.res.se * nd.weight * nd.res.se;
    }

    FreeEnergyEstimate est;
    est.value = -pref * (log_z_ref + std::log(p_ref) - integral.value());
    est.stderr_ = pref * std::sqrt(var + p_ref_se * p_ref_se);
    est.method = "thermodynamic_integration";
    est.meta.epsilon = eps;
    est.meta.kappa = constraint.kappa;
    est.meta.mode = mode_name(constraint.mode);
    est.meta.cutoff = h.cutoff();
    est.meta.tail_bound = h.tail_bound();
    est.meta.seed = cfg.seed;
    est.meta.sigma_ref = sigma;
    est.meta.p_ref = p_ref;
    est.meta.lambda_stages = stages_used;
    std::ostringstream os;
    os << "ti|eps=" << eps << "|kappa=" << constraint.kappa << "|mode=" << est.meta.mode
       << "|cutoff=" << h.cutoff() << "|seed=" << cfg.seed << "|steps=" << cfg.steps
       << "|burn=" << cfg.burn_in << "|chains=" << cfg.chains << "|sigma=" << sigma
       << "|stages=" << stages_used;
    est.meta.digest = digest_string(os.str());
    return est;
}

FreeEnergyEstimate estimate_free_energy(const HamiltonianSpec& h,
                                        const ConstraintSpec& constraint,
                                        const ChainConfig& cfg, const TIOptions& opt) {
    if (h.region().dim_m() == 1 && h.region().n_sites() <= 4) {
        try {
            return exact_free_energy(h, constraint);
        } catch (const std::invalid_argument&) {
            // fall through to sampling
        }
    }
    return ti_free_energy(h, constraint, cfg, opt);
}

FreeEnergyEstimate reference_free_energy_G(double lambda,
                                           std::shared_ptr<const LatticeRegion> region,
                                           const ConstraintSpec& constraint, GRefMode mode,
                                           const ChainConfig& cfg, double p,
                                           const SBVPotential* sbv_base, const TIOptions& opt) {
    if (!(lambda > 0.0)) throw std::invalid_argument("reference free energy needs lambda > 0");
    const std::size_t d = region->dim_d();
    std::vector<DecayWeights::FiniteEntry> entries;
    for (std::size_t i = 0; i < d; ++i) {
        IVec e(d, 0);
        e[i] = 1;
        entries.push_back({e, lambda});
    }
    DecayWeights w = DecayWeights::finite(d, entries);
    PotentialFamily fam;
    if (mode == GRefMode::p_power) {
        SobolevPotential pot;
        pot.p = p;
        pot.weights = w;
        fam = PotentialFamily(pot);
    } else {
        if (!sbv_base) throw std::invalid_argument("sbv reference needs a base potential");
        SBVPotential pot = *sbv_base;
        pot.weights = w;
        fam = PotentialFamily(pot);
    }
    HamiltonianSpec h(fam, region, HamiltonianMode::interior, 1.0);
    return estimate_free_energy(h, constraint, cfg, opt);
}

LimitScan limit_scan(const ScanProblem& problem, const std::vector<double>& eps_schedule,
                     const std::vector<double>& kappa_schedule) {
    for (std::size_t i = 0; i + 1 < eps_schedule.size(); ++i)
        if (!(eps_schedule[i] > eps_schedule[i + 1]))
            throw std::invalid_argument("eps schedule must be strictly decreasing");
    for (std::size_t i = 0; i + 1 < kappa_schedule.size(); ++i)
        if (!(kappa_schedule[i] > kappa_schedule[i + 1]))
            throw std::invalid_argument("kappa schedule must be strictly decreasing");

    LimitScan scan;
    scan.cells.resize(eps_schedule.size() * kappa_schedule.size());

    parallel_for(scan.cells.size(), problem.ti.threads, [&](std::size_t idx) {
        std::size_t kj = idx / eps_schedule.size();
        std::size_t ek = idx % eps_schedule.size();
        ScanCell& cell = scan.cells[idx];
        cell.epsilon = eps_schedule[ek];
        cell.kappa = kappa_schedule[kj];
        try {
            auto region = std::make_shared<LatticeRegion>(cell.epsilon, problem.dim_m,
                                                          Domain(problem.domain_boxes));
            HamiltonianMode hmode = problem.mode == ConstraintMode::pinned
                                        ? HamiltonianMode::full
                                        : HamiltonianMode::interior;
            HamiltonianSpec h(problem.potential, region, hmode, problem.beta);
            ConstraintSpec cs;
            cs.target = problem.target;
            cs.kappa = cell.kappa;
            cs.p = problem.p;
            cs.mode = problem.mode;
            ChainConfig cfg = problem.chain_template;
            cfg.seed = mix_seed(problem.seed, 0x5CA00000ULL + idx);
            TIOptions ti = problem.ti;
            ti.threads = 1;  // cells already run in parallel
            FreeEnergyEstimate est = estimate_free_energy(h, cs, cfg, ti);
            est.meta.seed = cfg.seed;
            cell.estimate = est;
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    });

    // per-kappa surrogates over the eps tail
    const std::size_t ne = eps_schedule.size();
    for (std::size_t kj = 0; kj < kappa_schedule.size(); ++kj) {
        KappaSummary ks;
        ks.kappa = kappa_schedule[kj];
        std::vector<const FreeEnergyEstimate*> tail;
        std::size_t tail_start = ne - (ne + 1) / 2;
        for (std::size_t ek = tail_start; ek < ne; ++ek) {
            const auto& cell = scan.cells[kj * ne + ek];
            if (cell.estimate) tail.push_back(&*cell.estimate);
        }
        if (tail.empty()) {
            ks.converged = false;
            scan.per_kappa.push_back(ks);
            continue;
        }
        ks.liminf_surrogate = tail.front()->value;
        ks.limsup_surrogate = tail.front()->value;
        double err = tail.front()->stderr_;
        for (const auto* e : tail) {
            ks.liminf_surrogate = std::min(ks.liminf_surrogate, e->value);
            ks.limsup_surrogate = std::max(ks.limsup_surrogate, e->value);
            err = std::max(err, e->stderr_);
        }
        ks.err = err;
        if (tail.size() >= 2) {
            const auto* a = tail[tail.size() - 2];
            const auto* b = tail[tail.size() - 1];
            ks.converged = std::abs(a->value - b->value) <=
                           std::max(3.0 * (a->stderr_ + b->stderr_), 1e-6);
        }
        scan.per_kappa.push_back(ks);
    }

    // kappa-supremum extrapolation (monotone in kappa, sup at the smallest)
    bool first = true;
    for (const auto& ks : scan.per_kappa) {
        if (first) {
            scan.f_prime = ks.liminf_surrogate;
            scan.f_second = ks.limsup_surrogate;
            scan.err = ks.err;
            scan.converged = ks.converged;
            first = false;
        } else {
            scan.f_prime = std::max(scan.f_prime, ks.liminf_surrogate);
            scan.f_second = std::max(scan.f_second, ks.limsup_surrogate);
            scan.err = std::max(scan.err, ks.err);
            scan.converged = scan.converged && ks.converged;
        }
    }

    // kappa-monotonicity within combined error at fixed eps
    for (std::size_t ek = 0; ek < ne; ++ek)
        for (std::size_t kj = 0; kj + 1 < kappa_schedule.size(); ++kj) {
            const auto& big = scan.cells[kj * ne + ek];        // larger kappa
            const auto& small = scan.cells[(kj + 1) * ne + ek];  // smaller kappa
            if (!big.estimate || !small.estimate) continue;
            double slack = 3.0 * (big.estimate->stderr_ + small.estimate->stderr_) + 1e-9;
            if (small.estimate->value < big.estimate->value - slack) scan.kappa_monotone = false;
        }
    return scan;
}

RateReport rate_functional_report(const LimitScan& scan_u, const LimitScan& scan_minimizer) {
    if (!scan_u.converged || !scan_minimizer.converged)
        throw std::invalid_argument("rate functional needs converged scans");
    RateReport rep;
    rep.value = scan_u.f_second - scan_minimizer.f_second;
    rep.err = std::sqrt(scan_u.err * scan_u.err + scan_minimizer.err * scan_minimizer.err);
    return rep;
}

}  // namespace latgibbs
