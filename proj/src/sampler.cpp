#include "latgibbs/sampler.hpp"

#include <algorithm>
#include <cmath>
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

}  // namespace

ConstraintState::ConstraintState(const ConstraintSpec& spec,
                                 std::shared_ptr<const LatticeRegion> region,
                                 const std::vector<IVec>& band)
    : spec_(spec), region_(std::move(region)), m_(region_->dim_m()) {
    if (!(spec_.kappa > 0.0)) throw std::invalid_argument("constraint radius must be positive");
    if (!(spec_.p >= 1.0)) throw std::invalid_argument("constraint exponent must be >= 1");
    const double eps = region_->epsilon();
    const double epsd = std::pow(eps, double(region_->dim_d()));
    budget_ = std::isfinite(spec_.kappa)
                  ? std::pow(spec_.kappa, spec_.p) * region_->domain().volume() / epsd
                  : std::numeric_limits<double>::infinity();
    targets_.resize(region_->n_sites() * m_);
    for (std::size_t id = 0; id < region_->n_sites(); ++id) {
        Vec v = spec_.target(region_->position(region_->sites()[id]));
        for (std::size_t c = 0; c < m_; ++c) targets_[id * m_ + c] = v[c];
    }
    if (spec_.mode == ConstraintMode::soft_clamp) {
        strip_.assign(region_->n_sites(), 0);
        for (std::size_t id : region_->boundary_strip(spec_.clamp_R0)) strip_[id] = 1;
        clamp_center_.resize(targets_.size());
        for (std::size_t i = 0; i < targets_.size(); ++i)
            clamp_center_[i] = targets_[i] / eps;
    }
    if (spec_.mode == ConstraintMode::pinned && !band.empty()) {
        DiscretizedField pinned = discretize(spec_.target, region_, band);
        band_values_.assign(pinned.raw().begin() + region_->n_sites() * m_,
                            pinned.raw().end());
    }
}

double ConstraintState::deviation_term(std::size_t id, const double* value) const {
    const double eps = region_->epsilon();
    const double* t = site_target(id);
    double s = 0.0;
    for (std::size_t c = 0; c < m_; ++c) {
        double r = t[c] - eps * value[c];
        s += r * r;
    }
    return pow_abs(std::sqrt(s), spec_.p);
}

double ConstraintState::deviation_sum(const DiscretizedField& f) const {
    KahanSum acc;
    for (std::size_t id = 0; id < region_->n_sites(); ++id)
        acc.add(deviation_term(id, f.value(id)));
    return acc.value();
}

bool ConstraintState::clamp_ok(std::size_t id, const double* value) const {
    if (spec_.mode != ConstraintMode::soft_clamp || !strip_[id]) return true;
    double s = 0.0;
    for (std::size_t c = 0; c < m_; ++c) {
        double r = value[c] - clamp_center_[id * m_ + c];
        s += r * r;
    }
    return std::sqrt(s) < spec_.clamp_width;
}

bool ConstraintState::inside(const DiscretizedField& f) const {
    if (!unconstrained() && deviation_sum(f) > budget_) return false;
    if (spec_.mode == ConstraintMode::soft_clamp) {
        for (std::size_t id = 0; id < region_->n_sites(); ++id)
            if (!clamp_ok(id, f.value(id))) return false;
    }
    if (spec_.mode == ConstraintMode::pinned && !band_values_.empty()) {
        const double* band = f.raw().data() + region_->n_sites() * m_;
        for (std::size_t i = 0; i < band_values_.size(); ++i)
            if (band[i] != band_values_[i]) return false;
    }
    return true;
}

bool inside_constraint(const ConstraintSpec& spec, const DiscretizedField& field) {
    ConstraintState st(spec, field.region_ptr(), field.band());
    return st.inside(field);
}

double TetherReference::term(const double* target, const double* value, double eps,
                             std::size_t m) const {
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        double r = (eps * value[c] - target[c]) / sigma;
        s += r * r;
    }
    return pow_abs(std::sqrt(s), p);
}

DiscretizedField initial_state(const HamiltonianSpec& h, const ConstraintSpec& constraint) {
    if (constraint.mode == ConstraintMode::pinned) {
        if (h.mode() != HamiltonianMode::full)
            throw std::invalid_argument("pinned constraint needs a full-mode energy");
        return discretize(constraint.target, h.region_ptr(), h.required_band());
    }
    if (h.mode() == HamiltonianMode::full) {
        // exterior band pinned to the discretized target; free sites start at
        // the pointwise rescale, which sits inside the constraint exactly
        DiscretizedField f = discretize(constraint.target, h.region_ptr(), h.required_band());
        DiscretizedField pw = pointwise_field(constraint.target, h.region_ptr());
        const std::size_t m = f.dim_m();
        for (std::size_t id = 0; id < f.n_free(); ++id)
            std::copy(pw.value(id), pw.value(id) + m, f.value(id));
        return f;
    }
    return pointwise_field(constraint.target, h.region_ptr(), h.required_band());
}

namespace {

struct ChainWorkspace {
    DiscretizedField field;
    KahanSum h_phys;
    KahanSum h_tether;
    KahanSum deviation;
    long long accepted_since_refresh = 0;

    explicit ChainWorkspace(DiscretizedField f) : field(std::move(f)) {}
};

class Dynamics {
  public:
    Dynamics(const HamiltonianSpec& h, const ConstraintState& cs, const TetherReference* tether,
             double lambda)
        : h_(h), cs_(cs), tether_(tether), lambda_(lambda), m_(h.region().dim_m()),
          eps_(h.region().epsilon()) {}

    void refresh(ChainWorkspace& w) const {
        w.h_phys.reset(h_.energy(w.field));
        w.h_tether.reset(tether_ ? tether_energy(w.field) : 0.0);
        w.deviation.reset(cs_.deviation_sum(w.field));
        w.accepted_since_refresh = 0;
    }

    double tether_energy(const DiscretizedField& f) const {
        KahanSum acc;
        for (std::size_t id = 0; id < h_.region().n_sites(); ++id)
            acc.add(tether_->term(cs_.site_target(id), f.value(id), eps_, m_));
        return acc.value();
    }

    // One full sweep: a Gaussian proposal per free site plus one uniform
    // shift. Returns the number of accepted site moves.
    long long sweep(ChainWorkspace& w, Rng& rng, double scale, double shift_scale,
                    AcceptanceStats& stats) const {
        const std::size_t n = h_.region().n_sites();
        std::vector<double> nv(m_);
        long long accepted = 0;
        for (std::size_t id = 0; id < n; ++id) {
            const double* old_v = w.field.value(id);
            for (std::size_t c = 0; c < m_; ++c) nv[c] = old_v[c] + scale * rng.normal();
            ++stats.site_attempts;
            if (!cs_.clamp_ok(id, nv.data())) continue;
            double ddev = 0.0;
            if (!cs_.unconstrained()) {
                ddev = cs_.deviation_term(id, nv.data()) -
                       cs_.deviation_term(id, w.field.value(id));
                if (w.deviation.value() + ddev > cs_.budget()) continue;
            }
            double dh = h_.energy_delta(w.field, id, nv.data());
            double dt = 0.0;
            if (tether_)
                dt = tether_->term(cs_.site_target(id), nv.data(), eps_, m_) -
                     tether_->term(cs_.site_target(id), w.field.value(id), eps_, m_);
            double d_target = lambda_ * dh + (1.0 - lambda_) * dt;
            if (d_target <= 0.0 || rng.uniform() < std::exp(-d_target)) {
                double* v = w.field.value(id);
                std::copy(nv.begin(), nv.end(), v);
                w.h_phys.add(dh);
                if (tether_) w.h_tether.add(dt);
                if (!cs_.unconstrained()) w.deviation.add(ddev);
                ++stats.site_accepts;
                ++accepted;
                ++w.accepted_since_refresh;
            }
        }
        accepted += shift_move(w, rng, shift_scale, stats);
        if (w.accepted_since_refresh >= 100000) refresh(w);
        return accepted;
    }

  private:
    // Uniform shift of all free sites; interior-mode gradients are invariant
    // so only crossing bonds, the tether and the deviation respond.
    long long shift_move(ChainWorkspace& w, Rng& rng, double shift_scale,
                         AcceptanceStats& stats) const {
        const std::size_t n = h_.region().n_sites();
        std::vector<double> s(m_);
        for (std::size_t c = 0; c < m_; ++c) s[c] = shift_scale * rng.normal();
        ++stats.shift_attempts;
        // constraint: recompute the shifted deviation sum
        double new_dev = 0.0;
        std::vector<double> shifted(m_);
        if (!cs_.unconstrained() || cs_.spec().mode == ConstraintMode::soft_clamp) {
            KahanSum acc;
            for (std::size_t id = 0; id < n; ++id) {
                const double* v = w.field.value(id);
                for (std::size_t c = 0; c < m_; ++c) shifted[c] = v[c] + s[c];
                if (!cs_.clamp_ok(id, shifted.data())) return 0;
                acc.add(cs_.deviation_term(id, shifted.data()));
            }
            new_dev = acc.value();
            if (!cs_.unconstrained() && new_dev > cs_.budget()) return 0;
        }
        double dh = 0.0;
        if (h_.mode() == HamiltonianMode::full) {
            // only bonds with a pinned endpoint change
            KahanSum acc;
            const std::size_t nfree = n;
            for (const auto& sh : h_.shells()) {
                for (const auto& b : sh.bonds) {
                    bool from_free = b.from < nfree, to_free = b.to < nfree;
                    if (from_free == to_free) continue;
                    const double* vf = w.field.value(b.from);
                    const double* vt = w.field.value(b.to);
                    double g_old = 0.0, g_new = 0.0;
                    for (std::size_t c = 0; c < m_; ++c) {
                        double base = vt[c] - vf[c];
                        double moved = base + (to_free ? s[c] : -s[c]);
                        g_old += base * base;
                        g_new += moved * moved;
                    }
                    g_old = std::sqrt(g_old) / sh.xi_norm;
                    g_new = std::sqrt(g_new) / sh.xi_norm;
                    const IVec& origin = w.field.index_of(b.from);
                    acc.add(h_.potential().bond_energy(sh.c_xi, eps_, origin, g_new) -
                            h_.potential().bond_energy(sh.c_xi, eps_, origin, g_old));
                }
            }
            dh = h_.beta() * acc.value();
        }
        double dt = 0.0;
        if (tether_) {
            KahanSum acc;
            for (std::size_t id = 0; id < n; ++id) {
                const double* v = w.field.value(id);
                for (std::size_t c = 0; c < m_; ++c) shifted[c] = v[c] + s[c];
                acc.add(tether_->term(cs_.site_target(id), shifted.data(), eps_, m_) -
                        tether_->term(cs_.site_target(id), v, eps_, m_));
            }
            dt = acc.value();
        }
        double d_target = lambda_ * dh + (1.0 - lambda_) * dt;
        if (d_target <= 0.0 || rng.uniform() < std::exp(-d_target)) {
            for (std::size_t id = 0; id < n; ++id) {
                double* v = w.field.value(id);
                for (std::size_t c = 0; c < m_; ++c) v[c] += s[c];
            }
            w.h_phys.add(dh);
            if (tether_) w.h_tether.add(dt);
            if (!cs_.unconstrained()) w.deviation.reset(new_dev);
            ++stats.shift_accepts;
            ++w.accepted_since_refresh;
            return 1;
        }
        return 0;
    }

    const HamiltonianSpec& h_;
    const ConstraintState& cs_;
    const TetherReference* tether_;
    double lambda_;
    std::size_t m_;
    double eps_;
};

}  // namespace

double autotune(const HamiltonianSpec& h, const ConstraintSpec& constraint, std::uint64_t seed,
                const TetherReference* tether, double lambda,
                std::vector<std::string>* warnings, const DiscretizedField* initial) {
    ConstraintState cs(constraint, h.region_ptr(), h.required_band());
    DiscretizedField init = initial ? *initial : initial_state(h, constraint);
    if (!cs.inside(init)) throw std::runtime_error("autotune: infeasible initial state");
    Dynamics dyn(h, cs, tether, lambda);

    const int pilot_sweeps = 60;
    std::vector<std::pair<double, double>> rates;  // (scale, acceptance), scale ascending
    for (int k = -14; k <= 3; ++k) {
        double scale = std::pow(2.0, k);
        ChainWorkspace w(init);
        dyn.refresh(w);
        Rng rng(seed, 0x7000 + static_cast<std::uint64_t>(k + 20));
        AcceptanceStats stats;
        for (int s = 0; s < pilot_sweeps; ++s) dyn.sweep(w, rng, scale, scale, stats);
        rates.emplace_back(scale, stats.site_rate());
    }
    double best = 0.0;
    for (const auto& [scale, rate] : rates)
        if (rate >= 0.2 && rate <= 0.5) best = std::max(best, scale);
    if (best > 0.0) return best;
    bool all_high = std::all_of(rates.begin(), rates.end(),
                                [](const auto& r) { return r.second > 0.5; });
    bool all_low = std::all_of(rates.begin(), rates.end(),
                               [](const auto& r) { return r.second < 0.2; });
    if (all_high) {
        if (warnings) warnings->push_back("autotune: acceptance above window at every scale");
        return rates.back().first;
    }
    if (all_low) {
        if (warnings) warnings->push_back("autotune: acceptance below window at every scale");
        return rates.front().first;
    }
    if (warnings) warnings->push_back("autotune: target window unreachable, using closest scale");
    double best_dist = 1e9;
    for (const auto& [scale, rate] : rates) {
        double dist = std::abs(rate - 0.35);
        if (dist < best_dist) {
            best_dist = dist;
            best = scale;
        }
    }
    return best;
}

SampleRun sample(const HamiltonianSpec& h, const ConstraintSpec& constraint,
                 const ChainConfig& cfg, const TetherReference* tether, double lambda,
                 int threads, const DiscretizedField* initial, const StateObserver* observer) {
    if (!(cfg.steps > cfg.burn_in) || cfg.burn_in < 0)
        throw std::invalid_argument("chain config needs steps > burn_in >= 0");
    if (cfg.chains < 1) throw std::invalid_argument("chain config needs chains >= 1");
    ConstraintState cs(constraint, h.region_ptr(), h.required_band());
    DiscretizedField init = initial ? *initial : initial_state(h, constraint);
    if (!cs.inside(init)) throw std::runtime_error("sample: infeasible initial state");

    SampleRun run;
    double scale = cfg.proposal_scale;
    if (scale <= 0.0)
        scale = autotune(h, constraint, cfg.seed, tether, lambda, &run.warnings, &init);
    run.proposal_scale = scale;

    Dynamics dyn(h, cs, tether, lambda);
    run.chains.reserve(cfg.chains);
    for (int c = 0; c < cfg.chains; ++c) run.chains.push_back(ChainResult{{}, {}, 0.0, init});

    parallel_for(cfg.chains, threads, [&](std::size_t c) {
        ChainWorkspace w(init);
        dyn.refresh(w);
        Rng rng(cfg.seed, 1 + c);
        ChainResult& out = run.chains[c];
        const std::size_t nfree = h.region().n_sites();
        const std::size_t mm = h.region().dim_m();
        for (long long sweep_i = 0; sweep_i < cfg.steps; ++sweep_i) {
            dyn.sweep(w, rng, scale, scale, out.stats);
            if (sweep_i >= cfg.burn_in && (sweep_i - cfg.burn_in) % cfg.thin == 0) {
                KahanSum fm;
                for (std::size_t id = 0; id < nfree; ++id) fm.add(w.field.value(id)[0]);
                (void)mm;
                out.records.push_back(
                    {w.h_phys.value(), w.h_tether.value(), fm.value() / double(nfree)});
                if (observer && *observer) (*observer)(static_cast<int>(c), w.field);
            }
        }
        KahanSum mh;
        for (const auto& r : out.records) mh.add(r.h_phys);
        out.mean_h = out.records.empty() ? 0.0 : mh.value() / double(out.records.size());
        out.final_state = std::move(w.field);
    });

    // aggregate in chain order
    std::vector<double> all;
    for (const auto& c : run.chains) {
        run.combined.site_attempts += c.stats.site_attempts;
        run.combined.site_accepts += c.stats.site_accepts;
        run.combined.shift_attempts += c.stats.shift_attempts;
        run.combined.shift_accepts += c.stats.shift_accepts;
        for (const auto& r : c.records) all.push_back(r.h_phys);
    }
    MeanStderr ms = batch_mean_stderr(all);
    run.mean_h = ms.mean;
    run.stderr_h = ms.stderr_;
    if (run.combined.site_rate() < 0.01)
        run.warnings.push_back("acceptance below 1%: scale=" + format_double(scale) +
                               " rate=" + format_double(run.combined.site_rate()));
    return run;
}

}  // namespace latgibbs
