#include "latgibbs/homogenize.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include <fftw3.h>

#include "latgibbs/numerics.hpp"
#include "latgibbs/rng.hpp"

namespace latgibbs {

namespace {

long long checked_lattice_count(double len, double eps, const char* what) {
    double q = len / eps;
    double r = std::round(q);
    if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q)))
        throw std::invalid_argument(std::string(what) + " is not a multiple of eps");
    return static_cast<long long>(r);
}

}  // namespace

FreeEnergyEstimate cell_free_energy(const CellProblem& problem, double eps, double kappa) {
    const std::size_t d = problem.cell.dim();
    const int per = problem.potential.coefficient.period;
    // the periodic coefficient must tile the cell exactly
    double inv = 1.0 / (eps * static_cast<double>(per));
    if (std::abs(inv - std::round(inv)) > 1e-9)
        throw std::invalid_argument("1/eps must be a multiple of the coefficient period");

    // canonicalize: corner-relative box, coefficient phase = corner index
    IVec corner(d);
    Box rel = problem.cell;
    for (std::size_t k = 0; k < d; ++k) {
        corner[k] = checked_lattice_count(problem.cell.lo[k], eps, "cell corner");
        checked_lattice_count(problem.cell.hi[k] - problem.cell.lo[k], eps, "cell side");
        rel.lo[k] = 0.0;
        rel.hi[k] = problem.cell.hi[k] - problem.cell.lo[k];
    }
    SobolevPotential pot = problem.potential;
    pot.p = problem.p;
    pot.coefficient.phase.assign(d, 0);
    for (std::size_t k = 0; k < d; ++k)
        pot.coefficient.phase[k] = ((corner[k] % per) + per) % per;

    auto region = std::make_shared<LatticeRegion>(eps, problem.M.rows, Domain({rel}));
    HamiltonianSpec h(PotentialFamily(pot), region, HamiltonianMode::full, problem.beta);
    ConstraintSpec cs;
    cs.target = Profile::linear(d, problem.M);
    cs.kappa = kappa;
    cs.p = problem.p;
    cs.mode = ConstraintMode::pinned;
    ChainConfig cfg = problem.chain_template;
    cfg.seed = mix_seed(problem.seed,
                        0xCE11ULL ^ std::hash<double>{}(eps) ^ (std::hash<double>{}(kappa) << 1));
    return estimate_free_energy(h, cs, cfg, problem.ti);
}

ExtrapolationFit extrapolate_eps(const std::vector<double>& eps, const std::vector<double>& values,
                                 const std::vector<double>& errors) {
    ExtrapolationFit fit;
    if (eps.size() < 3) return fit;
    std::size_t n = eps.size();
    double e1 = eps[n - 3], e2 = eps[n - 2], e3 = eps[n - 1];

    auto solve = [&](double f1, double f2, double f3) {
        // ratio (f1-f2)/(f2-f3) = (e1^q - e2^q)/(e2^q - e3^q), root in q
        double target = (f2 - f3) != 0.0 ? (f1 - f2) / (f2 - f3) : -1.0;
        auto g = [&](double q) {
            return (std::pow(e1, q) - std::pow(e2, q)) / (std::pow(e2, q) - std::pow(e3, q)) -
                   target;
        };
        double lo = 0.5, hi = 2.0;
        double glo = g(lo), ghi = g(hi);
        double q;
        bool found = std::isfinite(glo) && std::isfinite(ghi) && glo * ghi <= 0.0;
        if (found) {
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                double gm = g(mid);
                if (glo * gm <= 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                    glo = gm;
                }
            }
            q = 0.5 * (lo + hi);
        } else {
            // no admissible order: clamp to the closer boundary
            q = std::abs(glo) < std::abs(ghi) ? 0.5 : 2.0;
        }
        double b = (f2 - f3) / (std::pow(e2, q) - std::pow(e3, q));
        double a = f3 - b * std::pow(e3, q);
        return std::tuple<double, double, bool>(a, q, found);
    };

    auto [a, q, found] = solve(values[n - 3], values[n - 2], values[n - 1]);
    fit.limit = a;
    fit.order = q;
    fit.ok = found;
    // linearized propagation of the per-point errors through the solve
    double var = 0.0;
    for (std::size_t i = n - 3; i < n; ++i) {
        std::vector<double> bumped(values);
        bumped[i] += errors[i];
        auto [ap, qp, fp] = solve(bumped[n - 3], bumped[n - 2], bumped[n - 1]);
        (void)qp;
        (void)fp;
        var += (ap - a) * (ap - a);
    }
    fit.err = std::sqrt(var);
    // when the data cannot identify the order, the limit is only known up to
    // the spread across admissible orders; fold that in as model error
    auto limit_at = [&](double qq) {
        double bb = (values[n - 2] - values[n - 1]) / (std::pow(e2, qq) - std::pow(e3, qq));
        return values[n - 1] - bb * std::pow(e3, qq);
    };
    if (!found) {
        double spread = std::abs(limit_at(0.5) - limit_at(2.0));
        fit.err = std::sqrt(fit.err * fit.err + 0.25 * spread * spread);
    }
    return fit;
}

FHomResult f_hom_estimate(const CellProblem& problem) {
    if (problem.eps_schedule.size() < 3)
        throw std::invalid_argument("f_hom needs an eps schedule of length >= 3");
    if (problem.kappa_schedule.empty())
        throw std::invalid_argument("f_hom needs at least one kappa");
    FHomResult out;
    for (double kappa : problem.kappa_schedule) {
        FHomKappa fk;
        fk.kappa = kappa;
        std::vector<double> es, vs, ss;
        for (double eps : problem.eps_schedule) {
            FreeEnergyEstimate est = cell_free_energy(problem, eps, kappa);
            fk.cells.push_back(est);
            es.push_back(eps);
            vs.push_back(est.value);
            ss.push_back(est.stderr_);
        }
        ExtrapolationFit fit = extrapolate_eps(es, vs, ss);
        fk.value = fit.limit;
        fk.fit_order = fit.order;
        std::size_t n = vs.size();
        fk.err = std::sqrt(fit.err * fit.err + ss[n - 1] * ss[n - 1]);
        fk.converged = fit.ok && std::abs(vs[n - 2] - vs[n - 1]) <=
                                     std::abs(vs[n - 3] - vs[n - 2]) +
                                         3.0 * (ss[n - 3] + ss[n - 2] + ss[n - 1]);
        out.per_kappa.push_back(fk);
    }
    // the limit should not depend on kappa; cross-check and keep the smallest
    const FHomKappa& last = out.per_kappa.back();
    out.value = last.value;
    out.err = last.err;
    out.converged = true;
    out.kappa_independent = true;
    for (const auto& fk : out.per_kappa) {
        out.converged = out.converged && fk.converged;
        double gap = std::abs(fk.value - last.value);
        if (gap > 3.0 * std::sqrt(fk.err * fk.err + last.err * last.err) + 1e-9)
            out.kappa_independent = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// 1-D oracles
// ---------------------------------------------------------------------------

namespace {

// smallest L with f(+-L) - lambda-tilt >= depth; refuses sub-linear decay
double support_radius(const std::function<double(double)>& f, double lambda, double depth) {
    double L = 1.0;
    for (int it = 0; it < 80; ++it) {
        double lo = -lambda * (-L) + f(-L);  // f(-L) + lambda L on the left
        double hi = f(L) - lambda * L;
        if (std::min(lo, hi) >= depth) return L;
        L *= 1.5;
        if (L > 1e7) throw std::runtime_error("bond potential decays too slowly to integrate");
    }
    throw std::runtime_error("bond potential decays too slowly to integrate");
}

double log_moment(const std::function<double(double)>& f, double lambda) {
    double L = support_radius(f, lambda, 80.0);
    // peak shift for stability
    double tstar = golden_section_max([&](double t) { return lambda * t - f(t); }, -L, L, 1e-10);
    double gmax = lambda * tstar - f(tstar);
    double integral = integrate_adaptive(
        [&](double t) { return std::exp(lambda * t - f(t) - gmax); }, -L, L, 1e-13);
    return gmax + std::log(integral);
}

}  // namespace

double legendre_oracle_1d(const std::function<double(double)>& bond_potential, double M) {
    // safeguard that exp(-f) is integrable at all
    support_radius(bond_potential, 0.0, 10.0);
    auto h = [&](double lambda) { return lambda * M - log_moment(bond_potential, lambda); };
    // expand a bracket until the concave objective peaks inside
    double lo = -4.0, hi = 4.0;
    for (int it = 0; it < 60; ++it) {
        double fl = h(lo), fm = h(0.5 * (lo + hi)), fh = h(hi);
        if (fm >= fl && fm >= fh) break;
        if (fl > fh)
            lo *= 2.0;
        else
            hi *= 2.0;
        if (std::abs(lo) > 1e6 || hi > 1e6)
            throw std::runtime_error("tilt maximization failed to bracket");
    }
    double best = 0.0;
    golden_section_max(h, lo, hi, 1e-11, &best);
    return best;
}

namespace {

struct ConvGrid {
    double raw;
    double debiased;
};

ConvGrid convolve_once(const std::function<double(double)>& f, double M, int N, int base_pts) {
    double L = support_radius(f, 0.0, 55.0);
    int G = base_pts;
    double hstep = 2.0 * L / (G - 1);

    std::vector<double> ts(G), q(G);
    for (int j = 0; j < G; ++j) {
        ts[j] = -L + j * hstep;
        q[j] = std::exp(-f(ts[j]));
    }
    // exponential tilt from the grid so the tilted mean sits at M; without it
    // the density at the target underflows the FFT noise floor for large N
    auto tilted_mean = [&](double lam) {
        KahanSum num, den;
        for (int j = 0; j < G; ++j) {
            double w = q[j] * std::exp(lam * ts[j]);
            num.add(ts[j] * w);
            den.add(w);
        }
        return num.value() / den.value();
    };
    double lo = -1.0, hi = 1.0;
    for (int it = 0; it < 60 && tilted_mean(lo) > M; ++it) lo *= 2.0;
    for (int it = 0; it < 60 && tilted_mean(hi) < M; ++it) hi *= 2.0;
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        if (tilted_mean(mid) < M)
            lo = mid;
        else
            hi = mid;
    }
    const double lam = 0.5 * (lo + hi);

    double z1 = 0.0, mean = 0.0, second = 0.0;
    {
        KahanSum zs, ms, ss;
        for (int j = 0; j < G; ++j) {
            double w = q[j] * std::exp(lam * ts[j]);
            zs.add(w);
            ms.add(ts[j] * w);
            ss.add(ts[j] * ts[j] * w);
        }
        z1 = zs.value() * hstep;
        mean = ms.value() * hstep / z1;
        second = ss.value() * hstep / z1;
    }
    double sigma = std::sqrt(std::max(second - mean * mean, 1e-12));
    double target = M * static_cast<double>(N);
    double span = std::abs(target) + 12.0 * sigma * std::sqrt(double(N)) + 2.0 * L + 2.0;

    std::size_t need = static_cast<std::size_t>(2.0 * span / hstep) + G + 2;
    std::size_t P = 1;
    while (P < need) P <<= 1;

    std::vector<std::complex<double>> buf(P, {0.0, 0.0});
    // weights of the normalized tilted single-bond measure
    for (int j = 0; j < G; ++j) buf[j] = q[j] * std::exp(lam * ts[j]) * hstep / z1;
    fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(P),
                                     reinterpret_cast<fftw_complex*>(buf.data()),
                                     reinterpret_cast<fftw_complex*>(buf.data()),
                                     FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);
    for (auto& c : buf) c = std::pow(c, N);
    fftw_plan bwd = fftw_plan_dft_1d(static_cast<int>(P),
                                     reinterpret_cast<fftw_complex*>(buf.data()),
                                     reinterpret_cast<fftw_complex*>(buf.data()),
                                     FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(bwd);
    fftw_destroy_plan(bwd);

    // grid origin of the N-fold convolution sits at N * (-L), spacing hstep;
    // conv weight at index j is the probability mass of bin j
    auto conv_weight = [&](long long idx) {
        long long wrapped = ((idx % (long long)P) + (long long)P) % (long long)P;
        return std::max(buf[wrapped].real() / static_cast<double>(P), 1e-300);
    };
    auto log_density = [&](long long j) { return std::log(conv_weight(j) / hstep); };

    double offset = (target - double(N) * (-L)) / hstep;
    long long j0 = static_cast<long long>(std::llround(offset));
    double frac = offset - static_cast<double>(j0);

    double ld0 = log_density(j0);
    double ldm = log_density(j0 - 1);
    double ldp = log_density(j0 + 1);
    // quadratic interpolation of log density to the exact target
    double dctr = 0.5 * (ldp - ldm);
    double curv = ldp - 2.0 * ld0 + ldm;
    double ld = ld0 + dctr * frac + 0.5 * curv * frac * frac;

    // curvature on a wider stencil for the CLT prefactor (stable in noise)
    long long k = std::max<long long>(
        1, std::llround(0.05 * sigma * std::sqrt(double(N)) / hstep));
    k = std::min<long long>(k, static_cast<long long>(P / 8));
    double c2 = -(log_density(j0 + k) - 2.0 * ld0 + log_density(j0 - k)) /
                (static_cast<double>(k) * hstep * static_cast<double>(k) * hstep);

    ConvGrid out;
    // untilt: q^{*N}(MN) = z_lam^N e^{-lam M N} p_tilted(MN)
    out.raw = -std::log(z1) + lam * M - ld / static_cast<double>(N);
    double prefactor = 0.0;
    if (c2 > 0.0) prefactor = 0.5 * std::log(2.0 * std::acos(-1.0) / c2);
    out.debiased = out.raw - prefactor / static_cast<double>(N);
    return out;
}

}  // namespace

ConvolutionOracle convolution_oracle_1d(const std::function<double(double)>& bond_potential,
                                        double M, int N) {
    if (N < 1 || N > 1024) throw std::invalid_argument("convolution oracle needs 1 <= N <= 1024");
    ConvGrid coarse = convolve_once(bond_potential, M, N, 2048);
    ConvGrid fine = convolve_once(bond_potential, M, N, 4096);
    ConvolutionOracle out;
    out.raw = fine.raw;
    out.debiased = fine.debiased;
    out.grid_error = std::abs(fine.debiased - coarse.debiased);
    return out;
}

}  // namespace latgibbs
