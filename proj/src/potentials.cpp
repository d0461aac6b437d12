#include "latgibbs/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "latgibbs/numerics.hpp"

namespace latgibbs {

namespace {

double norm2i(const IVec& xi) {
    double s = 0.0;
    for (auto v : xi) s += double(v) * double(v);
    return std::sqrt(s);
}

bool is_zero(const IVec& xi) {
    return std::all_of(xi.begin(), xi.end(), [](long long v) { return v == 0; });
}

// enumerate all xi with |xi|_inf <= k_max, calling fn(xi, |xi|_2)
template <typename F>
void for_each_direction(std::size_t d, long long k_max, F&& fn) {
    IVec xi(d, -k_max);
    while (true) {
        if (!is_zero(xi)) fn(xi, norm2i(xi));
        std::size_t a = d;
        bool done = true;
        while (a > 0) {
            --a;
            if (++xi[a] <= k_max) {
                done = false;
                break;
            }
            xi[a] = -k_max;
        }
        if (done) break;
    }
}

}  // namespace

DecayWeights::DecayWeights() : form_(PowerLaw{1.0, 4.0}) {}

DecayWeights DecayWeights::power_law(std::size_t dim, double c0, double s) {
    if (c0 < 0.0) throw std::invalid_argument("power-law weight needs c0 >= 0");
    DecayWeights w;
    w.dim_ = dim;
    w.form_ = PowerLaw{c0, s};
    return w;
}

DecayWeights DecayWeights::finite(std::size_t dim, std::vector<FiniteEntry> entries) {
    DecayWeights w;
    w.dim_ = dim;
    for (auto& e : entries) {
        if (e.xi.size() != dim) throw std::invalid_argument("finite weight: wrong dimension");
        if (is_zero(e.xi)) throw std::invalid_argument("finite weight: zero direction");
        if (e.c < 0.0) throw std::invalid_argument("finite weight: negative coefficient");
    }
    std::sort(entries.begin(), entries.end(),
              [](const FiniteEntry& a, const FiniteEntry& b) { return a.xi < b.xi; });
    w.form_ = std::move(entries);
    return w;
}

const std::vector<DecayWeights::FiniteEntry>* DecayWeights::entries() const {
    return std::get_if<std::vector<FiniteEntry>>(&form_);
}

double DecayWeights::coefficient(const IVec& xi) const {
    if (is_zero(xi)) return 0.0;
    if (auto* pl = power()) return pl->c0 * std::pow(norm2i(xi), -pl->s);
    const auto& es = *entries();
    auto it = std::lower_bound(es.begin(), es.end(), xi,
                               [](const FiniteEntry& e, const IVec& v) { return e.xi < v; });
    if (it != es.end() && it->xi == xi) return it->c;
    return 0.0;
}

double DecayWeights::tail_bound(double M, TailKind kind) const {
    if (M < 1.0) throw std::invalid_argument("tail bound needs M >= 1");
    const double w = kind == TailKind::first_moment ? 1.0 : 0.0;
    if (auto* es = entries()) {
        double s = 0.0;
        for (const auto& e : *es) {
            double n = norm2i(e.xi);
            if (n > M) s += e.c * std::pow(n, w);
        }
        return s;
    }
    const auto& pl = *power();
    if (pl.c0 == 0.0) return 0.0;
    const double d = static_cast<double>(dim_);
    if (pl.s - w <= d) return std::numeric_limits<double>::infinity();
    // explicit shells up to K, integral comparison beyond
    long long K = static_cast<long long>(std::ceil(M)) + 24;
    double s = 0.0;
    for_each_direction(dim_, K, [&](const IVec&, double n) {
        if (n > M && n <= double(K)) s += std::pow(n, w - pl.s);
    });
    // every |xi|_2 > K has |xi|_inf >= K/sqrt(d); count by sup-norm shells and
    // bound the shell count by 2d(2k+1)^{d-1} <= 2d 3^{d-1} k^{d-1}
    double c_shell = 2.0 * d * std::pow(3.0, d - 1.0);
    double expo = d - 1.0 + w - pl.s;  // < -1
    double Kd = double(K) / std::sqrt(d);
    double tail = c_shell * std::pow(Kd, expo + 1.0) / (-(expo + 1.0));
    return pl.c0 * (s + tail);
}

double DecayWeights::partial_sum(double M, TailKind kind) const {
    const double w = kind == TailKind::first_moment ? 1.0 : 0.0;
    if (auto* es = entries()) {
        double s = 0.0;
        for (const auto& e : *es) {
            double n = norm2i(e.xi);
            if (n <= M) s += e.c * std::pow(n, w);
        }
        return s;
    }
    const auto& pl = *power();
    double s = 0.0;
    for_each_direction(dim_, static_cast<long long>(std::floor(M)), [&](const IVec&, double n) {
        if (n <= M) s += std::pow(n, w - pl.s);
    });
    return pl.c0 * s;
}

int DecayWeights::choose_cutoff(double rel_tol, int max_cutoff) const {
    if (auto* es = entries()) {
        double m = 1.0;
        for (const auto& e : *es)
            if (e.c > 0.0) m = std::max(m, norm2i(e.xi));
        return static_cast<int>(std::ceil(m - 1e-12));
    }
    for (int M = 1; M <= max_cutoff; M *= 2) {
        double mass = partial_sum(M);
        if (mass > 0.0 && tail_bound(M) <= rel_tol * mass) {
            // refine downward to the smallest admissible cutoff
            int lo = std::max(1, M / 2), hi = M;
            while (lo < hi) {
                int mid = (lo + hi) / 2;
                double pm = partial_sum(mid);
                if (pm > 0.0 && tail_bound(mid) <= rel_tol * pm)
                    hi = mid;
                else
                    lo = mid + 1;
            }
            return lo;
        }
    }
    throw std::runtime_error("no cutoff reaches the requested tail tolerance");
}

double PeriodicModulator::operator()(const Vec& y) const {
    if (trivial()) return 1.0;
    const double pi = std::acos(-1.0);
    const double per = static_cast<double>(period);
    double prod = 1.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        double yk = y[k] + (k < phase.size() ? static_cast<double>(phase[k]) : 0.0);
        double r = yk - per * std::floor(yk / per);
        double snapped = std::round(r);
        if (std::abs(r - snapped) < 1e-9) r = snapped;
        if (r >= per) r -= per;
        double s = std::sin(pi * r / per);
        prod *= s * s;
    }
    return 1.0 + amp * prod;
}

double SBVPotential::threshold(double eps) const { return tau * std::pow(eps, -gamma); }

double SBVPotential::g1(double t) const { return c1 * std::pow(t, q); }

double SBVPotential::g2(double t) const { return c + c2 * std::pow(t, alpha); }

double SBVPotential::g_eps(double eps, double t) const {
    t = std::abs(t);
    if (t < threshold(eps)) return g1(t);
    return g2(eps * t) / eps;
}

namespace {

// upper bound for the upper incomplete gamma function, valid for x > a:
// Gamma(a, x) <= x^a e^{-x} / (x - a + 1)
double upper_gamma_bound(double a, double x) {
    if (x <= a) return std::numeric_limits<double>::infinity();
    return std::exp(a * std::log(x) - x) / (x - a + 1.0);
}

}  // namespace

double SBVPotential::integrability_bound(double eps) const {
    const double T = threshold(eps);
    // convex branch: quadrature on [0, t_cut], linear-minorant tail beyond
    double t_cut = std::min(T, std::pow(60.0 / c1, 1.0 / q) + 1.0);
    double bulk = integrate_adaptive([&](double t) { return std::exp(-g1(t)); }, 0.0, t_cut,
                                     1e-12);
    double bulk_tail = 0.0;
    if (t_cut < T) {
        double slope = c1 * q * std::pow(t_cut, q - 1.0);
        bulk_tail = std::exp(-g1(t_cut)) / slope;
    }
    // concave branch: (1/eps) g2(eps t) = c/eps + (c2/eps)(eps t)^alpha
    // substitute s = eps t: integral = e^{-c/eps} (1/eps) int_X e^{-beta s^a} ds
    double X = eps * T;
    double beta = c2 / eps;
    double a = 1.0 / alpha;
    double x0 = beta * std::pow(X, alpha);
    double surf;
    if (x0 > a + 1.0) {
        surf = std::exp(-c / eps) / eps * std::pow(beta, -a) / alpha * upper_gamma_bound(a, x0);
    } else {
        // threshold still small; integrate explicitly to where the bound applies
        double X1 = std::pow((a + 2.0) / beta, 1.0 / alpha);
        double direct = integrate_adaptive(
            [&](double s) { return std::exp(-beta * std::pow(s, alpha)); }, X, X1, 1e-12);
        surf = std::exp(-c / eps) / eps *
               (direct + std::pow(beta, -a) / alpha * upper_gamma_bound(a, beta * std::pow(X1, alpha)));
    }
    return 2.0 * (bulk + bulk_tail + surf);
}

const DecayWeights& PotentialFamily::weights() const {
    if (auto* s = sobolev()) return s->weights;
    return sbv()->weights;
}

double PotentialFamily::growth_p() const {
    if (auto* s = sobolev()) return s->p;
    return sbv()->q;
}

double PotentialFamily::eval(const IVec& xi, double eps, const Vec& x, const Vec& t) const {
    if (is_zero(xi)) throw std::invalid_argument("zero direction carries no bond");
    double tn = 0.0;
    for (double v : t) tn += v * v;
    tn = std::sqrt(tn);
    double c_xi = weights().coefficient(xi);
    if (auto* s = sobolev()) {
        Vec y(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] / eps;
        return c_xi * s->coefficient(y) * std::pow(tn, s->p);
    }
    return c_xi * sbv()->g_eps(eps, tn);
}

double PotentialFamily::bond_energy(double c_xi, double eps, const IVec& site,
                                    double grad_norm) const {
    if (auto* s = sobolev()) {
        double a = 1.0;
        if (!s->coefficient.trivial()) {
            const double pi = std::acos(-1.0);
            const double per = static_cast<double>(s->coefficient.period);
            const auto& phase = s->coefficient.phase;
            double prod = 1.0;
            for (std::size_t k = 0; k < site.size(); ++k) {
                long long ik = site[k] + (k < phase.size() ? phase[k] : 0);
                long long r = ik % s->coefficient.period;
                if (r < 0) r += s->coefficient.period;
                double sn = std::sin(pi * static_cast<double>(r) / per);
                prod *= sn * sn;
            }
            a = 1.0 + s->coefficient.amp * prod;
        }
        return c_xi * a * std::pow(grad_norm, s->p);
    }
    return c_xi * sbv()->g_eps(eps, grad_norm);
}

bool HypothesisReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const HypothesisCheck& c) { return c.status == "pass"; });
}

const HypothesisCheck* HypothesisReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g;
    g.reserve(n);
    for (int i = 0; i < n; ++i)
        g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    return g;
}

void check_sobolev(const SobolevPotential& pot, const std::vector<double>& eps_schedule,
                   HypothesisReport& rep) {
    const std::size_t d = pot.weights.dim();
    auto ts = log_grid(1e-3, 1e3, 25);
    ts.push_back(0.0);
    std::vector<IVec> dirs;
    for_each_direction(d, 2, [&](const IVec& xi, double) { dirs.push_back(xi); });
    std::vector<Vec> xs;
    for (int k = 0; k < 5; ++k) xs.push_back(Vec(d, 0.37 * k));

    PotentialFamily fam{pot};
    const double eps0 = eps_schedule.empty() ? 0.25 : eps_schedule.front();

    {  // nonnegativity (strict positivity relaxed at t = 0)
        HypothesisCheck c{"C1_nonnegative", "pass", 0.0, "f >= 0 on the witness grid", ""};
        for (const auto& xi : dirs)
            for (const auto& x : xs)
                for (double t : ts)
                    if (fam.eval(xi, eps0, x, Vec{t}) < 0.0) {
                        c.status = "fail";
                        std::ostringstream os;
                        os << "t=" << t;
                        c.witness = os.str();
                    }
        rep.checks.push_back(c);
    }
    {  // increment bound in the power-compatible form
        HypothesisCheck c{"C2_increment", "pass", std::pow(2.0, pot.p - 1.0),
                          "f(x,s+t) <= 2^{p-1}(f(x,s) + C_xi a_max |t|^p)", ""};
        const double amax = pot.coefficient.a_max();
        for (const auto& xi : dirs) {
            double cxi = pot.weights.coefficient(xi);
            for (const auto& x : xs)
                for (double s : ts)
                    for (double t : ts) {
                        double lhs = fam.eval(xi, eps0, x, Vec{s + t});
                        double rhs = std::pow(2.0, pot.p - 1.0) *
                                     (fam.eval(xi, eps0, x, Vec{s}) +
                                      cxi * amax * std::pow(std::abs(t), pot.p));
                        if (lhs > rhs * (1.0 + 1e-12)) {
                            c.status = "fail";
                            std::ostringstream os;
                            os << "xi first coord=" << xi[0] << " s=" << s << " t=" << t;
                            c.witness = os.str();
                        }
                    }
        }
        rep.checks.push_back(c);
    }
    {  // weight summability certificate
        HypothesisCheck c{"C2_summable", "pass", 0.0, "", ""};
        double t1 = pot.weights.tail_bound(1.0), t8 = pot.weights.tail_bound(8.0);
        c.fitted_constant = t1;
        if (!std::isfinite(t1) || !std::isfinite(t8) || !(t8 <= t1)) {
            c.status = "fail";
            c.detail = "sum of C_xi diverges (tail bound infinite or non-decreasing)";
        } else {
            std::ostringstream os;
            os << "tail(1)=" << t1 << " tail(8)=" << t8;
            c.detail = os.str();
        }
        rep.checks.push_back(c);
    }
    {  // nearest-neighbour lower bound, constant min C_{e_i} * a_min
        HypothesisCheck c{"C3_nn_lower_bound", "pass", 0.0, "", ""};
        double cmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < d; ++i) {
            IVec e(d, 0);
            e[i] = 1;
            cmin = std::min(cmin, pot.weights.coefficient(e));
        }
        double C = cmin * pot.coefficient.a_min();
        c.fitted_constant = C;
        if (!(C > 0.0)) {
            c.status = "fail";
            c.detail = "no positive nearest-neighbour coefficient";
        }
        for (std::size_t i = 0; i < d && c.status == "pass"; ++i) {
            IVec e(d, 0);
            e[i] = 1;
            for (const auto& x : xs)
                for (double t : ts) {
                    double lhs = fam.eval(e, eps0, x, Vec{t});
                    double rhs = C * std::max(std::pow(std::abs(t), pot.p) - 1.0, 0.0);
                    if (lhs < rhs * (1.0 - 1e-12)) {
                        c.status = "fail";
                        std::ostringstream os;
                        os << "i=" << i << " t=" << t;
                        c.witness = os.str();
                    }
                }
        }
        rep.checks.push_back(c);
    }
    {  // periodicity of the coefficient
        HypothesisCheck c{"H1_periodicity", "pass", double(pot.coefficient.period),
                          "a(y + period e_k) = a(y)", ""};
        for (const auto& x : xs) {
            Vec y(x);
            for (std::size_t k = 0; k < d; ++k) {
                Vec ys(y);
                ys[k] += pot.coefficient.period;
                if (std::abs(pot.coefficient(ys) - pot.coefficient(y)) > 1e-12) {
                    c.status = "fail";
                    c.witness = "k=" + std::to_string(k);
                }
            }
        }
        rep.checks.push_back(c);
    }
    {  // upper bound with fitted constant
        HypothesisCheck c{"H3_upper_bound", "pass", 0.0, "f <= C C_xi (|t|^p + 1), fitted C", ""};
        double fitted = 0.0;
        for (const auto& xi : dirs) {
            double cxi = pot.weights.coefficient(xi);
            if (cxi == 0.0) continue;
            for (const auto& x : xs)
                for (double t : ts) {
                    double f = fam.eval(xi, eps0, x, Vec{t});
                    fitted = std::max(fitted, f / (cxi * (std::pow(std::abs(t), pot.p) + 1.0)));
                }
        }
        c.fitted_constant = fitted;
        if (!(fitted <= 1e3)) c.status = "fail";
        rep.checks.push_back(c);
    }
}

void check_sbv(const SBVPotential& pot, const std::vector<double>& eps_schedule,
               HypothesisReport& rep) {
    std::vector<double> eps = eps_schedule;
    if (eps.empty()) eps = {0.25, 0.125, 0.0625, 0.03125};

    {  // structural exponents
        HypothesisCheck c{"schedule_exponents", "pass", pot.gamma,
                          "0 < gamma < 1 forces T_eps up, eps T_eps down", ""};
        if (!(pot.gamma > 0.0 && pot.gamma < 1.0 && pot.tau > 0.0)) c.status = "fail";
        rep.checks.push_back(c);
    }
    {  // numeric monotonicity along the schedule in use
        HypothesisCheck c{"schedule_monotone", "pass", 0.0, "T_eps increasing, eps T_eps decreasing",
                          ""};
        for (std::size_t i = 0; i + 1 < eps.size(); ++i) {
            if (!(eps[i] > eps[i + 1])) {
                c.status = "fail";
                c.witness = "schedule not strictly decreasing";
                break;
            }
            double T0 = pot.threshold(eps[i]), T1 = pot.threshold(eps[i + 1]);
            if (!(T1 > T0) || !(eps[i + 1] * T1 < eps[i] * T0)) {
                c.status = "fail";
                std::ostringstream os;
                os << "eps=" << eps[i + 1];
                c.witness = os.str();
            }
        }
        rep.checks.push_back(c);
    }
    {  // g1 convex superlinear, g2 concave with positive floor
        HypothesisCheck c{"branch_shapes", "pass", pot.q, "", ""};
        if (!(pot.q > 1.0 && pot.c1 > 0.0 && pot.c > 0.0 && pot.c2 >= 0.0 && pot.alpha > 0.0 &&
              pot.alpha < 1.0))
            c.status = "fail";
        rep.checks.push_back(c);
    }
    {  // compatibility g1(T_eps) <= (C/eps) g2(eps T_eps), fitted C
        HypothesisCheck c{"threshold_compatibility", "pass", 0.0, "", ""};
        double fitted = 0.0;
        for (double e : eps) {
            double T = pot.threshold(e);
            fitted = std::max(fitted, pot.g1(T) * e / pot.g2(e * T));
        }
        c.fitted_constant = fitted;
        if (!(fitted <= 1e3)) {
            c.status = "fail";
            c.witness = "fitted C exceeds 1e3";
        }
        rep.checks.push_back(c);
    }
    {  // doubling g_eps(M t) <= C_M g_eps(t)
        HypothesisCheck c{"doubling", "pass", 0.0, "sup over grid of g(Mt)/g(t), M <= 2d", ""};
        double fitted = 0.0;
        const double Mmax = 2.0 * static_cast<double>(pot.weights.dim());
        for (double e : eps) {
            double T = pot.threshold(e);
            auto ts = log_grid(std::max(1e-3, 1e-3 * T), 10.0 * T, 60);
            for (double M : {2.0, Mmax}) {
                for (double t : ts) {
                    double den = pot.g_eps(e, t);
                    if (den <= 0.0) continue;
                    fitted = std::max(fitted, pot.g_eps(e, M * t) / den);
                }
            }
        }
        c.fitted_constant = fitted;
        if (!(fitted <= 1e3)) c.status = "fail";
        rep.checks.push_back(c);
    }
    {  // uniform integrability over the schedule
        HypothesisCheck c{"uniform_integrability", "pass", 0.0,
                          "certified bound on int exp(-g_eps)", ""};
        double worst = 0.0;
        for (double e : eps) worst = std::max(worst, pot.integrability_bound(e));
        c.fitted_constant = worst;
        if (!std::isfinite(worst)) c.status = "fail";
        rep.checks.push_back(c);
    }
    {  // first-moment summability of weights (long-range surface control)
        HypothesisCheck c{"weights_first_moment", "pass", 0.0, "", ""};
        double t1 = pot.weights.tail_bound(1.0, TailKind::first_moment);
        c.fitted_constant = t1;
        if (!std::isfinite(t1)) {
            c.status = "fail";
            c.detail = "sum of |xi| C_xi diverges";
        }
        rep.checks.push_back(c);
    }
    {  // informational: jump of g_eps at the threshold
        HypothesisCheck c{"threshold_jump", "pass", 0.0,
                          "discontinuity size at T_eps (reported, not constrained)", ""};
        double worst = 0.0;
        for (double e : eps) {
            double T = pot.threshold(e);
            worst = std::max(worst, std::abs(pot.g2(e * T) / e - pot.g1(T)));
        }
        c.fitted_constant = worst;
        rep.checks.push_back(c);
    }
}

}  // namespace

HypothesisReport validate(const PotentialFamily& pot, const std::vector<double>& eps_schedule) {
    HypothesisReport rep;
    if (auto* s = pot.sobolev())
        check_sobolev(*s, eps_schedule, rep);
    else
        check_sbv(*pot.sbv(), eps_schedule, rep);
    return rep;
}

}  // namespace latgibbs
