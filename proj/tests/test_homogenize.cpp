#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "latgibbs/homogenize.hpp"

using namespace latgibbs;

namespace {

const double kHalfLogPi = 0.5 * std::log(std::acos(-1.0));

CellProblem gaussian_problem(double M, std::vector<double> eps, std::vector<double> kappas) {
    CellProblem p;
    p.M = LinearMap{1, 1, {M}};
    p.cell = Box{{0.0}, {1.0}};
    p.potential.p = 2.0;
    // +-e1 at half weight: each interior bond totals t^2, both ends anchored
    p.potential.weights = DecayWeights::finite(1, {{IVec{1}, 0.5}, {IVec{-1}, 0.5}});
    p.eps_schedule = std::move(eps);
    p.kappa_schedule = std::move(kappas);
    p.chain_template.steps = 3000;
    p.chain_template.burn_in = 600;
    p.chain_template.chains = 2;
    p.ti.pref_samples = 8000;
    p.seed = 4242;
    return p;
}

}  // namespace

TEST_CASE("tilted-moment oracle: Gaussian closed forms") {
    auto sq = [](double t) { return t * t; };
    CHECK(legendre_oracle_1d(sq, 0.0) == doctest::Approx(-kHalfLogPi).epsilon(1e-9));
    CHECK(legendre_oracle_1d(sq, 0.0) == doctest::Approx(-0.5723649429247001).epsilon(1e-9));
    CHECK(legendre_oracle_1d(sq, 1.0) == doctest::Approx(1.0 - kHalfLogPi).epsilon(1e-9));
    CHECK(legendre_oracle_1d(sq, 1.0) == doctest::Approx(0.4276350570752999).epsilon(1e-9));
    CHECK(legendre_oracle_1d(sq, 0.5) == doctest::Approx(0.25 - kHalfLogPi).epsilon(1e-9));
}

TEST_CASE("tilted-moment oracle: symmetry and convexity for even potentials") {
    auto quart = [](double t) { return t * t * t * t; };
    for (double M : {0.3, 0.8, 1.4})
        CHECK(legendre_oracle_1d(quart, M) ==
              doctest::Approx(legendre_oracle_1d(quart, -M)).epsilon(1e-8));
    for (double M : {0.2, 0.5, 0.9}) {
        double left = legendre_oracle_1d(quart, M - 0.2);
        double midv = legendre_oracle_1d(quart, M);
        double right = legendre_oracle_1d(quart, M + 0.2);
        CHECK(midv <= 0.5 * (left + right) + 1e-9);
    }
    auto slow = [](double t) { return std::sqrt(std::abs(t)); };
    CHECK_THROWS_AS(legendre_oracle_1d(slow, 0.0), std::runtime_error);
}

TEST_CASE("convolution oracle: single bond recovers the potential value") {
    auto sq = [](double t) { return t * t; };
    ConvolutionOracle one = convolution_oracle_1d(sq, 0.7, 1);
    CHECK(one.raw == doctest::Approx(0.49).epsilon(2e-3));
    CHECK(one.grid_error < 5e-3);
}

TEST_CASE("oracle cross-validation at N = 64") {
    auto sq = [](double t) { return t * t; };
    auto quart = [](double t) { return t * t * t * t; };
    SUBCASE("quadratic") {
        double leg = legendre_oracle_1d(sq, 1.0);
        ConvolutionOracle conv = convolution_oracle_1d(sq, 1.0, 64);
        INFO("legendre=", leg, " raw=", conv.raw, " debiased=", conv.debiased);
        CHECK(std::abs(conv.debiased - leg) / std::abs(leg) < 0.02);
        // the raw value carries the local-CLT prefactor log(2 pi N s^2)/(2N)
        double expect_gap = std::log(2.0 * std::acos(-1.0) * 64.0 * 0.5) / 128.0;
        CHECK(conv.raw - leg == doctest::Approx(expect_gap).epsilon(0.05));
    }
    SUBCASE("quartic") {
        double leg = legendre_oracle_1d(quart, 1.0);
        ConvolutionOracle conv = convolution_oracle_1d(quart, 1.0, 64);
        INFO("legendre=", leg, " raw=", conv.raw, " debiased=", conv.debiased);
        CHECK(std::abs(conv.debiased - leg) / std::abs(leg) < 0.02);
    }
}

TEST_CASE("convolution gap to the limit shrinks monotonically as N doubles") {
    auto sq = [](double t) { return t * t; };
    double leg = legendre_oracle_1d(sq, 0.5);
    double prev = 1e300;
    for (int N : {64, 128, 256, 512}) {
        ConvolutionOracle conv = convolution_oracle_1d(sq, 0.5, N);
        double gap = std::abs(conv.raw - leg);
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("cell estimates: translation by one coefficient period is bitwise") {
    CellProblem p = gaussian_problem(0.5, {}, {});
    p.potential.coefficient.amp = 0.7;
    p.potential.coefficient.period = 2;
    p.chain_template.steps = 600;
    p.chain_template.burn_in = 150;
    const double eps = 1.0 / 16.0;
    FreeEnergyEstimate a = cell_free_energy(p, eps, 0.6);
    CellProblem shifted = p;
    shifted.cell = Box{{2.0 * eps}, {1.0 + 2.0 * eps}};  // one full period
    FreeEnergyEstimate b = cell_free_energy(shifted, eps, 0.6);
    CHECK(a.value == b.value);
    CHECK(a.stderr_ == b.stderr_);
    // half-period shifts see a different coefficient phase
    CellProblem off = p;
    off.cell = Box{{eps}, {1.0 + eps}};
    FreeEnergyEstimate c = cell_free_energy(off, eps, 0.6);
    CHECK(c.value != a.value);
}

TEST_CASE("cell estimates pick exact quadrature at desk size") {
    CellProblem p = gaussian_problem(0.8, {}, {});
    FreeEnergyEstimate est = cell_free_energy(p, 0.5, 0.7);
    CHECK(est.method == "exact_quadrature");
    CHECK(std::isfinite(est.value));
}

TEST_CASE("commensurability and geometry guards") {
    CellProblem p = gaussian_problem(0.5, {}, {});
    p.potential.coefficient.amp = 0.3;
    p.potential.coefficient.period = 3;
    CHECK_THROWS_AS(cell_free_energy(p, 1.0 / 16.0, 0.5), std::invalid_argument);
    CellProblem q = gaussian_problem(0.5, {}, {});
    q.cell = Box{{0.3}, {1.3}};
    CHECK_THROWS_AS(cell_free_energy(q, 0.25, 0.5), std::invalid_argument);
}

TEST_CASE("f_hom: extrapolated Gaussian cell matches the limit oracle") {
    CellProblem p =
        gaussian_problem(0.5, {1.0 / 32, 1.0 / 64, 1.0 / 128}, {0.7, 0.35});
    p.chain_template.steps = 2000;
    p.chain_template.burn_in = 500;
    FHomResult res = f_hom_estimate(p);
    REQUIRE(res.per_kappa.size() == 2);
    double target = 0.25 - kHalfLogPi;
    INFO("value=", res.value, " err=", res.err, " target=", target);
    CHECK(std::abs(res.value - target) <= std::max(3.0 * res.err, 0.05 * std::abs(target)));
    CHECK(res.kappa_independent);
}

TEST_CASE("f_hom estimates are even in the boundary slope") {
    CellProblem p = gaussian_problem(0.5, {1.0 / 8, 1.0 / 16, 1.0 / 32}, {0.7});
    FHomResult pos = f_hom_estimate(p);
    CellProblem m = gaussian_problem(-0.5, {1.0 / 8, 1.0 / 16, 1.0 / 32}, {0.7});
    m.seed = 777;
    FHomResult neg = f_hom_estimate(m);
    double comb = 3.0 * std::sqrt(pos.err * pos.err + neg.err * neg.err);
    CHECK(std::abs(neg.value - pos.value) <= comb + 0.03);
}

TEST_CASE("extrapolation fit recovers a known order") {
    std::vector<double> eps{0.25, 0.125, 0.0625};
    std::vector<double> vals, errs;
    for (double e : eps) {
        vals.push_back(1.7 + 0.8 * std::pow(e, 1.3));
        errs.push_back(1e-4);
    }
    ExtrapolationFit fit = extrapolate_eps(eps, vals, errs);
    CHECK(fit.ok);
    CHECK(fit.limit == doctest::Approx(1.7).epsilon(1e-6));
    CHECK(fit.order == doctest::Approx(1.3).epsilon(1e-3));
    CHECK(fit.err < 1e-3);
}
