#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "latgibbs/free_energy.hpp"
#include "latgibbs/numerics.hpp"
#include "latgibbs/sampler.hpp"

using namespace latgibbs;

namespace {

PotentialFamily nn(std::size_t d, double p, double c) {
    std::vector<DecayWeights::FiniteEntry> entries;
    for (std::size_t i = 0; i < d; ++i) {
        IVec e(d, 0);
        e[i] = 1;
        entries.push_back({e, c});
    }
    SobolevPotential pot;
    pot.p = p;
    pot.weights = DecayWeights::finite(d, entries);
    return PotentialFamily(pot);
}

PotentialFamily zero_potential(std::size_t d) { return nn(d, 2.0, 0.0); }

// single free site at the origin with H = phi^2 through a pinned neighbour
struct SingleSite {
    std::shared_ptr<const LatticeRegion> region;
    HamiltonianSpec h;
    ConstraintSpec cs;

    SingleSite()
        : region(std::make_shared<LatticeRegion>(1.0, 1, Domain({Box{{-0.5}, {0.5}}}))),
          h(nn(1, 2.0, 1.0), region, HamiltonianMode::full) {
        cs.target = Profile::zero(1, 1);
        cs.kappa = std::numeric_limits<double>::infinity();
        cs.mode = ConstraintMode::pinned;
    }
};

}  // namespace

TEST_CASE("constraint membership: hand norm, infinity, and discretized target") {
    SUBCASE("two sites, the adopted normalization") {
        auto region =
            std::make_shared<LatticeRegion>(0.5, 1, Domain({Box{{-0.25}, {0.75}}}));
        REQUIRE(region->n_sites() == 2);
        REQUIRE(region->domain().volume() == doctest::Approx(1.0));
        DiscretizedField f(region);
        *f.value(0) = 1.0;
        *f.value(1) = 1.0;
        // (eps^d/|A|) sum |u - eps phi|^p = (0.5/1) * (0.25 + 0.25) = 0.25
        ConstraintSpec cs{Profile::zero(1, 1), 0.5, 2.0, ConstraintMode::bulk};
        CHECK(inside_constraint(cs, f));
        cs.kappa = 0.2;  // 0.25 > 0.04
        CHECK_FALSE(inside_constraint(cs, f));
    }
    SUBCASE("infinite radius always passes") {
        auto region = std::make_shared<LatticeRegion>(0.5, 1, Domain({Box{{0.0}, {1.0}}}));
        DiscretizedField f(region);
        *f.value(0) = 1e6;
        ConstraintSpec cs{Profile::zero(1, 1), std::numeric_limits<double>::infinity(), 2.0,
                          ConstraintMode::bulk};
        CHECK(inside_constraint(cs, f));
    }
    SUBCASE("the discretized target is inside for reasonable kappa") {
        auto region = std::make_shared<LatticeRegion>(0.25, 1, Domain({Box{{0.0}, {1.0}}}));
        auto u = Profile::sinusoid(1, 0.5, {1.0});
        auto f = discretize(u, region);
        ConstraintSpec cs{u, 0.05, 2.0, ConstraintMode::bulk};
        CHECK(inside_constraint(cs, f));
        auto lin = Profile::linear(1, LinearMap{1, 1, {0.8}});
        auto flin = discretize(lin, region);
        ConstraintSpec cl{lin, 1e-9, 2.0, ConstraintMode::bulk};
        CHECK(inside_constraint(cl, flin));  // exact for linear targets
    }
}

TEST_CASE("single-site Gaussian: moments match quadrature") {
    SingleSite s;
    ChainConfig cfg;
    cfg.steps = 20000;
    cfg.burn_in = 2000;
    cfg.chains = 2;
    cfg.seed = 42;
    SampleRun run = sample(s.h, s.cs, cfg);
    // stationary density ~ exp(-phi^2): mean 0, variance 1/2, <H> = 1/2
    std::vector<double> means;
    for (const auto& ch : run.chains)
        for (const auto& r : ch.records) means.push_back(r.field_mean);
    MeanStderr mu = batch_mean_stderr(means);
    CHECK(std::abs(mu.mean) <= 3.0 * mu.stderr_ + 0.02);
    CHECK(run.mean_h == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::abs(run.mean_h - 0.5) <= 4.0 * run.stderr_h + 0.01);
}

TEST_CASE("pinned band values never move") {
    auto region = std::make_shared<LatticeRegion>(0.25, 1, Domain({Box{{0.0}, {1.0}}}));
    HamiltonianSpec h(nn(1, 2.0, 1.0), region, HamiltonianMode::full);
    auto u = Profile::sinusoid(1, 0.3, {1.0});
    ConstraintSpec cs{u, 0.5, 2.0, ConstraintMode::pinned};
    DiscretizedField init = initial_state(h, cs);
    std::vector<double> band_before(init.raw().begin() + init.n_free(), init.raw().end());
    ChainConfig cfg;
    cfg.steps = 500;
    cfg.burn_in = 100;
    cfg.chains = 1;
    cfg.seed = 9;
    SampleRun run = sample(h, cs, cfg);
    const auto& fin = run.chains[0].final_state;
    std::vector<double> band_after(fin.raw().begin() + fin.n_free(), fin.raw().end());
    CHECK(band_before == band_after);
}

TEST_CASE("every emitted state satisfies the constraint") {
    auto region = std::make_shared<LatticeRegion>(0.25, 1, Domain({Box{{0.0}, {1.0}}}));
    HamiltonianSpec h(nn(1, 2.0, 1.0), region, HamiltonianMode::interior);
    auto u = Profile::zero(1, 1);
    ConstraintSpec cs{u, 0.3, 2.0, ConstraintMode::bulk};
    int checked = 0;
    StateObserver obs = [&](int, const DiscretizedField& f) {
        ++checked;
        CHECK(inside_constraint(cs, f));
    };
    ChainConfig cfg;
    cfg.steps = 300;
    cfg.burn_in = 50;
    cfg.chains = 1;
    cfg.thin = 10;
    cfg.seed = 17;
    sample(h, cs, cfg, nullptr, 1.0, 1, nullptr, &obs);
    CHECK(checked == 25);
}

TEST_CASE("autotune behaviour") {
    auto region = std::make_shared<LatticeRegion>(0.5, 1, Domain({Box{{0.0}, {1.0}}}));
    SUBCASE("flat energy accepts everything: maximum pilot scale") {
        HamiltonianSpec h(zero_potential(1), region, HamiltonianMode::interior);
        ConstraintSpec cs{Profile::zero(1, 1), std::numeric_limits<double>::infinity(), 2.0,
                          ConstraintMode::bulk};
        std::vector<std::string> warn;
        double scale = autotune(h, cs, 3, nullptr, 1.0, &warn);
        CHECK(scale == 8.0);  // top of the pilot grid
        CHECK_FALSE(warn.empty());
    }
    SUBCASE("steeper energies tune to smaller scales") {
        HamiltonianSpec mild(nn(1, 2.0, 1.0), region, HamiltonianMode::full);
        HamiltonianSpec steep(nn(1, 2.0, 100.0), region, HamiltonianMode::full);
        ConstraintSpec cs{Profile::zero(1, 1), 5.0, 2.0, ConstraintMode::pinned};
        double s_mild = autotune(mild, cs, 3);
        double s_steep = autotune(steep, cs, 3);
        CHECK(s_steep < s_mild);
    }
    SUBCASE("deterministic in the seed") {
        HamiltonianSpec h(nn(1, 2.0, 1.0), region, HamiltonianMode::full);
        ConstraintSpec cs{Profile::zero(1, 1), 2.0, 2.0, ConstraintMode::pinned};
        CHECK(autotune(h, cs, 11) == autotune(h, cs, 11));
    }
}

TEST_CASE("bitwise reproducibility across thread counts") {
    auto region = std::make_shared<LatticeRegion>(0.25, 1, Domain({Box{{0.0}, {1.0}}}));
    HamiltonianSpec h(nn(1, 2.0, 1.0), region, HamiltonianMode::interior);
    ConstraintSpec cs{Profile::zero(1, 1), 0.5, 2.0, ConstraintMode::bulk};
    ChainConfig cfg;
    cfg.steps = 400;
    cfg.burn_in = 100;
    cfg.chains = 4;
    cfg.seed = 123;
    SampleRun a = sample(h, cs, cfg, nullptr, 1.0, 1);
    SampleRun b = sample(h, cs, cfg, nullptr, 1.0, 4);
    REQUIRE(a.chains.size() == b.chains.size());
    CHECK(a.mean_h == b.mean_h);
    CHECK(a.stderr_h == b.stderr_h);
    for (std::size_t c = 0; c < a.chains.size(); ++c) {
        REQUIRE(a.chains[c].records.size() == b.chains[c].records.size());
        for (std::size_t i = 0; i < a.chains[c].records.size(); ++i) {
            CHECK(a.chains[c].records[i].h_phys == b.chains[c].records[i].h_phys);
            CHECK(a.chains[c].records[i].field_mean == b.chains[c].records[i].field_mean);
        }
    }
}

TEST_CASE("running deviation sum matches recomputation after many moves") {
    auto region = std::make_shared<LatticeRegion>(0.2, 1, Domain({Box{{0.0}, {1.0}}}));
    HamiltonianSpec h(nn(1, 2.0, 1.0), region, HamiltonianMode::interior);
    auto u = Profile::sinusoid(1, 0.4, {1.0});
    ConstraintSpec cs{u, 0.6, 2.0, ConstraintMode::bulk};
    ChainConfig cfg;
    cfg.steps = 5000;  // 6 sites -> 30k site moves plus shifts
    cfg.burn_in = 0;
    cfg.chains = 1;
    cfg.seed = 31;
    SampleRun run = sample(h, cs, cfg);
    const auto& fin = run.chains[0].final_state;
    ConstraintState st(cs, region, {});
    double fresh = st.deviation_sum(fin);
    // the final state is inside, and an independent recomputation agrees
    CHECK(inside_constraint(cs, fin));
    CHECK(fresh <= st.budget() * (1.0 + 1e-8));
}

TEST_CASE("two-site histogram matches quadrature cell probabilities") {
    // two free sites with pinned exterior ends
    auto region = std::make_shared<LatticeRegion>(1.0, 1, Domain({Box{{0.0}, {1.0}}}));
    REQUIRE(region->n_sites() == 2);
    HamiltonianSpec h(nn(1, 2.0, 1.0), region, HamiltonianMode::full);
    ConstraintSpec cs{Profile::zero(1, 1), 1.2, 2.0, ConstraintMode::pinned};

    // exact cell probabilities on a coarse grid by dense midpoint quadrature
    ConstraintState st(cs, region, h.required_band());
    DiscretizedField work = initial_state(h, cs);
    const double lo = -2.0, hi = 2.0;
    const int cells = 4, sub = 220;
    std::vector<double> mass(cells * cells, 0.0);
    double total = 0.0;
    const double step = (hi - lo) / (cells * sub);
    for (int i = 0; i < cells * sub; ++i)
        for (int j = 0; j < cells * sub; ++j) {
            double x = lo + (i + 0.5) * step;
            double y = lo + (j + 0.5) * step;
            *work.value(0) = x;
            *work.value(1) = y;
            if (!st.inside(work)) continue;
            double w = std::exp(-h.energy(work));
            mass[(i / sub) * cells + (j / sub)] += w;
            total += w;
        }
    for (auto& m : mass) m /= total;

    // empirical histogram
    ChainConfig cfg;
    cfg.steps = 60000;
    cfg.burn_in = 4000;
    cfg.chains = 1;
    cfg.thin = 4;
    cfg.seed = 2024;
    std::vector<long long> counts(cells * cells, 0);
    long long n = 0;
    StateObserver obs = [&](int, const DiscretizedField& f) {
        double x = *f.value(0), y = *f.value(1);
        if (x < lo || x >= hi || y < lo || y >= hi) return;
        int i = int((x - lo) / (hi - lo) * cells);
        int j = int((y - lo) / (hi - lo) * cells);
        ++counts[i * cells + j];
        ++n;
    };
    sample(h, cs, cfg, nullptr, 1.0, 1, nullptr, &obs);
    REQUIRE(n > 10000);
    // thinned sweeps are still correlated; inflate the multinomial error
    const double inflate = 3.0;
    for (int c = 0; c < cells * cells; ++c) {
        double p = mass[c];
        double phat = double(counts[c]) / double(n);
        double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / double(n)) * inflate;
        INFO("cell ", c, " p=", p, " phat=", phat);
        CHECK(std::abs(phat - p) <= 3.0 * sigma + 0.004);
    }
}
