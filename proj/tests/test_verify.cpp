#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "latgibbs/verify.hpp"

using namespace latgibbs;

namespace {

VerifyOptions quick_opts() {
    VerifyOptions opt;
    opt.seed = 2026;
    opt.quick = true;
    opt.zigzag_fields = 120;
    return opt;
}

}  // namespace

TEST_CASE("zig-zag battery: certified constants dominate, ratios reported") {
    auto results = check_zigzag(quick_opts());
    REQUIRE(results.size() == 3);
    for (const auto& r : results) {
        INFO(r.name, " note=", r.note);
        CHECK(r.status == "pass");
    }
    const auto& sob = results[0];
    CHECK(sob.witness.at("empirical_sup_ratio") > 0.0);
    CHECK(sob.witness.at("empirical_sup_ratio") <= sob.witness.at("certified_constant"));
    const auto& unit = results[2];
    CHECK(unit.witness.at("empirical_sup_ratio") <= 1.0 + 1e-12);
}

TEST_CASE("free-energy inequality battery") {
    auto results = check_free_energy_inequalities(quick_opts());
    for (const auto& r : results) {
        INFO(r.name, " instance=", r.instance, " note=", r.note);
        CHECK(r.status == "pass");
    }
}

TEST_CASE("tightness battery") {
    auto results = check_tightness(quick_opts());
    for (const auto& r : results) {
        INFO(r.name, " D=", r.witness.count("fitted_D") ? r.witness.at("fitted_D") : 0.0);
        CHECK(r.status == "pass");
    }
}

TEST_CASE("measure-property battery") {
    auto results = check_measure_property(quick_opts());
    for (const auto& r : results) {
        INFO(r.name, " note=", r.note);
        CHECK(r.status != "fail");
    }
}

TEST_CASE("battery summary: counting, json, determinism") {
    VerifyOptions opt = quick_opts();
    opt.zigzag_fields = 60;
    VerifySummary a = run_battery(opt);
    CHECK(a.n_fail == 0);
    CHECK(a.inconclusive_rate < 0.05);
    CHECK(a.release_ok);
    CHECK(int(a.checks.size()) == a.n_pass + a.n_fail + a.n_inconclusive);
    std::string js = summary_to_json(a);
    auto parsed = nlohmann::json::parse(js);
    CHECK(parsed.at("pass").get<int>() == a.n_pass);
    CHECK(parsed.at("checks").size() == a.checks.size());
    for (const auto& c : parsed.at("checks")) {
        CHECK(c.contains("name"));
        CHECK(c.contains("status"));
        CHECK(c.contains("seed"));
        CHECK(c.contains("witness"));
    }
    VerifySummary b = run_battery(opt);
    CHECK(summary_to_json(a) == summary_to_json(b));
}
