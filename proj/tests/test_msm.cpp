#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "proprep/msm.hpp"
#include "proprep/oracle.hpp"
#include "proprep/pipeline.hpp"
#include "proprep/sim.hpp"

using namespace proprep;

namespace {

RegimeSpec custom(const std::string& label, double q, double m) {
    RegimeSpec r;
    r.label = label;
    r.q = {q};
    r.m = {m};
    return r;
}

TreatmentFormulas saturated_formulas() {
    TreatmentFormulas f;
    f.phi_B.saturated = true;
    f.phi_H.saturated = true;
    f.phi_C.saturated = true;
    return f;
}

FormulaSpec saturated_gamma() {
    FormulaSpec g;
    g.saturated = true;
    return g;
}

FormulaSpec parametric_gamma() {
    FormulaSpec g;
    g.terms.push_back({TermKind::TimeLinear, "", {}, {}});
    g.terms.push_back({TermKind::Regime, "", {}, {}});
    g.terms.push_back({TermKind::RegimeByTime, "", {}, {}});
    return g;
}

struct Fitted {
    ClonedPanel cloned;
    WeightTable weights;
};

Fitted weighted_clone(const PanelDataset& panel, std::vector<RegimeSpec> regimes) {
    const auto models = fit_treatment_models(panel, saturated_formulas(), false);
    Fitted out{clone_dataset(panel, std::move(regimes)), {}};
    out.weights = compute_weights(out.cloned, models);
    return out;
}

PanelDataset sampled_panel(int n, std::uint64_t dgm_seed = 2024, std::uint64_t panel_seed = 1) {
    RandomDgmOptions opt;
    opt.K = 3;
    opt.censoring = false;
    return sample_panel(random_dgm(dgm_seed, opt), n, panel_seed);
}

}  // namespace

TEST_CASE("two identical regimes give exactly zero Z coefficients") {
    const auto panel = sampled_panel(500);
    auto fitted = weighted_clone(panel, {regime_preset("g0"), custom("g0twin", 1.0, 1.0)});
    const auto fit =
        fit_msm(fitted.cloned, fitted.weights, parametric_gamma(), {});
    REQUIRE_FALSE(fit.saturated);
    // Swapping the clone labels relabels Z; the unique MLE must be invariant,
    // so the Z terms vanish (up to solver tolerance).
    for (std::size_t c = 0; c < fit.gamma.columns.size(); ++c) {
        if (fit.gamma.columns[c].rfind("Z=", 0) == 0)
            CHECK(std::abs(fit.glm->coef[static_cast<int>(c)]) < 1e-6);
    }
}

TEST_CASE("null DGM: Z coefficient within 3 SE of zero under distinct regimes") {
    // Treatment does not affect the death hazard, so g0 and g1 share a risk
    // curve and the MSM's Z terms estimate zero.
    DiscreteDGM dgm;
    dgm.K = 2;
    dgm.l_levels = {2, 2};
    dgm.set_p_l(1, {}, {}, {0.5, 0.5});
    for (int l1 : {0, 1}) {
        dgm.set_p_b(1, {l1}, 0.25 + 0.1 * l1);
        dgm.set_p_h(1, {l1}, 0.2);
        for (TreatState t : {TreatState{}, TreatState{1, 1}, TreatState{2, 1}}) {
            dgm.set_p_y(1, {l1}, t, 0.15 + 0.05 * l1);
            dgm.set_p_l(2, {l1}, t, {0.6, 0.4});
        }
        for (int l2 : {0, 1}) {
            dgm.set_p_b(2, {l1, l2}, 0.3);
            dgm.set_p_h(2, {l1, l2}, 0.15);
            for (TreatState t : {TreatState{}, TreatState{1, 1}, TreatState{2, 1},
                                 TreatState{1, 2}, TreatState{2, 2}})
                dgm.set_p_y(2, {l1, l2}, t, 0.2 + 0.04 * l2);
        }
    }
    dgm.validate();
    const auto panel = sample_panel(dgm, 20000, 5);
    auto fitted = weighted_clone(panel, {regime_preset("g0"), regime_preset("g1")});
    FormulaSpec gamma;
    gamma.terms.push_back({TermKind::TimeLinear, "", {}, {}});
    gamma.terms.push_back({TermKind::Regime, "", {}, {}});
    const auto fit = fit_msm(fitted.cloned, fitted.weights, gamma, {});
    for (std::size_t c = 0; c < fit.gamma.columns.size(); ++c) {
        if (fit.gamma.columns[c].rfind("Z=", 0) == 0) {
            const double coef = fit.glm->coef[static_cast<int>(c)];
            const double se = fit.glm->se(static_cast<int>(c));
            CHECK(std::abs(coef) < 3.0 * se);
        }
    }
}

TEST_CASE("saturated gamma reproduces the weighted empirical hazards exactly") {
    const auto panel = sampled_panel(400, 11, 2);
    auto fitted = weighted_clone(panel, {regime_preset("g0"), regime_preset("g1")});
    const auto fit = fit_msm(fitted.cloned, fitted.weights, saturated_gamma(), {});
    REQUIRE(fit.saturated);
    // Direct weighted-ratio recomputation per (z, k).
    for (std::size_t z = 0; z < 2; ++z) {
        for (int k = 1; k <= panel.horizon; ++k) {
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < panel.subjects.size(); ++i) {
                const auto& subj = panel.subjects[i];
                if (subj.records.size() < static_cast<std::size_t>(k)) continue;
                const auto& rec = subj.records[static_cast<std::size_t>(k) - 1];
                const double w = fitted.weights.wb[z][i][k - 1] * fitted.weights.wh[z][i][k - 1];
                den += w;
                if (rec.Y) num += w;
            }
            CHECK(fit.hazard[z][k - 1] == doctest::Approx(num / den).epsilon(1e-13));
        }
    }
}

TEST_CASE("transplant-style gamma fits without error on synthetic data") {
    ParametricDGM dgm;
    dgm.K = 8;
    dgm.baselines = {{"age", ParametricDGM::Baseline::Dist::Normal, 0.0, 1.0}};
    dgm.treat_B = {-1.6, 0.02, {0.2, 0.1}, 0.0, 0.0};
    dgm.treat_H = {-2.0, 0.01, {0.1, 0.1}, 0.0, 0.0};
    dgm.death = {-2.0, 0.02, {0.3, 0.4}, -0.8, -0.3};
    const auto panel = sample_panel(dgm, 4000, 9);
    TreatmentFormulas formulas;
    for (FormulaSpec* f : {&formulas.phi_B, &formulas.phi_H}) {
        f->terms.push_back({TermKind::TimeLinear, "", {}, {}});
        f->terms.push_back({TermKind::Covariate, "age", {}, {}});
        f->terms.push_back({TermKind::Covariate, "severity", {}, {}});
    }
    const auto models = fit_treatment_models(panel, formulas, false);
    auto cloned = clone_dataset(panel, {regime_preset("g0"), regime_preset("g1"),
                                        regime_preset("g2"), regime_preset("g3")});
    const auto weights = compute_weights(cloned, models);
    FormulaSpec gamma;
    SplineSpec gk;
    gk.internal_knots = {2, 4};
    gk.boundary_knots = {1, 8};
    gamma.terms.push_back({TermKind::TimeSpline, "", gk, {}});
    gamma.terms.push_back({TermKind::Regime, "", {}, {}});
    gamma.terms.push_back({TermKind::RegimeByTime, "", {}, {}});
    const auto fit = fit_msm(cloned, weights, gamma, {});
    CHECK(fit.glm->converged);
    const auto curve = plugin_risk(fit, cloned, 0, 8);
    for (double r : curve.risk) {
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
    }
}

TEST_CASE("plug-in risk identities") {
    FittedMSM fit;
    fit.saturated = true;
    fit.n_regimes = 1;
    fit.K = 5;
    ClonedPanel cloned;
    cloned.regimes = {regime_preset("g0")};
    SUBCASE("constant hazard h gives 1 - (1-h)^K") {
        fit.hazard = {{0.2, 0.2, 0.2, 0.2, 0.2}};
        fit.hazard_var = {{0, 0, 0, 0, 0}};
        fit.alive_mass = {{1, 1, 1, 1, 1}};
        const auto curve = plugin_risk(fit, cloned, 0, 5);
        for (int k = 1; k <= 5; ++k)
            CHECK(curve.risk[k - 1] ==
                  doctest::Approx(1.0 - std::pow(0.8, k)).epsilon(1e-14));
    }
    SUBCASE("zero hazard gives zero risk") {
        fit.hazard = {{0, 0, 0, 0, 0}};
        fit.hazard_var = {{0, 0, 0, 0, 0}};
        fit.alive_mass = {{1, 1, 1, 1, 1}};
        const auto curve = plugin_risk(fit, cloned, 0, 5);
        for (double r : curve.risk) CHECK(r == 0.0);
    }
}

TEST_CASE("with V empty all subjects share one curve") {
    const auto panel = sampled_panel(200, 3, 4);
    auto fitted = weighted_clone(panel, {regime_preset("g0")});
    FormulaSpec gamma;
    gamma.terms.push_back({TermKind::TimeLinear, "", {}, {}});
    const auto fit = fit_msm(fitted.cloned, fitted.weights, gamma, {});
    // Per-subject curves are identical, so duplicating a subject cannot move
    // the average: compare against a single-subject panel's curve.
    const auto curve = plugin_risk(fit, fitted.cloned, 0, panel.horizon);
    ClonedPanel one;
    one.panel.schema = panel.schema;
    one.panel.horizon = panel.horizon;
    one.panel.subjects = {panel.subjects[0]};
    one.regimes = fitted.cloned.regimes;
    const auto single = plugin_risk(fit, one, 0, panel.horizon);
    for (int k = 0; k < panel.horizon; ++k)
        CHECK(curve.risk[k] == doctest::Approx(single.risk[k]).epsilon(1e-14));
}

TEST_CASE("plug-in risk is invariant to subject order and panel duplication") {
    const auto panel = sampled_panel(150, 8, 6);
    auto fitted = weighted_clone(panel, {regime_preset("g0"), regime_preset("g1")});
    const auto fit = fit_msm(fitted.cloned, fitted.weights, parametric_gamma(), {});
    const auto base = plugin_risk(fit, fitted.cloned, 1, panel.horizon);

    ClonedPanel reversed = fitted.cloned;
    std::reverse(reversed.panel.subjects.begin(), reversed.panel.subjects.end());
    const auto rev = plugin_risk(fit, reversed, 1, panel.horizon);

    ClonedPanel doubled = fitted.cloned;
    for (const auto& subj : fitted.cloned.panel.subjects)
        doubled.panel.subjects.push_back(subj);
    const auto dup = plugin_risk(fit, doubled, 1, panel.horizon);

    for (int k = 0; k < panel.horizon; ++k) {
        CHECK(base.risk[k] == doctest::Approx(rev.risk[k]).epsilon(1e-13));
        CHECK(base.risk[k] == doctest::Approx(dup.risk[k]).epsilon(1e-13));
    }
}

TEST_CASE("regime terms with a single regime are rejected") {
    const auto panel = sampled_panel(100, 5, 5);
    auto fitted = weighted_clone(panel, {regime_preset("g0")});
    CHECK_THROWS_WITH_AS(fit_msm(fitted.cloned, fitted.weights, parametric_gamma(), {}),
                         doctest::Contains("only one regime"), ConfigError);
}

TEST_CASE("gamma referencing a covariate outside V is rejected") {
    const auto panel = sampled_panel(100, 5, 5);
    auto fitted = weighted_clone(panel, {regime_preset("g0"), regime_preset("g1")});
    FormulaSpec gamma;
    gamma.terms.push_back({TermKind::Covariate, "L", {}, {}});
    CHECK_THROWS_WITH_AS(fit_msm(fitted.cloned, fitted.weights, gamma, {}),
                         doctest::Contains("not in the declared V"), ConfigError);
}

TEST_CASE("risk difference arithmetic on stored numbers") {
    RiskCurve a, b;
    a.risk = {0.649};
    b.risk = {0.593};
    CHECK(risk_difference_pp(a, b, 1) == doctest::Approx(5.6).epsilon(1e-12));
}

TEST_CASE("utilization series under the presets") {
    const auto panel = sampled_panel(800, 2025, 9);
    auto fitted = weighted_clone(panel, {regime_preset("g0"), regime_preset("g1"),
                                         regime_preset("g2")});
    const auto util = utilization_curves(fitted.cloned, fitted.weights);
    std::map<std::pair<std::string, int>, UtilizationRow> by_key;
    for (const auto& row : util) by_key[{row.regime, row.k}] = row;
    for (int k = 1; k <= panel.horizon; ++k) {
        // Superior series identical across regimes (all target the factual level).
        CHECK(std::abs(by_key[{"g0", k}].util_B - by_key[{"g1", k}].util_B) < 1e-12);
        CHECK(std::abs(by_key[{"g0", k}].util_B - by_key[{"g2", k}].util_B) < 1e-12);
        // g1 inferior series is identically zero.
        CHECK(by_key[{"g1", k}].util_H == 0.0);
        // g2 inferior series is 1.25x the factual level until eligibility binds.
        const auto& diag = fitted.weights.diag[2][static_cast<std::size_t>(k) - 1];
        if (diag.res.aleph_H)
            CHECK(std::abs(by_key[{"g2", k}].util_H - 1.25 * diag.pi_H_obs) < 1e-10);
        else
            CHECK(std::abs(by_key[{"g2", k}].util_H - diag.pi_S_hat) < 1e-10);
    }
}
