#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "proprep/oracle.hpp"
#include "proprep/sim.hpp"
#include "proprep/weights.hpp"

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

PanelSchema one_numeric() {
    PanelSchema schema;
    schema.covariates.push_back({"x", CovariateKind::Numeric, false, {}, ""});
    return schema;
}

PanelDataset load(const std::string& csv, const PanelSchema& schema) {
    std::istringstream in(csv);
    return load_panel(in, schema);
}

PanelDataset sampled_panel(int n, bool censoring, std::uint64_t dgm_seed = 2024,
                           std::uint64_t panel_seed = 1) {
    RandomDgmOptions opt;
    opt.K = 3;
    opt.censoring = censoring;
    return sample_panel(random_dgm(dgm_seed, opt), n, panel_seed);
}

}  // namespace

TEST_CASE("clone cardinality and the K* row rule") {
    const auto panel = load(
        "id,k,x,B,H,C,Y\n"
        "a,1,1,0,0,0,0\na,2,1,0,0,0,0\na,3,1,0,0,0,1\n"
        "b,1,1,0,0,0,0\nb,2,1,0,0,0,0\nb,3,1,0,0,0,0\nb,4,1,0,0,0,0\nb,5,1,0,0,0,0\n",
        one_numeric());
    const auto cloned = clone_dataset(panel, {regime_preset("g0"), regime_preset("g1")});
    CHECK(cloned.n_clone_subjects() == 4);
    CHECK(cloned.n_rows() == 2 * (3 + 5));  // death at k=3 contributes 3 rows per clone
    const auto single = clone_dataset(panel, {regime_preset("g0")});
    CHECK(single.n_rows() == panel.n_records());
}

TEST_CASE("panel without censoring leaves W_C at 1 everywhere") {
    const auto panel = sampled_panel(300, false);
    const auto models = fit_treatment_models(panel, saturated_formulas(), false);
    const auto cloned = clone_dataset(panel, {regime_preset("g0"), regime_preset("g1")});
    const auto table = compute_weights(cloned, models);
    for (std::size_t z = 0; z < 2; ++z)
        for (const auto& subj : table.wc[z])
            for (double w : subj) CHECK(w == 1.0);
}

TEST_CASE("g0 with saturated models gives unit weights") {
    const auto panel = sampled_panel(400, false);
    const auto models = fit_treatment_models(panel, saturated_formulas(), false);
    const auto cloned = clone_dataset(panel, {regime_preset("g0")});
    const auto table = compute_weights(cloned, models);
    for (std::size_t i = 0; i < panel.subjects.size(); ++i) {
        for (std::size_t r = 0; r < table.wb[0][i].size(); ++r) {
            CHECK(table.wb[0][i][r] == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(table.wh[0][i][r] == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    // Mean-one: n^-1 sum W_B W_H = 1 exactly.
    for (int k = 1; k <= panel.horizon; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < panel.subjects.size(); ++i)
            sum += table.wb_at(0, i, k) * table.wh_at(0, i, k);
        CHECK(sum / static_cast<double>(panel.n_subjects()) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("single-interval restriction: treated 0.6, untreated 1.4") {
    // Ten subjects, one covariate level, half treated with B: empirical
    // f_B = 0.5. q = 0.6 gives target 0.3, natural marginal 0.5, so beth=1
    // and alpha = 0.6.
    std::string csv = "id,k,x,B,H,C,Y\n";
    for (int i = 0; i < 10; ++i)
        csv += "s" + std::to_string(i) + ",1,1," + (i < 5 ? "1" : "0") + ",0,0,0\n";
    const auto panel = load(csv, one_numeric());
    const auto models = fit_treatment_models(panel, saturated_formulas(), false);
    const auto cloned = clone_dataset(panel, {custom("shrink", 0.6, 1.0)});
    const auto table = compute_weights(cloned, models);
    CHECK(table.diag[0][0].res.alpha == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(table.diag[0][0].res.beth_B);
    for (std::size_t i = 0; i < 10; ++i) {
        const double expected = panel.subjects[i].records[0].B ? 0.6 : 1.4;
        CHECK(table.wb[0][i][0] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("weighted utilization hits the resolved target on every branch") {
    const auto panel = sampled_panel(500, false);
    const auto models = fit_treatment_models(panel, saturated_formulas(), false);
    const std::vector<RegimeSpec> regimes = {regime_preset("g0"), regime_preset("g1"),
                                             custom("shrink", 0.7, 0.5),
                                             custom("expand", 1.0, 1.3),
                                             custom("flood", 6.0, 6.0)};
    const auto cloned = clone_dataset(panel, regimes);
    const auto table = compute_weights(cloned, models);
    const auto util = utilization_curves(cloned, table);
    for (const auto& row : util) {
        std::size_t z = 0;
        while (regimes[z].label != row.regime) ++z;
        const auto& diag = table.diag[z][static_cast<std::size_t>(row.k) - 1];
        CHECK(std::abs(row.util_B - diag.res.target_B) < 1e-10);
        CHECK(std::abs(row.util_H - diag.res.target_H) < 1e-10);
    }
}

TEST_CASE("with censoring, weighted utilization still hits the targets") {
    const auto panel = sampled_panel(600, true);
    const auto models = fit_treatment_models(panel, saturated_formulas(), true);
    const std::vector<RegimeSpec> regimes = {regime_preset("g0"), custom("shrink", 0.8, 0.6)};
    const auto cloned = clone_dataset(panel, regimes);
    const auto table = compute_weights(cloned, models);
    const auto util = utilization_curves(cloned, table);
    for (const auto& row : util) {
        std::size_t z = regimes[0].label == row.regime ? 0 : 1;
        const auto& diag = table.diag[z][static_cast<std::size_t>(row.k) - 1];
        CHECK(std::abs(row.util_B - diag.res.target_B) < 1e-10);
        CHECK(std::abs(row.util_H - diag.res.target_H) < 1e-10);
    }
}

TEST_CASE("main-text path agrees with the generalized path on g0 and g1") {
    const auto panel = sampled_panel(400, false, 77, 3);
    const auto models = fit_treatment_models(panel, saturated_formulas(), false);
    const auto cloned = clone_dataset(panel, {regime_preset("g0"), regime_preset("g1")});
    const auto general = compute_weights(cloned, models, {.force_main_text = false});
    const auto maintext = compute_weights(cloned, models, {.force_main_text = true});
    for (std::size_t z = 0; z < 2; ++z) {
        for (std::size_t i = 0; i < panel.subjects.size(); ++i) {
            for (std::size_t r = 0; r < general.wb[z][i].size(); ++r) {
                CHECK(std::abs(general.wb[z][i][r] - maintext.wb[z][i][r]) < 1e-12);
                CHECK(std::abs(general.wh[z][i][r] - maintext.wh[z][i][r]) < 1e-12);
            }
        }
    }
}

TEST_CASE("structural rows never enter the treatment fits") {
    const auto panel = load(
        "id,k,x,B,H,C,Y\n"
        "a,1,1,1,0,0,0\na,2,1,0,0,0,0\n"
        "b,1,1,0,0,0,0\nb,2,1,0,1,0,0\n",
        one_numeric());
    const auto models = fit_treatment_models(panel, saturated_formulas(), false);
    // k=2 B-table only contains subject b's history (a is ineligible at k=2).
    const auto key_b2 = TreatmentModels::history_key(panel.subjects[1], 2);
    CHECK(models.sat_B.count(key_b2) == 1);
    CHECK(models.sat_B.at(key_b2) == 0.0);
    std::size_t k2_cells = 0;
    for (const auto& [key, p] : models.sat_B)
        if (key[0] == 2) ++k2_cells;
    CHECK(k2_cells == 1);
}

TEST_CASE("a zero fitted density at an observed treatment is a positivity error") {
    const auto panel = load(
        "id,k,x,B,H,C,Y\n"
        "a,1,1,1,0,0,0\n"
        "b,1,1,0,0,0,0\n",
        one_numeric());
    auto models = fit_treatment_models(panel, saturated_formulas(), false);
    models.sat_B[TreatmentModels::history_key(panel.subjects[0], 1)] = 0.0;
    const auto cloned = clone_dataset(panel, {regime_preset("g0")});
    CHECK_THROWS_AS(compute_weights(cloned, models), PositivityError);
}

TEST_CASE("an invalid intervention density is a constraint-infeasibility error") {
    // Main-text algorithm on an expansion regime: beta = 1.2 scales a 0.9
    // empirical density above 1.
    std::string csv = "id,k,x,B,H,C,Y\n";
    for (int i = 0; i < 10; ++i)
        csv += "s" + std::to_string(i) + ",1,1,0," + (i < 9 ? "1" : "0") + ",0,0\n";
    const auto panel = load(csv, one_numeric());
    const auto models = fit_treatment_models(panel, saturated_formulas(), false);
    const auto cloned = clone_dataset(panel, {custom("expand", 1.0, 1.2)});
    CHECK_THROWS_AS(compute_weights(cloned, models, {.force_main_text = true}),
                    InfeasibleConstraintError);
}

TEST_CASE("diagnostics dump is a parsable per-(z,k) table") {
    const auto panel = sampled_panel(100, false);
    const auto models = fit_treatment_models(panel, saturated_formulas(), false);
    const std::vector<RegimeSpec> regimes = {regime_preset("g0"), regime_preset("g2")};
    const auto cloned = clone_dataset(panel, regimes);
    const auto table = compute_weights(cloned, models);
    const std::string dump = table.dump_diagnostics(regimes);
    std::istringstream in(dump);
    std::string line;
    std::getline(in, line);
    CHECK(line ==
          "regime,k,alpha,beta,aleph_B,aleph_H,beth_B,beth_H,target_B,target_H,pi_B_obs,"
          "pi_H_obs,pi_B_hat,pi_H_hat,pi_R_hat,pi_S_hat");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2 * 3);
}
