#include "proprep/checks.hpp"

#include <cmath>

#include "proprep/oracle.hpp"
#include "proprep/util.hpp"

namespace proprep {

namespace {

RegimeSpec custom_regime(const std::string& label, double q, double m) {
    RegimeSpec r;
    r.label = label;
    r.q = {q};
    r.m = {m};
    return r;
}

DiscreteDGM seeded_dgm(std::uint64_t seed, int index) {
    RandomDgmOptions opt;
    opt.K = 1 + index % 3;
    opt.l_levels = {2, 2, 2};
    opt.censoring = index % 2 == 1;
    return random_dgm(seed + static_cast<std::uint64_t>(index), opt);
}

std::vector<RegimeSpec> suite_regimes(std::uint64_t seed, int index) {
    const double q = 2.0 * counter_u01(seed, 77, static_cast<std::uint64_t>(index), 0);
    const double m = 2.0 * counter_u01(seed, 78, static_cast<std::uint64_t>(index), 0);
    return {regime_preset("g0"), regime_preset("g1"), custom_regime("rand_qm", q, m)};
}

}  // namespace

SuiteResult suite_representation_equivalence(const ValidateOptions& options) {
    SuiteResult result;
    result.name = "representation-equivalence";
    double worst = 0.0;
    for (int d = 0; d < options.n_dgms; ++d) {
        const DiscreteDGM dgm = seeded_dgm(options.seed, d);
        for (const RegimeSpec& regime : suite_regimes(options.seed, d)) {
            const OracleResult forward = gformula_risk(dgm, regime, dgm.K, options.state_bound);
            const VPartition v = d % 3 == 0 ? VPartition::FullL1 : VPartition::Empty;
            const std::vector<double> repr =
                gformula_hazard_repr(dgm, regime, dgm.K, v, options.state_bound);
            for (int k = 0; k < dgm.K; ++k) {
                const double err = std::abs(forward.risk[k] - repr[k]);
                worst = std::max(worst, err);
                if (err >= options.equivalence_tol) {
                    result.detail = "dgm " + std::to_string(d) + ", regime " + regime.label +
                                    ", k=" + std::to_string(k + 1) + ": |risk - repr| = " +
                                    format_double(err);
                    return result;
                }
            }
        }
    }
    result.passed = true;
    result.detail = std::to_string(options.n_dgms) + " DGMs x 3 regimes, worst gap " +
                    format_double(worst);
    return result;
}

SuiteResult suite_constraint_satisfaction(const ValidateOptions& options) {
    SuiteResult result;
    result.name = "constraint-satisfaction";
    // Fixtures chosen to realize every branch at least once: scale-down
    // (aleph=1, beth=1), abolition (beth=1, target 0), scale-up (aleph=1,
    // beth=0), treat-all (aleph=0, beth=0), plus the identity regime.
    const std::vector<RegimeSpec> regimes = {
        regime_preset("g0"),         regime_preset("g1"),
        custom_regime("half", 0.7, 0.5), custom_regime("expand", 1.0, 1.4),
        custom_regime("flood", 50.0, 2.0)};
    bool seen_scale_down = false, seen_abolish = false, seen_scale_up = false,
         seen_treat_all = false;
    double worst = 0.0;
    for (int d = 0; d < 8; ++d) {
        const DiscreteDGM dgm = seeded_dgm(options.seed + 101, d);
        for (const RegimeSpec& regime : regimes) {
            const auto rows = check_constraints(dgm, regime, dgm.K, options.state_bound);
            for (const auto& row : rows) {
                const double err_b = std::abs(row.weighted_B - row.target_B);
                const double err_h = std::abs(row.weighted_H - row.target_H);
                worst = std::max({worst, err_b, err_h});
                if (err_b >= options.constraint_tol || err_h >= options.constraint_tol) {
                    result.detail = "dgm " + std::to_string(d) + ", regime " + regime.label +
                                    ", k=" + std::to_string(row.k) + ": |E[wB]-target|=" +
                                    format_double(err_b) + ", |E[wH]-target|=" +
                                    format_double(err_h);
                    return result;
                }
                seen_scale_down = seen_scale_down ||
                                  (row.aleph_H && row.beth_H && row.target_H > 0.0);
                seen_abolish = seen_abolish || (row.beth_H && row.target_H == 0.0);
                seen_scale_up = seen_scale_up || (row.aleph_H && !row.beth_H);
                seen_treat_all = seen_treat_all || !row.aleph_B || !row.aleph_H;
            }
        }
    }
    if (!(seen_scale_down && seen_abolish && seen_scale_up && seen_treat_all)) {
        result.detail = "not every (aleph, beth) branch was exercised";
        return result;
    }
    result.passed = true;
    result.detail = "all branches exercised, worst gap " + format_double(worst);
    return result;
}

SuiteResult suite_lemma_range(const ValidateOptions& options) {
    SuiteResult result;
    result.name = "lemma1-range";
    for (int d = 0; d < options.n_dgms; ++d) {
        const DiscreteDGM dgm = seeded_dgm(options.seed + 202, d);
        // Shrinking regimes: targets never exceed factual utilization.
        const double q = counter_u01(options.seed, 81, static_cast<std::uint64_t>(d), 0);
        const double m = counter_u01(options.seed, 82, static_cast<std::uint64_t>(d), 0);
        for (const RegimeSpec& regime :
             {regime_preset("g0"), regime_preset("g1"), custom_regime("shrink", q, m)}) {
            const OracleResult res = gformula_risk(dgm, regime, dgm.K, options.state_bound);
            for (const auto& info : res.intervals) {
                if (info.res.alpha < 0.0 || info.res.alpha > 1.0 + 1e-12 || info.res.beta < 0.0 ||
                    info.res.beta > 1.0 + 1e-12) {
                    result.detail = "dgm " + std::to_string(d) + ", regime " + regime.label +
                                    ": alpha=" + format_double(info.res.alpha) + ", beta=" +
                                    format_double(info.res.beta) + " outside [0,1]";
                    return result;
                }
            }
        }
        // Expansion regimes: the density-validity corollary only. The oracle
        // throws if any implied intervention density leaves [0,1].
        const RegimeSpec expansion =
            custom_regime("expand", 1.0 + q, 1.0 + m);
        try {
            gformula_risk(dgm, expansion, dgm.K, options.state_bound);
        } catch (const InfeasibleConstraintError& e) {
            result.detail = std::string("expansion produced an invalid density: ") + e.what();
            return result;
        }
    }
    result.passed = true;
    result.detail = std::to_string(options.n_dgms) + " DGMs checked";
    return result;
}

SuiteResult suite_deterministic_degeneration(const ValidateOptions& options) {
    SuiteResult result;
    result.name = "deterministic-degeneration";
    double worst = 0.0;
    for (int d = 0; d < 10; ++d) {
        RandomDgmOptions opt;
        opt.K = 1 + d % 3;
        opt.censoring = false;
        const DiscreteDGM dgm = random_dgm(options.seed + 303 + d, opt);
        const RegimeSpec flood = custom_regime("flood", 100.0, 1.0);
        const OracleResult res = gformula_risk(dgm, flood, dgm.K, options.state_bound);
        for (const auto& info : res.intervals) {
            if (info.res.aleph_B || info.res.alpha != 0.0) {
                result.detail = "dgm " + std::to_string(d) +
                                ": flood regime did not force aleph_B=0";
                return result;
            }
        }
        const std::vector<double> reference = treat_all_eligible_risk(dgm, dgm.K,
                                                                      options.state_bound);
        for (int k = 0; k < dgm.K; ++k) {
            const double err = std::abs(res.risk[k] - reference[k]);
            worst = std::max(worst, err);
            if (err >= options.constraint_tol) {
                result.detail = "dgm " + std::to_string(d) + ", k=" + std::to_string(k + 1) +
                                ": |risk - treat-all risk| = " + format_double(err);
                return result;
            }
        }
    }
    result.passed = true;
    result.detail = "10 DGMs, worst gap " + format_double(worst);
    return result;
}

std::vector<SuiteResult> run_validation_suites(const ValidateOptions& options) {
    return {suite_representation_equivalence(options), suite_constraint_satisfaction(options),
            suite_lemma_range(options), suite_deterministic_degeneration(options)};
}

}  // namespace proprep
