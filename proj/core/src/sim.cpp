#include "proprep/sim.hpp"

#include <cmath>

#include "proprep/util.hpp"

namespace proprep {

namespace {

// Variable slots within one (subject, interval) cell.
enum Slot : std::uint64_t { kSlotL = 0, kSlotB = 1, kSlotH = 2, kSlotC = 3, kSlotY = 4, kSlotBase = 16 };

int draw_level(const std::vector<double>& probs, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

PanelSchema discrete_schema(const DiscreteDGM& dgm) {
    PanelSchema schema;
    CovariateSpec cov;
    cov.name = "L";
    cov.kind = CovariateKind::Categorical;
    int max_levels = 0;
    for (int m : dgm.l_levels) max_levels = std::max(max_levels, m);
    for (int l = 0; l < max_levels; ++l) cov.levels.push_back(std::to_string(l));
    schema.covariates.push_back(std::move(cov));
    return schema;
}

}  // namespace

PanelDataset sample_panel(const DiscreteDGM& dgm, int n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("need at least one subject");
    dgm.validate();
    PanelDataset panel;
    panel.schema = discrete_schema(dgm);
    panel.horizon = dgm.K;
    panel.subjects.resize(n);
    for (int i = 0; i < n; ++i) {
        Subject& subj = panel.subjects[i];
        subj.id = "s" + std::to_string(i + 1);
        std::vector<int> ls;
        TreatState treat;
        for (int k = 1; k <= dgm.K; ++k) {
            PanelRecord rec;
            rec.k = k;
            const auto& row = dgm.p_l(k, ls, treat);
            const int l = draw_level(row, counter_u01(seed, i, k, kSlotL));
            ls.push_back(l);
            rec.covs = {static_cast<double>(l)};
            if (treat.none()) {
                rec.B = counter_u01(seed, i, k, kSlotB) < dgm.p_b(k, ls);
                if (rec.B) treat = {1, k};
            }
            if (treat.none()) {
                rec.H = counter_u01(seed, i, k, kSlotH) < dgm.p_h(k, ls);
                if (rec.H) treat = {2, k};
            }
            if (dgm.censoring && treat.none()) {
                rec.C = counter_u01(seed, i, k, kSlotC) < dgm.p_c(k, ls);
            }
            if (!rec.C) rec.Y = counter_u01(seed, i, k, kSlotY) < dgm.p_y(k, ls, treat);
            subj.records.push_back(rec);
            if (rec.C || rec.Y) break;
        }
    }
    return derive_eligibility(std::move(panel));
}

std::vector<double> sample_interventional(const DiscreteDGM& dgm,
                                          const std::vector<OracleIntervalInfo>& resolved, int n,
                                          std::uint64_t seed) {
    if (static_cast<int>(resolved.size()) < dgm.K)
        throw ConfigError("resolved factors must cover every interval");
    std::vector<std::int64_t> deaths(dgm.K, 0);
    for (int i = 0; i < n; ++i) {
        std::vector<int> ls;
        TreatState treat;
        for (int k = 1; k <= dgm.K; ++k) {
            const ConstraintResolution& res = resolved[static_cast<std::size_t>(k) - 1].res;
            const auto& row = dgm.p_l(k, ls, treat);
            ls.push_back(draw_level(row, counter_u01(seed, i, k, kSlotL)));
            if (treat.none()) {
                const double fplus = intervention_density(res.alpha, res.beth_B, dgm.p_b(k, ls));
                if (counter_u01(seed, i, k, kSlotB) < fplus) treat = {1, k};
            }
            if (treat.none()) {
                const double fplus = intervention_density(res.beta, res.beth_H, dgm.p_h(k, ls));
                if (counter_u01(seed, i, k, kSlotH) < fplus) treat = {2, k};
            }
            if (counter_u01(seed, i, k, kSlotY) < dgm.p_y(k, ls, treat)) {
                ++deaths[k - 1];
                break;
            }
        }
    }
    std::vector<double> risk(dgm.K, 0.0);
    std::int64_t cum = 0;
    for (int k = 0; k < dgm.K; ++k) {
        cum += deaths[k];
        risk[k] = static_cast<double>(cum) / static_cast<double>(n);
    }
    return risk;
}

PanelSchema ParametricDGM::schema() const {
    PanelSchema s;
    for (const auto& b : baselines) {
        CovariateSpec cov;
        cov.name = b.name;
        cov.kind = CovariateKind::Numeric;
        cov.baseline = true;
        s.covariates.push_back(std::move(cov));
    }
    if (!severity_name.empty()) {
        CovariateSpec cov;
        cov.name = severity_name;
        cov.kind = CovariateKind::Numeric;
        s.covariates.push_back(std::move(cov));
    }
    return s;
}

namespace {

double standard_normal(double u1, double u2) {
    // Box-Muller; u1 in (0,1) by construction of counter_u01.
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double hazard_prob(const ParametricDGM::Hazard& h, int k, const std::vector<double>& covs,
                   const TreatState& treat) {
    double eta = h.intercept + h.per_k * static_cast<double>(k);
    for (std::size_t j = 0; j < h.slopes.size() && j < covs.size(); ++j)
        eta += h.slopes[j] * covs[j];
    if (treat.type == 1) eta += h.effect_B;
    if (treat.type == 2) eta += h.effect_H;
    return expit(eta);
}

}  // namespace

PanelDataset sample_panel(const ParametricDGM& dgm, int n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("need at least one subject");
    PanelDataset panel;
    panel.schema = dgm.schema();
    panel.horizon = dgm.K;
    panel.subjects.resize(n);
    const bool with_severity = !dgm.severity_name.empty();
    for (int i = 0; i < n; ++i) {
        Subject& subj = panel.subjects[i];
        subj.id = "s" + std::to_string(i + 1);
        std::vector<double> covs;
        covs.reserve(dgm.baselines.size() + (with_severity ? 1 : 0));
        for (std::size_t j = 0; j < dgm.baselines.size(); ++j) {
            const auto& b = dgm.baselines[j];
            const double u1 = counter_u01(seed, i, 0, kSlotBase + 2 * j);
            const double u2 = counter_u01(seed, i, 0, kSlotBase + 2 * j + 1);
            switch (b.dist) {
                case ParametricDGM::Baseline::Dist::Normal:
                    covs.push_back(b.a + b.b * standard_normal(u1, u2));
                    break;
                case ParametricDGM::Baseline::Dist::Uniform:
                    covs.push_back(b.a + (b.b - b.a) * u1);
                    break;
                case ParametricDGM::Baseline::Dist::Bernoulli:
                    covs.push_back(u1 < b.a ? 1.0 : 0.0);
                    break;
            }
        }
        double severity = 0.0;
        if (with_severity) {
            severity = dgm.severity_start_mu +
                       dgm.severity_start_sd * standard_normal(counter_u01(seed, i, 0, 8),
                                                               counter_u01(seed, i, 0, 9));
            covs.push_back(severity);
        }
        TreatState treat;
        for (int k = 1; k <= dgm.K; ++k) {
            if (with_severity && k > 1) {
                severity += dgm.severity_drift +
                            dgm.severity_sd * standard_normal(counter_u01(seed, i, k, 10),
                                                              counter_u01(seed, i, k, 11));
                covs.back() = severity;
            }
            PanelRecord rec;
            rec.k = k;
            rec.covs = covs;
            if (treat.none()) {
                rec.B = counter_u01(seed, i, k, kSlotB) < hazard_prob(dgm.treat_B, k, covs, treat);
                if (rec.B) treat = {1, k};
            }
            if (treat.none()) {
                rec.H = counter_u01(seed, i, k, kSlotH) < hazard_prob(dgm.treat_H, k, covs, treat);
                if (rec.H) treat = {2, k};
            }
            if (dgm.censor && treat.none()) {
                rec.C = counter_u01(seed, i, k, kSlotC) < hazard_prob(*dgm.censor, k, covs, treat);
            }
            if (!rec.C) rec.Y = counter_u01(seed, i, k, kSlotY) < hazard_prob(dgm.death, k, covs, treat);
            subj.records.push_back(rec);
            if (rec.C || rec.Y) break;
        }
    }
    return derive_eligibility(std::move(panel));
}

}  // namespace proprep
