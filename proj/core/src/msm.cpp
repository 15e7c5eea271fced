#include "proprep/msm.hpp"

#include <cmath>

#include "proprep/util.hpp"

namespace proprep {

namespace {

void validate_gamma(const FormulaSpec& gamma, const PanelSchema& schema,
                    const std::vector<std::string>& v_names, std::size_t n_regimes) {
    bool has_regime_term = false;
    for (const auto& term : gamma.terms) {
        if (term.kind == TermKind::Regime || term.kind == TermKind::RegimeByTime) {
            has_regime_term = true;
            continue;
        }
        if (term.covariate.empty()) continue;
        bool in_v = false;
        for (const auto& v : v_names) in_v = in_v || v == term.covariate;
        if (!in_v)
            throw ConfigError("gamma term references '" + term.covariate +
                              "', which is not in the declared V set");
        const int idx = schema.covariate_index(term.covariate);
        if (idx < 0) throw ConfigError("unknown covariate '" + term.covariate + "' in gamma");
        if (!schema.covariates[idx].baseline)
            throw ConfigError("V must be a subset of baseline covariates ('" + term.covariate +
                              "' is time-varying)");
    }
    if (has_regime_term && n_regimes < 2)
        throw ConfigError("gamma has regime terms but only one regime is declared");
}

double msm_weight(const WeightTable& w, std::size_t z, std::size_t i, std::size_t r,
                  const std::optional<double>& cap) {
    double weight = w.wb[z][i][r] * w.wh[z][i][r] * w.wc[z][i][r];
    if (cap) weight = std::min(weight, *cap);
    return weight;
}

}  // namespace

FittedMSM fit_msm(const ClonedPanel& cloned, const WeightTable& weights, const FormulaSpec& gamma,
                  const std::vector<std::string>& v_names, const MsmOptions& options) {
    const PanelDataset& panel = cloned.panel;
    const std::size_t n_z = cloned.regimes.size();
    const int K = panel.horizon;
    FittedMSM fit;
    fit.saturated = gamma.saturated;
    fit.v_names = v_names;
    fit.n_regimes = static_cast<int>(n_z);
    fit.K = K;

    if (gamma.saturated) {
        if (!v_names.empty())
            throw ConfigError("the saturated hazard model supports only V = empty set");
        fit.hazard.assign(n_z, std::vector<double>(K, 0.0));
        fit.hazard_var.assign(n_z, std::vector<double>(K, 0.0));
        fit.alive_mass.assign(n_z, std::vector<double>(K, 0.0));
        for (std::size_t z = 0; z < n_z; ++z) {
            for (int k = 1; k <= K; ++k) {
                const std::size_t r = static_cast<std::size_t>(k) - 1;
                KahanSum num, den;
                for (std::size_t i = 0; i < panel.subjects.size(); ++i) {
                    const Subject& subj = panel.subjects[i];
                    if (subj.records.size() < static_cast<std::size_t>(k)) continue;
                    const PanelRecord& rec = subj.records[r];
                    if (rec.C) continue;  // zero censoring weight
                    const double w = msm_weight(weights, z, i, r, options.weight_cap);
                    den.add(w);
                    if (rec.Y) num.add(w);
                }
                const double d = den.value();
                const double lambda = d > 0.0 ? num.value() / d : 0.0;
                fit.hazard[z][r] = lambda;
                fit.alive_mass[z][r] = d;
                if (d > 0.0) {
                    KahanSum ssq;
                    for (std::size_t i = 0; i < panel.subjects.size(); ++i) {
                        const Subject& subj = panel.subjects[i];
                        if (subj.records.size() < static_cast<std::size_t>(k)) continue;
                        const PanelRecord& rec = subj.records[r];
                        if (rec.C) continue;
                        const double w = msm_weight(weights, z, i, r, options.weight_cap);
                        const double e = (rec.Y ? 1.0 : 0.0) - lambda;
                        ssq.add(w * w * e * e);
                    }
                    fit.hazard_var[z][r] = ssq.value() / (d * d);
                }
            }
        }
        return fit;
    }

    validate_gamma(gamma, panel.schema, v_names, n_z);
    fit.gamma = bind_formula(gamma, panel, static_cast<int>(n_z));

    std::size_t rows = 0;
    for (std::size_t z = 0; z < n_z; ++z)
        for (const auto& subj : panel.subjects)
            for (const auto& rec : subj.records)
                if (!rec.C) ++rows;
    Eigen::MatrixXd design(rows, fit.gamma.width());
    Eigen::VectorXd y(rows), w(rows);
    std::vector<double> row(fit.gamma.width());
    std::size_t out_row = 0;
    for (std::size_t z = 0; z < n_z; ++z) {
        for (std::size_t i = 0; i < panel.subjects.size(); ++i) {
            const Subject& subj = panel.subjects[i];
            for (std::size_t r = 0; r < subj.records.size(); ++r) {
                const PanelRecord& rec = subj.records[r];
                if (rec.C) continue;
                design_row(fit.gamma, panel.schema, rec, static_cast<int>(z), row);
                for (std::size_t j = 0; j < row.size(); ++j) design(out_row, j) = row[j];
                y[out_row] = rec.Y ? 1.0 : 0.0;
                w[out_row] = msm_weight(weights, z, i, r, options.weight_cap);
                ++out_row;
            }
        }
    }
    fit.glm = fit_pooled_logistic(design, y, w, fit.gamma.columns, options.glm);
    return fit;
}

RiskCurve plugin_risk(const FittedMSM& fit, const ClonedPanel& cloned, std::size_t z, int K) {
    RiskCurve curve;
    curve.regime = cloned.regimes.at(z).label;
    curve.risk.assign(K, 0.0);

    if (fit.saturated) {
        curve.se.assign(K, 0.0);
        curve.n_effective.assign(K, 0.0);
        double survival = 1.0;
        double cum = 0.0;
        for (int k = 1; k <= K; ++k) {
            const std::size_t r = static_cast<std::size_t>(k) - 1;
            const double lambda = fit.hazard[z][r];
            cum += survival * lambda;
            survival *= 1.0 - lambda;
            curve.risk[r] = cum;
            curve.n_effective[r] = fit.alive_mass[z][r];
            // Var(risk_k) = sum_t (prod_{j<=k, j!=t}(1-lambda_j))^2 Var(lambda_t),
            // from risk_k = 1 - prod(1 - lambda).
            double var = 0.0;
            for (int t = 1; t <= k; ++t) {
                const double lt = fit.hazard[z][static_cast<std::size_t>(t) - 1];
                double grad = 1.0;
                for (int j = 1; j <= k; ++j) {
                    if (j == t) continue;
                    grad *= 1.0 - fit.hazard[z][static_cast<std::size_t>(j) - 1];
                }
                var += grad * grad * fit.hazard_var[z][static_cast<std::size_t>(t) - 1];
                (void)lt;
            }
            curve.se[r] = std::sqrt(var);
        }
        return curve;
    }

    // Average the hazard-chained curve over the original subjects' V rows.
    const PanelDataset& panel = cloned.panel;
    const std::size_t n = panel.subjects.size();
    std::vector<double> row(fit.gamma.width());
    std::vector<double> acc(K, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Subject& subj = panel.subjects[i];
        PanelRecord probe = subj.records.front();  // baseline covariates carry V
        double survival = 1.0;
        double cum = 0.0;
        for (int k = 1; k <= K; ++k) {
            probe.k = k;
            design_row(fit.gamma, panel.schema, probe, static_cast<int>(z), row);
            const double lambda = predict_prob(*fit.glm, row);
            cum += survival * lambda;
            survival *= 1.0 - lambda;
            acc[static_cast<std::size_t>(k) - 1] += cum;
        }
    }
    for (int k = 0; k < K; ++k) curve.risk[k] = acc[k] / static_cast<double>(n);
    return curve;
}

std::vector<UtilizationRow> utilization_curves(const ClonedPanel& cloned,
                                               const WeightTable& weights) {
    const PanelDataset& panel = cloned.panel;
    const std::size_t n = panel.subjects.size();
    const int K = panel.horizon;
    std::vector<UtilizationRow> rows;
    rows.reserve(cloned.regimes.size() * static_cast<std::size_t>(K));
    for (std::size_t z = 0; z < cloned.regimes.size(); ++z) {
        for (int k = 1; k <= K; ++k) {
            const std::size_t r = static_cast<std::size_t>(k) - 1;
            KahanSum util_b, util_h;
            for (std::size_t i = 0; i < n; ++i) {
                const Subject& subj = panel.subjects[i];
                if (subj.records.size() < static_cast<std::size_t>(k)) continue;
                const PanelRecord& rec = subj.records[r];
                const double wb = weights.wb[z][i][r];
                const double wh_lag = k == 1 ? 1.0 : weights.wh[z][i][r - 1];
                const double wc_lag = k == 1 ? 1.0 : weights.wc[z][i][r - 1];
                if (rec.B) util_b.add(wb * wh_lag * wc_lag);
                if (rec.H) util_h.add(wb * weights.wh[z][i][r] * wc_lag);
            }
            rows.push_back({cloned.regimes[z].label, k,
                            util_b.value() / static_cast<double>(n),
                            util_h.value() / static_cast<double>(n)});
        }
    }
    return rows;
}

double risk_difference_pp(const RiskCurve& a, const RiskCurve& b, int k) {
    const std::size_t r = static_cast<std::size_t>(k) - 1;
    return 100.0 * (a.risk.at(r) - b.risk.at(r));
}

}  // namespace proprep
