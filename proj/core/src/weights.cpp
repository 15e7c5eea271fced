#include "proprep/weights.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "proprep/util.hpp"

namespace proprep {

ClonedPanel clone_dataset(PanelDataset panel, std::vector<RegimeSpec> regimes) {
    if (regimes.empty()) throw ConfigError("need at least one regime to clone");
    for (auto& r : regimes) r.validate(panel.horizon);
    return ClonedPanel{std::move(panel), std::move(regimes)};
}

// Covariate values of records 1..k as raw bytes, prefixed by k.
std::string TreatmentModels::history_key(const Subject& subj, int k) {
    std::string key;
    key.reserve(static_cast<std::size_t>(k) * subj.records[0].covs.size() * sizeof(double) + 1);
    key.push_back(static_cast<char>(k));
    for (int j = 0; j < k; ++j) {
        const auto& covs = subj.records[static_cast<std::size_t>(j)].covs;
        const char* bytes = reinterpret_cast<const char*>(covs.data());
        key.append(bytes, bytes + covs.size() * sizeof(double));
    }
    return key;
}

namespace {

std::unordered_map<std::string, double> saturated_table(
    const PanelDataset& panel, const std::function<bool(const PanelRecord&)>& in_fit,
    const std::function<bool(const PanelRecord&)>& outcome) {
    std::unordered_map<std::string, std::pair<double, double>> counts;
    for (const auto& subj : panel.subjects) {
        for (const auto& rec : subj.records) {
            if (!in_fit(rec)) continue;
            auto& cell = counts[TreatmentModels::history_key(subj, rec.k)];
            cell.second += 1.0;
            if (outcome(rec)) cell.first += 1.0;
        }
    }
    std::unordered_map<std::string, double> table;
    table.reserve(counts.size());
    for (auto& [key, cell] : counts) table.emplace(key, cell.first / cell.second);
    return table;
}

GlmFit fit_subset(const PanelDataset& panel, const BoundFormula& bf,
                  const std::function<bool(const PanelRecord&)>& in_fit,
                  const std::function<bool(const PanelRecord&)>& outcome,
                  const GlmOptions& options, const char* label) {
    std::size_t rows = 0;
    for (const auto& subj : panel.subjects)
        for (const auto& rec : subj.records)
            if (in_fit(rec)) ++rows;
    if (rows == 0) throw DataError(std::string("no eligible rows to fit the ") + label + " model");
    Eigen::MatrixXd design(rows, bf.width());
    Eigen::VectorXd y(rows), w(rows);
    std::vector<double> row(bf.width());
    std::size_t r = 0;
    for (const auto& subj : panel.subjects) {
        for (const auto& rec : subj.records) {
            if (!in_fit(rec)) continue;
            design_row(bf, panel.schema, rec, 0, row);
            for (std::size_t j = 0; j < row.size(); ++j) design(r, j) = row[j];
            y[r] = outcome(rec) ? 1.0 : 0.0;
            w[r] = 1.0;
            ++r;
        }
    }
    return fit_pooled_logistic(design, y, w, bf.columns, options);
}

}  // namespace

TreatmentModels fit_treatment_models(const PanelDataset& panel, const TreatmentFormulas& formulas,
                                     bool fit_censoring, const GlmOptions& glm_options) {
    TreatmentModels models;
    models.saturated = formulas.phi_B.saturated;
    if (formulas.phi_H.saturated != models.saturated ||
        (fit_censoring && formulas.phi_C.saturated != models.saturated))
        throw ConfigError("treatment formulas must be all saturated or all parametric");
    models.has_censoring = fit_censoring;

    auto in_b = [](const PanelRecord& rec) { return rec.R; };
    auto in_h = [](const PanelRecord& rec) { return rec.S; };
    auto in_c = [](const PanelRecord& rec) { return rec.S && !rec.H; };
    auto out_b = [](const PanelRecord& rec) { return rec.B; };
    auto out_h = [](const PanelRecord& rec) { return rec.H; };
    auto out_c = [](const PanelRecord& rec) { return rec.C; };

    if (models.saturated) {
        bind_formula(formulas.phi_B, panel);  // validates discreteness
        models.sat_B = saturated_table(panel, in_b, out_b);
        models.sat_H = saturated_table(panel, in_h, out_h);
        if (fit_censoring) models.sat_C = saturated_table(panel, in_c, out_c);
        return models;
    }

    models.bound_B = bind_formula(formulas.phi_B, panel);
    models.bound_H = bind_formula(formulas.phi_H, panel);
    models.fit_B = fit_subset(panel, models.bound_B, in_b, out_b, glm_options, "B");
    models.fit_H = fit_subset(panel, models.bound_H, in_h, out_h, glm_options, "H");
    if (fit_censoring) {
        models.bound_C = bind_formula(formulas.phi_C, panel);
        models.fit_C = fit_subset(panel, models.bound_C, in_c, out_c, glm_options, "C");
    }
    return models;
}

std::vector<std::vector<TreatmentModels::RecordProbs>> TreatmentModels::predict(
    const PanelDataset& panel) const {
    std::vector<std::vector<RecordProbs>> out(panel.subjects.size());
    std::vector<double> row_b, row_h, row_c;
    if (!saturated) {
        row_b.resize(bound_B.width());
        row_h.resize(bound_H.width());
        if (has_censoring) row_c.resize(bound_C.width());
    }
    for (std::size_t i = 0; i < panel.subjects.size(); ++i) {
        const Subject& subj = panel.subjects[i];
        out[i].resize(subj.records.size());
        for (std::size_t r = 0; r < subj.records.size(); ++r) {
            const PanelRecord& rec = subj.records[r];
            RecordProbs& probs = out[i][r];
            if (saturated) {
                const std::string key = TreatmentModels::history_key(subj, rec.k);
                if (rec.R) {
                    auto it = sat_B.find(key);
                    if (it == sat_B.end())
                        throw DataError("history absent from the saturated B table (subject '" +
                                        subj.id + "', k=" + std::to_string(rec.k) + ")");
                    probs.p_b = it->second;
                }
                if (rec.S) {
                    auto it = sat_H.find(key);
                    if (it == sat_H.end())
                        throw DataError("history absent from the saturated H table (subject '" +
                                        subj.id + "', k=" + std::to_string(rec.k) + ")");
                    probs.p_h = it->second;
                }
                if (has_censoring && rec.S && !rec.H) {
                    auto it = sat_C.find(key);
                    if (it == sat_C.end())
                        throw DataError("history absent from the saturated C table (subject '" +
                                        subj.id + "', k=" + std::to_string(rec.k) + ")");
                    probs.p_c = it->second;
                }
            } else {
                if (rec.R) {
                    design_row(bound_B, panel.schema, rec, 0, row_b);
                    probs.p_b = predict_prob(*fit_B, row_b);
                }
                if (rec.S) {
                    design_row(bound_H, panel.schema, rec, 0, row_h);
                    probs.p_h = predict_prob(*fit_H, row_h);
                }
                if (has_censoring && rec.S && !rec.H) {
                    design_row(bound_C, panel.schema, rec, 0, row_c);
                    probs.p_c = predict_prob(*fit_C, row_c);
                }
            }
        }
    }
    return out;
}

namespace {

// Main-text resolution: aleph and beth forced to 1, so alpha is always the
// ratio of the target to the weighted natural marginal.
void resolve_main_text(double multiplier, double pi_obs, double pi_nat, double& target,
                       bool& aleph, bool& beth, double& scale) {
    target = multiplier * pi_obs;
    aleph = true;
    beth = true;
    if (target == 0.0 && pi_nat <= 0.0) {
        scale = 0.0;
        return;
    }
    if (pi_nat < 1e-12)
        throw InfeasibleConstraintError(
            "weighted natural marginal below guard in the main-text algorithm");
    scale = target / pi_nat;
}

}  // namespace

WeightTable compute_weights(const ClonedPanel& cloned, const TreatmentModels& models,
                            const WeightOptions& options) {
    const PanelDataset& panel = cloned.panel;
    const std::size_t n_z = cloned.regimes.size();
    const std::size_t n = panel.subjects.size();
    const int K = panel.horizon;
    const auto probs = models.predict(panel);

    // Factual marginals: unweighted proportions over all n subjects.
    std::vector<double> pi_B_obs(K + 1, 0.0), pi_H_obs(K + 1, 0.0);
    for (const auto& subj : panel.subjects) {
        for (const auto& rec : subj.records) {
            if (rec.B) pi_B_obs[rec.k] += 1.0;
            if (rec.H) pi_H_obs[rec.k] += 1.0;
        }
    }
    for (int k = 1; k <= K; ++k) {
        pi_B_obs[k] /= static_cast<double>(n);
        pi_H_obs[k] /= static_cast<double>(n);
    }

    WeightTable table;
    table.wb.assign(n_z, {});
    table.wh.assign(n_z, {});
    table.wc.assign(n_z, {});
    table.diag.assign(n_z, std::vector<IntervalDiagnostics>(K));

    for (std::size_t z = 0; z < n_z; ++z) {
        const RegimeSpec& regime = cloned.regimes[z];
        auto& wb = table.wb[z];
        auto& wh = table.wh[z];
        auto& wc = table.wc[z];
        wb.resize(n);
        wh.resize(n);
        wc.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            wb[i].resize(panel.subjects[i].records.size());
            wh[i].resize(panel.subjects[i].records.size());
            wc[i].resize(panel.subjects[i].records.size());
        }

        for (int k = 1; k <= K; ++k) {
            IntervalDiagnostics& diag = table.diag[z][static_cast<std::size_t>(k) - 1];
            diag.pi_B_obs = pi_B_obs[k];
            diag.pi_H_obs = pi_H_obs[k];
            const std::size_t r = static_cast<std::size_t>(k) - 1;

            auto lag = [&](const std::vector<std::vector<double>>& w, std::size_t i) {
                return k == 1 ? 1.0 : w[i][r - 1];
            };

            // Natural-value B marginal and eligibility mass, weighted through k-1.
            KahanSum piB, piR;
            for (std::size_t i = 0; i < n; ++i) {
                const Subject& subj = panel.subjects[i];
                if (subj.records.size() < static_cast<std::size_t>(k)) continue;
                const PanelRecord& rec = subj.records[r];
                const double w_lag = lag(wb, i) * lag(wh, i) * lag(wc, i);
                if (rec.B) piB.add(w_lag);
                if (rec.R) piR.add(w_lag);
            }
            diag.pi_B_hat = piB.value() / static_cast<double>(n);
            diag.pi_R_hat = piR.value() / static_cast<double>(n);

            double target_B, alpha;
            bool aleph_B, beth_B;
            if (options.force_main_text) {
                resolve_main_text(regime.q_at(k), pi_B_obs[k], diag.pi_B_hat, target_B, aleph_B,
                                  beth_B, alpha);
            } else {
                ConstraintResolution rb = resolve_constraints(
                    regime.q_at(k), 0.0, pi_B_obs[k], 0.0, std::min(1.0, diag.pi_B_hat), 0.0,
                    std::min(1.0, diag.pi_R_hat), 1.0);
                target_B = rb.target_B;
                aleph_B = rb.aleph_B;
                beth_B = rb.beth_B;
                alpha = rb.alpha;
            }

            // Attach the interval-k superior-treatment factor.
            for (std::size_t i = 0; i < n; ++i) {
                const Subject& subj = panel.subjects[i];
                if (subj.records.size() < static_cast<std::size_t>(k)) continue;
                const PanelRecord& rec = subj.records[r];
                double factor = 1.0;
                if (rec.R) {
                    try {
                        factor = weight_factor(alpha, beth_B, probs[i][r].p_b, rec.B);
                    } catch (const InfeasibleConstraintError&) {
                        throw;
                    } catch (const NumericError& e) {
                        throw PositivityError(e.what(), k, regime.label, subj.id);
                    }
                }
                wb[i][r] = lag(wb, i) * factor;
            }

            // Natural H marginal and S mass: B weights through k, H through k-1.
            KahanSum piH, piS;
            for (std::size_t i = 0; i < n; ++i) {
                const Subject& subj = panel.subjects[i];
                if (subj.records.size() < static_cast<std::size_t>(k)) continue;
                const PanelRecord& rec = subj.records[r];
                const double w_mid = wb[i][r] * lag(wh, i) * lag(wc, i);
                if (rec.H) piH.add(w_mid);
                if (rec.S) piS.add(w_mid);
            }
            diag.pi_H_hat = piH.value() / static_cast<double>(n);
            diag.pi_S_hat = piS.value() / static_cast<double>(n);

            double target_H, beta;
            bool aleph_H, beth_H;
            if (options.force_main_text) {
                resolve_main_text(regime.m_at(k), pi_H_obs[k], diag.pi_H_hat, target_H, aleph_H,
                                  beth_H, beta);
            } else {
                ConstraintResolution rh = resolve_constraints(
                    0.0, regime.m_at(k), 0.0, pi_H_obs[k], 0.0, std::min(1.0, diag.pi_H_hat), 1.0,
                    std::min(1.0, diag.pi_S_hat));
                target_H = rh.target_H;
                aleph_H = rh.aleph_H;
                beth_H = rh.beth_H;
                beta = rh.beta;
            }
            diag.res.target_B = target_B;
            diag.res.aleph_B = aleph_B;
            diag.res.beth_B = beth_B;
            diag.res.alpha = alpha;
            diag.res.target_H = target_H;
            diag.res.aleph_H = aleph_H;
            diag.res.beth_H = beth_H;
            diag.res.beta = beta;

            // Inferior-treatment and censoring factors.
            for (std::size_t i = 0; i < n; ++i) {
                const Subject& subj = panel.subjects[i];
                if (subj.records.size() < static_cast<std::size_t>(k)) continue;
                const PanelRecord& rec = subj.records[r];
                double factor = 1.0;
                if (rec.S) {
                    try {
                        factor = weight_factor(beta, beth_H, probs[i][r].p_h, rec.H);
                    } catch (const InfeasibleConstraintError&) {
                        throw;
                    } catch (const NumericError& e) {
                        throw PositivityError(e.what(), k, regime.label, subj.id);
                    }
                }
                wh[i][r] = lag(wh, i) * factor;

                double cfactor = 1.0;
                if (models.has_censoring && rec.S && !rec.H) {
                    if (rec.C) {
                        cfactor = 0.0;  // I(C_k = 0) numerator
                    } else {
                        const double pc = probs[i][r].p_c;
                        if (1.0 - pc < kProbClamp)
                            throw PositivityError("fitted censoring probability is one", k,
                                                  regime.label, subj.id);
                        cfactor = 1.0 / (1.0 - pc);
                    }
                }
                wc[i][r] = lag(wc, i) * cfactor;
            }
        }
    }
    return table;
}

std::string WeightTable::dump_diagnostics(const std::vector<RegimeSpec>& regimes) const {
    std::ostringstream out;
    out << "regime,k,alpha,beta,aleph_B,aleph_H,beth_B,beth_H,target_B,target_H,"
           "pi_B_obs,pi_H_obs,pi_B_hat,pi_H_hat,pi_R_hat,pi_S_hat\n";
    for (std::size_t z = 0; z < diag.size(); ++z) {
        for (std::size_t k = 0; k < diag[z].size(); ++k) {
            const IntervalDiagnostics& d = diag[z][k];
            out << regimes[z].label << ',' << (k + 1) << ',' << format_double(d.res.alpha) << ','
                << format_double(d.res.beta) << ',' << d.res.aleph_B << ',' << d.res.aleph_H << ','
                << d.res.beth_B << ',' << d.res.beth_H << ',' << format_double(d.res.target_B)
                << ',' << format_double(d.res.target_H) << ',' << format_double(d.pi_B_obs) << ','
                << format_double(d.pi_H_obs) << ',' << format_double(d.pi_B_hat) << ','
                << format_double(d.pi_H_hat) << ',' << format_double(d.pi_R_hat) << ','
                << format_double(d.pi_S_hat) << '\n';
        }
    }
    return out.str();
}

}  // namespace proprep
