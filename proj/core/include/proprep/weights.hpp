#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "proprep/basis.hpp"
#include "proprep/glm.hpp"
#include "proprep/panel.hpp"
#include "proprep/regime.hpp"

namespace proprep {

// One full copy of the panel per regime, tagged with the administrative
// variable Z. The payload is shared; the clone index is (z, subject).
struct ClonedPanel {
    PanelDataset panel;
    std::vector<RegimeSpec> regimes;

    std::size_t n_clone_subjects() const { return regimes.size() * panel.subjects.size(); }
    std::size_t n_rows() const { return regimes.size() * panel.n_records(); }
};

ClonedPanel clone_dataset(PanelDataset panel, std::vector<RegimeSpec> regimes);

struct TreatmentFormulas {
    FormulaSpec phi_B, phi_H, phi_C;
};

// Fitted denominators of the weight algorithm: pooled logistic models, or
// empirical frequency tables keyed by (k, covariate history) when saturated.
class TreatmentModels {
public:
    bool saturated = false;
    bool has_censoring = false;

    std::optional<GlmFit> fit_B, fit_H, fit_C;
    BoundFormula bound_B, bound_H, bound_C;

    struct RecordProbs {
        double p_b = 0.0;  // meaningful when R=1
        double p_h = 0.0;  // meaningful when S=1
        double p_c = 0.0;  // meaningful when censoring-eligible
    };
    // Fitted conditional probabilities for every record of a panel (shared by
    // all clones).
    std::vector<std::vector<RecordProbs>> predict(const PanelDataset& panel) const;

    // Saturated tables: empirical P(outcome=1) per history key.
    std::unordered_map<std::string, double> sat_B, sat_H, sat_C;

    // Key of the (k, covariate history) cell a record falls into.
    static std::string history_key(const Subject& subject, int k);
};

// Fits the B model on records with R_k=1, the H model on S_k=1, and (when
// requested) the C model on S_k=1, H_k=0 records; censored history is
// structurally absent from the panel. Structural rows never enter a fit.
TreatmentModels fit_treatment_models(const PanelDataset& panel, const TreatmentFormulas& formulas,
                                     bool fit_censoring, const GlmOptions& glm_options = {});

struct IntervalDiagnostics {
    double pi_B_obs = 0.0, pi_H_obs = 0.0;    // factual marginals
    double pi_B_hat = 0.0, pi_H_hat = 0.0;    // weighted natural-value marginals
    double pi_R_hat = 0.0, pi_S_hat = 0.0;    // weighted eligibility masses
    ConstraintResolution res;
};

// Per clone-record cumulative weights plus the per-(z,k) scalars.
struct WeightTable {
    // Indexed [z][subject][k-1]; rows stop at each subject's last interval.
    std::vector<std::vector<std::vector<double>>> wb, wh, wc;
    std::vector<std::vector<IntervalDiagnostics>> diag;  // [z][k-1]

    // Cumulative weight at interval k, carrying the last value forward for
    // subjects whose rows ended earlier.
    double wb_at(std::size_t z, std::size_t i, int k) const { return at(wb, z, i, k); }
    double wh_at(std::size_t z, std::size_t i, int k) const { return at(wh, z, i, k); }
    double wc_at(std::size_t z, std::size_t i, int k) const { return at(wc, z, i, k); }

    std::string dump_diagnostics(const std::vector<RegimeSpec>& regimes) const;

private:
    static double at(const std::vector<std::vector<std::vector<double>>>& w, std::size_t z,
                     std::size_t i, int k) {
        if (k <= 0) return 1.0;
        const auto& rows = w[z][i];
        if (rows.empty()) return 1.0;
        const std::size_t idx = std::min<std::size_t>(rows.size(), static_cast<std::size_t>(k));
        return rows[idx - 1];
    }
};

struct WeightOptions {
    // Forces aleph = beth = 1: the main-text special case of the generalized
    // algorithm. Valid for regimes whose targets never exceed the natural
    // utilization (g0, g1).
    bool force_main_text = false;
};

// The recursive IPW weight algorithm. Strictly sequential over k: the
// interval-k scaling factors depend on weighted marginals through k-1.
WeightTable compute_weights(const ClonedPanel& cloned, const TreatmentModels& models,
                            const WeightOptions& options = {});

}  // namespace proprep
