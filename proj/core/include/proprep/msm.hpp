#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proprep/basis.hpp"
#include "proprep/glm.hpp"
#include "proprep/weights.hpp"

namespace proprep {

// The marginal structural hazard model on the weighted cloned panel.
// Saturated mode stores the exact weighted empirical hazard per (z, k); the
// closed form is the MLE of a cell-indicator design, so fitted hazards equal
// the weighted ratios exactly.
struct FittedMSM {
    bool saturated = false;
    std::optional<GlmFit> glm;
    BoundFormula gamma;
    std::vector<std::string> v_names;
    int n_regimes = 0;
    int K = 0;

    // Saturated mode: hazard[z][k-1], its delta-method variance, and the
    // weighted alive mass per cell.
    std::vector<std::vector<double>> hazard, hazard_var, alive_mass;
};

struct RiskCurve {
    std::string regime;
    std::vector<double> risk;        // cumulative incidence at k = 1..K
    std::vector<double> se;          // delta-method SE (saturated mode; else empty)
    std::vector<double> n_effective; // weighted alive mass entering each hazard
};

struct MsmOptions {
    std::optional<double> weight_cap;  // documented deviation when set
    GlmOptions glm;
};

// Fits the weighted pooled logistic hazard model over all clone-records,
// case weight W_B * W_H * W_C. Records at a censoring interval carry zero
// weight and are skipped.
FittedMSM fit_msm(const ClonedPanel& cloned, const WeightTable& weights, const FormulaSpec& gamma,
                  const std::vector<std::string>& v_names, const MsmOptions& options = {});

// Plug-in cumulative incidence: hazards chained over k, averaged over the
// empirical V distribution of the original (uncloned) subjects.
RiskCurve plugin_risk(const FittedMSM& fit, const ClonedPanel& cloned, std::size_t z, int K);

struct UtilizationRow {
    std::string regime;
    int k = 0;
    double util_B = 0.0;  // weighted post-intervention utilization
    double util_H = 0.0;
};

std::vector<UtilizationRow> utilization_curves(const ClonedPanel& cloned,
                                               const WeightTable& weights);

// Risk difference in percentage points at interval k.
double risk_difference_pp(const RiskCurve& a, const RiskCurve& b, int k);

}  // namespace proprep
