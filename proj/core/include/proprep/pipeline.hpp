#pragma once

#include <optional>

#include "proprep/msm.hpp"
#include "proprep/weights.hpp"

namespace proprep {

// Everything cmd_fit and the bootstrap need to rerun the estimator:
// models -> clone -> weights -> MSM -> plug-in.
struct PipelineConfig {
    TreatmentFormulas formulas;
    FormulaSpec gamma;
    std::vector<std::string> v_names;
    std::vector<RegimeSpec> regimes;
    std::optional<int> K;  // truncate the panel when set
    std::optional<double> weight_cap;
    GlmOptions glm;
    WeightOptions weight_options;
};

struct PipelineResult {
    ClonedPanel cloned;
    WeightTable weights;
    FittedMSM msm;
    std::vector<RiskCurve> risks;
    std::vector<UtilizationRow> utilization;
};

PipelineResult run_pipeline(PanelDataset panel, const PipelineConfig& config);

}  // namespace proprep
