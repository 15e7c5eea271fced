#include "proprep/pipeline.hpp"

namespace proprep {

PipelineResult run_pipeline(PanelDataset panel, const PipelineConfig& config) {
    if (config.regimes.empty()) throw ConfigError("regime list must be nonempty");
    if (config.K) panel = truncate_horizon(panel, *config.K);

    bool any_censoring = false;
    for (const auto& subj : panel.subjects)
        for (const auto& rec : subj.records) any_censoring = any_censoring || rec.C;

    TreatmentModels models =
        fit_treatment_models(panel, config.formulas, any_censoring, config.glm);

    PipelineResult result{clone_dataset(std::move(panel), config.regimes), {}, {}, {}, {}};
    result.weights = compute_weights(result.cloned, models, config.weight_options);

    MsmOptions msm_options;
    msm_options.weight_cap = config.weight_cap;
    msm_options.glm = config.glm;
    result.msm = fit_msm(result.cloned, result.weights, config.gamma, config.v_names, msm_options);

    const int K = result.cloned.panel.horizon;
    for (std::size_t z = 0; z < config.regimes.size(); ++z)
        result.risks.push_back(plugin_risk(result.msm, result.cloned, z, K));
    result.utilization = utilization_curves(result.cloned, result.weights);
    return result;
}

}  // namespace proprep
