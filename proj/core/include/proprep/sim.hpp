#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "proprep/dgm.hpp"
#include "proprep/oracle.hpp"
#include "proprep/panel.hpp"
#include "proprep/regime.hpp"

namespace proprep {

// Draws an observational panel from a discrete DGM in topological order
// (L, B, H, C, Y). Fixed seed gives bit-identical output; generation is
// keyed per (subject, interval, variable slot) so it is order-independent.
PanelDataset sample_panel(const DiscreteDGM& dgm, int n, std::uint64_t seed);

// Draws directly from the intervention densities implied by the resolved
// per-interval scaling factors (censoring abolished). Returns the Monte Carlo
// cumulative incidence per k - the independent ground truth for tests.
std::vector<double> sample_interventional(const DiscreteDGM& dgm,
                                          const std::vector<OracleIntervalInfo>& resolved, int n,
                                          std::uint64_t seed);

// Parametric generator for transplant-like synthetic studies: continuous and
// categorical baseline covariates, one autoregressive severity covariate, and
// logistic hazards for treatment, censoring, and death.
struct ParametricDGM {
    struct Baseline {
        std::string name;
        enum class Dist { Normal, Uniform, Bernoulli } dist = Dist::Normal;
        double a = 0.0, b = 1.0;  // Normal(mu=a, sd=b), Uniform(a,b), Bernoulli(p=a)
    };
    struct Hazard {
        double intercept = -3.0;
        double per_k = 0.0;
        std::vector<double> slopes;  // aligned with covariates (baselines, then severity)
        double effect_B = 0.0;       // death model only: shift once treated
        double effect_H = 0.0;
    };

    int K = 12;
    std::vector<Baseline> baselines;
    std::string severity_name = "severity";  // time-varying; empty disables
    double severity_start_mu = 0.0, severity_start_sd = 1.0;
    double severity_drift = 0.0, severity_sd = 0.5;
    Hazard treat_B, treat_H, death;
    std::optional<Hazard> censor;

    PanelSchema schema() const;
};

PanelDataset sample_panel(const ParametricDGM& dgm, int n, std::uint64_t seed);

}  // namespace proprep
