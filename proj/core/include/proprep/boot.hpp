#pragma once

#include <cstdint>

#include "proprep/pipeline.hpp"

namespace proprep {

// Nonparametric bootstrap of the full pipeline. The resampling unit is the
// subject; the scaling factors and their indicators are re-derived inside
// every replicate. Percentile bands are order statistics at rank (B+1)p.
struct BootstrapResult {
    int B = 0;
    int failures = 0;
    std::vector<std::string> regime_labels;
    // Converged replicates only: risk[rep][z][k].
    std::vector<std::vector<std::vector<double>>> replicate_risk;
    // Bands per regime: [z][k].
    std::vector<std::vector<double>> lo, hi;
    struct DiffBand {
        std::size_t a = 0, b = 0;  // band on risk_a - risk_b
        std::vector<double> lo, hi;
    };
    std::vector<DiffBand> diff;
};

struct BootstrapOptions {
    int B = 500;
    std::uint64_t seed = 1;
    int threads = 1;
    double lo_percentile = 0.025;
    double hi_percentile = 0.975;
    double max_failure_rate = 0.10;
};

BootstrapResult bootstrap(const PanelDataset& panel, const PipelineConfig& config,
                          const BootstrapOptions& options);

}  // namespace proprep
