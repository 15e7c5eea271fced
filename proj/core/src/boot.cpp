#include "proprep/boot.hpp"

#include <mutex>

#include "proprep/util.hpp"

namespace proprep {

namespace {

PanelDataset resample_subjects(const PanelDataset& panel, std::uint64_t seed, int replicate) {
    const std::size_t n = panel.subjects.size();
    PanelDataset out;
    out.schema = panel.schema;
    out.horizon = panel.horizon;
    out.subjects.reserve(n);
    for (std::size_t d = 0; d < n; ++d) {
        const double u = counter_u01(seed, static_cast<std::uint64_t>(replicate), d, 7);
        auto pick = std::min(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)));
        Subject subj = panel.subjects[pick];
        subj.id = subj.id + "#" + std::to_string(d);  // keep ids unique per draw
        out.subjects.push_back(std::move(subj));
    }
    return out;
}

}  // namespace

BootstrapResult bootstrap(const PanelDataset& panel, const PipelineConfig& config,
                          const BootstrapOptions& options) {
    if (options.B < 1) throw ConfigError("bootstrap needs B >= 1");
    BootstrapResult result;
    result.B = options.B;
    for (const auto& r : config.regimes) result.regime_labels.push_back(r.label);
    const std::size_t n_z = config.regimes.size();

    // Slot per replicate index; reduced deterministically afterwards.
    std::vector<std::vector<std::vector<double>>> risks(options.B);
    std::vector<char> ok(options.B, 0);
    parallel_for(static_cast<std::size_t>(options.B), options.threads, [&](std::size_t rep) {
        try {
            PanelDataset sample = resample_subjects(panel, options.seed, static_cast<int>(rep));
            PipelineResult run = run_pipeline(std::move(sample), config);
            std::vector<std::vector<double>> per_z;
            per_z.reserve(n_z);
            for (const auto& curve : run.risks) per_z.push_back(curve.risk);
            risks[rep] = std::move(per_z);
            ok[rep] = 1;
        } catch (const NumericError&) {
            ok[rep] = 0;
        }
    });

    for (int rep = 0; rep < options.B; ++rep) {
        if (ok[rep])
            result.replicate_risk.push_back(std::move(risks[rep]));
        else
            ++result.failures;
    }
    if (result.failures > options.max_failure_rate * options.B)
        throw NumericError("too many non-converged bootstrap replicates: " +
                           std::to_string(result.failures) + " of " + std::to_string(options.B));

    const int K = static_cast<int>(result.replicate_risk.front().front().size());
    result.lo.assign(n_z, std::vector<double>(K, 0.0));
    result.hi.assign(n_z, std::vector<double>(K, 0.0));
    std::vector<double> draws;
    draws.reserve(result.replicate_risk.size());
    for (std::size_t z = 0; z < n_z; ++z) {
        for (int k = 0; k < K; ++k) {
            draws.clear();
            for (const auto& rep : result.replicate_risk) draws.push_back(rep[z][k]);
            result.lo[z][k] = quantile_band(draws, options.lo_percentile);
            result.hi[z][k] = quantile_band(draws, options.hi_percentile);
        }
    }
    for (std::size_t a = 0; a < n_z; ++a) {
        for (std::size_t b = a + 1; b < n_z; ++b) {
            BootstrapResult::DiffBand band;
            band.a = a;
            band.b = b;
            band.lo.resize(K);
            band.hi.resize(K);
            for (int k = 0; k < K; ++k) {
                draws.clear();
                for (const auto& rep : result.replicate_risk)
                    draws.push_back(rep[a][k] - rep[b][k]);
                band.lo[k] = quantile_band(draws, options.lo_percentile);
                band.hi[k] = quantile_band(draws, options.hi_percentile);
            }
            result.diff.push_back(std::move(band));
        }
    }
    return result;
}

}  // namespace proprep
