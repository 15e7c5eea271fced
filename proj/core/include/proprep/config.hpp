#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "proprep/boot.hpp"
#include "proprep/checks.hpp"
#include "proprep/pipeline.hpp"
#include "proprep/sim.hpp"

namespace proprep {

// The single structured run configuration consumed by every subcommand.
struct RunConfig {
    std::string input;  // panel path (fit/bootstrap)
    PanelSchema schema;
    PipelineConfig pipeline;
    BootstrapOptions bootstrap;
    ValidateOptions validate;
    std::uint64_t oracle_bound = 10'000'000;
    int threads = 1;

    // simulate: exactly one source.
    std::optional<DiscreteDGM> sim_dgm;
    std::optional<ParametricDGM> sim_parametric;
    int sim_n = 0;
    std::uint64_t sim_seed = 1;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text, const std::string& base_dir);

// Declarative formula parsing, shared with tests.
FormulaSpec parse_formula_json(const std::string& text);

}  // namespace proprep
