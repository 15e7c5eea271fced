#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "proprep/dgm.hpp"
#include "proprep/regime.hpp"

namespace proprep {

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidateOptions {
    std::uint64_t seed = 20240901;
    int n_dgms = 100;
    double equivalence_tol = 1e-12;
    double constraint_tol = 1e-12;
    std::uint64_t state_bound = 10'000'000;
};

// Both g-formula representations agree per interval, across seeded random
// DGMs (K <= 3, binary L, censoring on every other seed) and regimes
// {g0, g1, random q,m in [0,2]}.
SuiteResult suite_representation_equivalence(const ValidateOptions& options);

// Exact weighted utilization equals the resolved targets, with fixtures
// exercising every (aleph, beth) branch: scale-down, abolition, scale-up,
// and the treat-all-eligible branch.
SuiteResult suite_constraint_satisfaction(const ValidateOptions& options);

// Shrinking regimes keep alpha/beta in [0,1]; expansion regimes still imply
// valid intervention densities.
SuiteResult suite_lemma_range(const ValidateOptions& options);

// A regime whose requested utilization exceeds the eligible mass at every k
// degenerates to the deterministic treat-all-eligible regime.
SuiteResult suite_deterministic_degeneration(const ValidateOptions& options);

std::vector<SuiteResult> run_validation_suites(const ValidateOptions& options);

}  // namespace proprep
