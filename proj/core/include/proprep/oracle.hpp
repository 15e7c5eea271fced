#pragma once

#include <cstdint>
#include <vector>

#include "proprep/dgm.hpp"
#include "proprep/regime.hpp"

namespace proprep {

inline constexpr std::uint64_t kDefaultStateBound = 10'000'000;

// Everything the g-formula recursion resolves at one interval.
struct OracleIntervalInfo {
    double pi_B_obs = 0.0;  // factual marginals P(B_k=1), P(H_k=1)
    double pi_H_obs = 0.0;
    double f_B_nat = 0.0;   // truncated g-formulae: natural-value marginals under the regime
    double f_H_nat = 0.0;
    double f_R = 0.0;       // eligibility masses under the regime
    double f_S = 0.0;
    ConstraintResolution res;
};

struct OracleResult {
    std::vector<double> risk;  // cumulative incidence at k = 1..K
    std::vector<OracleIntervalInfo> intervals;
};

// Exact evaluation of the counterfactual risk under the regime by forward
// enumeration over complete covariate/treatment histories, resolving the
// scaling factors recursively from the truncated g-formulae. Censoring is
// abolished in the intervened world; the factual marginals entering the
// targets retain censoring attrition.
OracleResult gformula_risk(const DiscreteDGM& dgm, const RegimeSpec& regime, int K,
                           std::uint64_t state_bound = kDefaultStateBound);

enum class VPartition { Empty, FullL1 };

// The same risk through the hazard-product representation: exact discrete
// hazards from weighted expectations over the factual world.
std::vector<double> gformula_hazard_repr(const DiscreteDGM& dgm, const RegimeSpec& regime, int K,
                                         VPartition v = VPartition::Empty,
                                         std::uint64_t state_bound = kDefaultStateBound);

// Exact weighted expectations versus resolved targets, per interval.
struct ConstraintCheckRow {
    int k = 0;
    double weighted_B = 0.0;   // E[B_k W_{B,k} W_{H,k-1} W_{C,k-1}]
    double target_B = 0.0;
    double weighted_H = 0.0;   // E[H_k W_{B,k} W_{H,k} W_{C,k-1}]
    double target_H = 0.0;
    double weighted_B_nat = 0.0;  // E[B_k W_{B,k-1} W_{H,k-1} W_{C,k-1}]
    double weighted_H_nat = 0.0;  // E[H_k W_{B,k} W_{H,k-1} W_{C,k-1}]
    double weighted_R = 0.0;      // E[R_k W_{B,k-1} W_{H,k-1} W_{C,k-1}]
    double weighted_S = 0.0;      // E[S_k W_{B,k} W_{H,k-1} W_{C,k-1}]
    bool aleph_B = true, aleph_H = true, beth_B = false, beth_H = false;
};

std::vector<ConstraintCheckRow> check_constraints(const DiscreteDGM& dgm, const RegimeSpec& regime,
                                                  int K,
                                                  std::uint64_t state_bound = kDefaultStateBound);

// Dynamic deterministic reference: every eligible record receives the
// superior treatment with certainty, censoring abolished.
std::vector<double> treat_all_eligible_risk(const DiscreteDGM& dgm, int K,
                                            std::uint64_t state_bound = kDefaultStateBound);

// Factual cumulative incidence by forward enumeration (no intervention).
// Only defined for DGMs without censoring.
std::vector<double> factual_risk(const DiscreteDGM& dgm, int K,
                                 std::uint64_t state_bound = kDefaultStateBound);

}  // namespace proprep
