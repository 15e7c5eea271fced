#pragma once

#include <string>
#include <vector>

#include "proprep/errors.hpp"

namespace proprep {

// A resource regime: per-interval multipliers on factual utilization of the
// suspected superior (q) and suspected inferior (m) treatment, plus the
// censoring-abolition flag. Scalar series broadcast to every interval.
struct RegimeSpec {
    std::string label;
    std::vector<double> q{1.0};
    std::vector<double> m{1.0};
    bool abolish_censoring = true;

    double q_at(int k) const { return at(q, k); }
    double m_at(int k) const { return at(m, k); }
    void validate(int K) const;

private:
    static double at(const std::vector<double>& v, int k) {
        if (v.size() == 1) return v[0];
        return v.at(static_cast<std::size_t>(k) - 1);
    }
};

// g0: no intervention; g1: abolish inferior; g2/g3: expand inferior by
// 25%/50%. All abolish censoring.
RegimeSpec regime_preset(const std::string& name);

// Interval-level resolution of a regime's constraints into post-intervention
// utilization targets and density scaling factors.
//
//   aleph = 1 if the requested utilization does not exceed the eligible mass
//           (target is the request), else 0 (target is the eligible mass and
//           every eligible record is treated with certainty);
//   beth  = 1 if the natural utilization exceeds the target (the treated side
//           of the conditional density is scaled), else 0 (the untreated side
//           is scaled).
struct ConstraintResolution {
    double target_B = 0.0;
    double target_H = 0.0;
    bool aleph_B = true, aleph_H = true;
    bool beth_B = false, beth_H = false;
    // Scaling factors on the eligible scale: alpha_k(z, R_k=1), beta_k(z, S_k=1).
    // Ineligible records always get factor 1.
    double alpha = 1.0;
    double beta = 1.0;
};

// pi_B_obs / pi_H_obs: factual marginals P(B_k=1), P(H_k=1).
// pi_B_nat / pi_H_nat: natural-value marginals under the regime.
// pi_R / pi_S: eligibility masses under the regime.
// Throws InfeasibleConstraintError when a scaling ratio is unbounded.
ConstraintResolution resolve_constraints(double q_k, double m_k, double pi_B_obs,
                                         double pi_H_obs, double pi_B_nat, double pi_H_nat,
                                         double pi_R, double pi_S);

// Intervention density of receiving treatment for an eligible record whose
// factual conditional density is f1.
double intervention_density(double alpha, bool beth, double f1);

// Per-interval weight factor for an eligible record with observed level x.
// Throws PositivityError-free plain NumericError variants are mapped by the
// caller, which owns the (k, z, subject) context.
double weight_factor(double alpha, bool beth, double f1, bool x);

}  // namespace proprep
