#include "proprep/regime.hpp"

#include <cmath>

#include "proprep/util.hpp"

namespace proprep {

namespace {
// Guard below which a marginal in a scaling ratio is treated as zero.
constexpr double kMarginalGuard = 1e-12;

void check_unit_interval(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0 + 1e-9) || !std::isfinite(v))
        throw InfeasibleConstraintError(std::string(name) + " outside [0,1]: " + format_double(v));
}
}  // namespace

void RegimeSpec::validate(int K) const {
    auto check_series = [&](const std::vector<double>& v, const char* name) {
        if (v.empty()) throw ConfigError(std::string("regime '") + label + "': empty " + name + " series");
        if (v.size() != 1 && static_cast<int>(v.size()) != K)
            throw ConfigError("regime '" + label + "': " + name + " series must be scalar or length K=" +
                              std::to_string(K));
        for (double x : v)
            if (!(x >= 0.0) || !std::isfinite(x))
                throw ConfigError("regime '" + label + "': " + name + " multipliers must be >= 0");
    };
    check_series(q, "q");
    check_series(m, "m");
}

RegimeSpec regime_preset(const std::string& name) {
    RegimeSpec r;
    r.label = name;
    r.abolish_censoring = true;
    if (name == "g0") {
        r.q = {1.0};
        r.m = {1.0};
    } else if (name == "g1") {
        r.q = {1.0};
        r.m = {0.0};
    } else if (name == "g2") {
        r.q = {1.0};
        r.m = {1.25};
    } else if (name == "g3") {
        r.q = {1.0};
        r.m = {1.5};
    } else {
        throw ConfigError("unknown regime preset '" + name + "'");
    }
    return r;
}

namespace {

// Resolves one treatment arm; B and H share the algebra exactly.
void resolve_arm(double multiplier, double pi_obs, double pi_nat, double pi_elig,
                 double& target, bool& aleph, bool& beth, double& scale) {
    const double requested = multiplier * pi_obs;
    aleph = requested <= pi_elig;  // tie resolves to the ratio form
    target = aleph ? requested : pi_elig;
    beth = pi_nat > target;

    if (!aleph) {
        // Treat every eligible record with certainty.
        scale = 0.0;
        return;
    }
    if (beth) {
        if (pi_nat < kMarginalGuard)
            throw InfeasibleConstraintError(
                "natural utilization below guard while target is positive (target=" +
                format_double(target) + ")");
        scale = target / pi_nat;
        return;
    }
    // Scale the untreated side: alpha = (1 - target/pi_elig) / (1 - pi_nat/pi_elig).
    if (pi_elig < kMarginalGuard) {
        // Nobody eligible: the factor is never applied.
        scale = 1.0;
        return;
    }
    const double num = 1.0 - target / pi_elig;
    const double den = 1.0 - pi_nat / pi_elig;
    if (den < kMarginalGuard) {
        if (num < kMarginalGuard) {
            scale = 1.0;  // target, natural, and eligible mass all coincide
            return;
        }
        throw InfeasibleConstraintError(
            "untreated mass below guard: cannot scale utilization down to target=" +
            format_double(target));
    }
    scale = num / den;
}

}  // namespace

ConstraintResolution resolve_constraints(double q_k, double m_k, double pi_B_obs,
                                         double pi_H_obs, double pi_B_nat, double pi_H_nat,
                                         double pi_R, double pi_S) {
    check_unit_interval(pi_B_obs, "pi_B_obs");
    check_unit_interval(pi_H_obs, "pi_H_obs");
    check_unit_interval(pi_B_nat, "pi_B_nat");
    check_unit_interval(pi_H_nat, "pi_H_nat");
    check_unit_interval(pi_R, "pi_R");
    check_unit_interval(pi_S, "pi_S");
    if (pi_B_nat > pi_R + 1e-9)
        throw InfeasibleConstraintError("natural B utilization exceeds eligibility mass");
    if (pi_H_nat > pi_S + 1e-9)
        throw InfeasibleConstraintError("natural H utilization exceeds eligibility mass");

    ConstraintResolution res;
    resolve_arm(q_k, pi_B_obs, pi_B_nat, pi_R, res.target_B, res.aleph_B, res.beth_B, res.alpha);
    resolve_arm(m_k, pi_H_obs, pi_H_nat, pi_S, res.target_H, res.aleph_H, res.beth_H, res.beta);
    return res;
}

double intervention_density(double alpha, bool beth, double f1) {
    const double d = beth ? alpha * f1 : 1.0 - alpha * (1.0 - f1);
    if (d < -1e-12 || d > 1.0 + 1e-12)
        throw InfeasibleConstraintError("intervention density outside [0,1]: " + format_double(d));
    return std::min(1.0, std::max(0.0, d));
}

double weight_factor(double alpha, bool beth, double f1, bool x) {
    const double numerator_p1 = intervention_density(alpha, beth, f1);
    const double num = x ? numerator_p1 : 1.0 - numerator_p1;
    const double den = x ? f1 : 1.0 - f1;
    if (den < kProbClamp)
        throw NumericError("fitted factual density at the observed treatment level is zero");
    return num / den;
}

}  // namespace proprep
