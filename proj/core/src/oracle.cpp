#include "proprep/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "proprep/util.hpp"

namespace proprep {

namespace {

// One alive trajectory prefix in a forward pass.
struct State {
    std::vector<int> ls;
    TreatState treat;
    double mass = 0.0;
    // Cumulative weights (used by the weighted factual pass only).
    double wb = 1.0, wh = 1.0, wc = 1.0;
};

void check_bound(std::size_t states, std::uint64_t bound) {
    if (states > bound)
        throw StateSpaceError("trajectory-prefix state count " + std::to_string(states) +
                              " exceeds the enumeration bound " + std::to_string(bound));
}

// Factual marginals P(B_k=1), P(H_k=1) with censoring attrition, plus the
// factual cumulative incidence (meaningful only without censoring).
struct FactualMarginals {
    std::vector<double> pi_B, pi_H, risk;
};

FactualMarginals factual_pass(const DiscreteDGM& dgm, int K, std::uint64_t bound) {
    FactualMarginals out;
    out.pi_B.assign(K + 1, 0.0);
    out.pi_H.assign(K + 1, 0.0);
    out.risk.assign(K + 1, 0.0);
    std::vector<State> states{State{{}, {}, 1.0}};
    KahanSum cum_risk;
    for (int k = 1; k <= K; ++k) {
        // L-step
        std::vector<State> next;
        for (const State& s : states) {
            const auto& row = dgm.p_l(k, s.ls, s.treat);
            for (std::size_t l = 0; l < row.size(); ++l) {
                if (row[l] == 0.0) continue;
                State ns = s;
                ns.ls.push_back(static_cast<int>(l));
                ns.mass = s.mass * row[l];
                next.push_back(std::move(ns));
            }
        }
        states = std::move(next);
        check_bound(states.size(), bound);

        // B-step
        next.clear();
        KahanSum piB;
        for (const State& s : states) {
            if (s.treat.none()) {
                const double f = dgm.p_b(k, s.ls);
                piB.add(s.mass * f);
                if (f > 0.0) {
                    State treated = s;
                    treated.treat = {1, k};
                    treated.mass = s.mass * f;
                    next.push_back(std::move(treated));
                }
                if (f < 1.0) {
                    State untreated = s;
                    untreated.mass = s.mass * (1.0 - f);
                    next.push_back(std::move(untreated));
                }
            } else {
                next.push_back(s);
            }
        }
        out.pi_B[k] = piB.value();
        states = std::move(next);
        check_bound(states.size(), bound);

        // H-step
        next.clear();
        KahanSum piH;
        for (const State& s : states) {
            if (s.treat.none()) {
                const double f = dgm.p_h(k, s.ls);
                piH.add(s.mass * f);
                if (f > 0.0) {
                    State treated = s;
                    treated.treat = {2, k};
                    treated.mass = s.mass * f;
                    next.push_back(std::move(treated));
                }
                if (f < 1.0) {
                    State untreated = s;
                    untreated.mass = s.mass * (1.0 - f);
                    next.push_back(std::move(untreated));
                }
            } else {
                next.push_back(s);
            }
        }
        out.pi_H[k] = piH.value();
        states = std::move(next);
        check_bound(states.size(), bound);

        // C-step: censored mass leaves the risk set entirely.
        if (dgm.censoring) {
            for (State& s : states) {
                if (s.treat.none()) s.mass *= 1.0 - dgm.p_c(k, s.ls);
            }
        }

        // Y-step
        for (State& s : states) {
            const double h = dgm.p_y(k, s.ls, s.treat);
            cum_risk.add(s.mass * h);
            s.mass *= 1.0 - h;
        }
        out.risk[k] = cum_risk.value();
        std::erase_if(states, [](const State& s) { return s.mass == 0.0; });
    }
    return out;
}

}  // namespace

OracleResult gformula_risk(const DiscreteDGM& dgm, const RegimeSpec& regime, int K,
                           std::uint64_t state_bound) {
    if (K < 1 || K > dgm.K) throw ConfigError("oracle horizon outside the DGM horizon");
    regime.validate(K);
    const FactualMarginals factual = factual_pass(dgm, K, state_bound);

    OracleResult out;
    out.risk.assign(K + 1, 0.0);
    out.intervals.resize(K + 1);

    std::vector<State> states{State{{}, {}, 1.0}};
    KahanSum cum_risk;
    for (int k = 1; k <= K; ++k) {
        OracleIntervalInfo& info = out.intervals[k];
        info.pi_B_obs = factual.pi_B[k];
        info.pi_H_obs = factual.pi_H[k];

        // L-step (censoring abolished under the regime).
        std::vector<State> next;
        for (const State& s : states) {
            const auto& row = dgm.p_l(k, s.ls, s.treat);
            for (std::size_t l = 0; l < row.size(); ++l) {
                if (row[l] == 0.0) continue;
                State ns = s;
                ns.ls.push_back(static_cast<int>(l));
                ns.mass = s.mass * row[l];
                next.push_back(std::move(ns));
            }
        }
        states = std::move(next);
        check_bound(states.size(), state_bound);

        // Natural-value marginals for the B arm, then resolve and intervene.
        {
            KahanSum piR, piBnat;
            for (const State& s : states) {
                if (!s.treat.none()) continue;
                piR.add(s.mass);
                piBnat.add(s.mass * dgm.p_b(k, s.ls));
            }
            info.f_R = piR.value();
            info.f_B_nat = piBnat.value();
        }
        // The H components of the resolution are filled after the B-step;
        // resolve_arm order inside resolve_constraints matches the interval's
        // topological order because the B resolution never reads pi_S/pi_H.
        ConstraintResolution res_b =
            resolve_constraints(regime.q_at(k), 0.0, info.pi_B_obs, 0.0, info.f_B_nat, 0.0,
                                std::min(1.0, info.f_R), 1.0);
        next.clear();
        for (const State& s : states) {
            if (s.treat.none()) {
                const double f = dgm.p_b(k, s.ls);
                const double fplus = intervention_density(res_b.alpha, res_b.beth_B, f);
                if (fplus > 0.0) {
                    State treated = s;
                    treated.treat = {1, k};
                    treated.mass = s.mass * fplus;
                    next.push_back(std::move(treated));
                }
                if (fplus < 1.0) {
                    State untreated = s;
                    untreated.mass = s.mass * (1.0 - fplus);
                    next.push_back(std::move(untreated));
                }
            } else {
                next.push_back(s);
            }
        }
        states = std::move(next);
        check_bound(states.size(), state_bound);

        // H arm.
        {
            KahanSum piS, piHnat;
            for (const State& s : states) {
                if (!s.treat.none()) continue;
                piS.add(s.mass);
                piHnat.add(s.mass * dgm.p_h(k, s.ls));
            }
            info.f_S = piS.value();
            info.f_H_nat = piHnat.value();
        }
        ConstraintResolution res_h =
            resolve_constraints(0.0, regime.m_at(k), 0.0, info.pi_H_obs, 0.0, info.f_H_nat, 1.0,
                                std::min(1.0, info.f_S));
        info.res.target_B = res_b.target_B;
        info.res.aleph_B = res_b.aleph_B;
        info.res.beth_B = res_b.beth_B;
        info.res.alpha = res_b.alpha;
        info.res.target_H = res_h.target_H;
        info.res.aleph_H = res_h.aleph_H;
        info.res.beth_H = res_h.beth_H;
        info.res.beta = res_h.beta;

        next.clear();
        for (const State& s : states) {
            if (s.treat.none()) {
                const double f = dgm.p_h(k, s.ls);
                const double fplus = intervention_density(res_h.beta, res_h.beth_H, f);
                if (fplus > 0.0) {
                    State treated = s;
                    treated.treat = {2, k};
                    treated.mass = s.mass * fplus;
                    next.push_back(std::move(treated));
                }
                if (fplus < 1.0) {
                    State untreated = s;
                    untreated.mass = s.mass * (1.0 - fplus);
                    next.push_back(std::move(untreated));
                }
            } else {
                next.push_back(s);
            }
        }
        states = std::move(next);
        check_bound(states.size(), state_bound);

        // Y-step.
        for (State& s : states) {
            const double h = dgm.p_y(k, s.ls, s.treat);
            cum_risk.add(s.mass * h);
            s.mass *= 1.0 - h;
        }
        out.risk[k] = cum_risk.value();
        std::erase_if(states, [](const State& s) { return s.mass == 0.0; });
    }
    out.risk.erase(out.risk.begin());
    out.intervals.erase(out.intervals.begin());
    return out;
}

namespace {

// Shared machinery for the weighted factual passes: hazard representation and
// constraint checks both enumerate the factual world carrying cumulative
// weights, with the per-interval scaling factors fixed by the recursion.
struct WeightedAccumulators {
    // Per (k, v): hazard numerator/denominator.
    std::vector<std::vector<KahanSum>> num, den;
    // Constraint sums per k.
    std::vector<KahanSum> wB, wH, wBnat, wHnat, wR, wS;
};

void weighted_factual_pass(const DiscreteDGM& dgm, int K,
                           const std::vector<OracleIntervalInfo>& resolved, int n_v,
                           std::uint64_t bound, WeightedAccumulators& acc) {
    std::vector<State> states{State{{}, {}, 1.0}};
    for (int k = 1; k <= K; ++k) {
        const ConstraintResolution& res = resolved[static_cast<std::size_t>(k) - 1].res;

        // L-step.
        std::vector<State> next;
        for (const State& s : states) {
            const auto& row = dgm.p_l(k, s.ls, s.treat);
            for (std::size_t l = 0; l < row.size(); ++l) {
                if (row[l] == 0.0) continue;
                State ns = s;
                ns.ls.push_back(static_cast<int>(l));
                ns.mass = s.mass * row[l];
                next.push_back(std::move(ns));
            }
        }
        states = std::move(next);
        check_bound(states.size(), bound);

        // Eligibility aggregates use weights through k-1.
        for (const State& s : states) {
            if (s.treat.none()) acc.wR[k].add(s.mass * s.wb * s.wh * s.wc);
        }

        // B-step: branch on the factual density, update W_B with the
        // intervention factor.
        next.clear();
        for (const State& s : states) {
            if (s.treat.none()) {
                const double f = dgm.p_b(k, s.ls);
                acc.wBnat[k].add(s.mass * f * s.wb * s.wh * s.wc);
                if (f > 0.0) {
                    State treated = s;
                    treated.treat = {1, k};
                    treated.mass = s.mass * f;
                    treated.wb = s.wb * weight_factor(res.alpha, res.beth_B, f, true);
                    acc.wB[k].add(treated.mass * treated.wb * s.wh * s.wc);
                    next.push_back(std::move(treated));
                }
                if (f < 1.0) {
                    State untreated = s;
                    untreated.mass = s.mass * (1.0 - f);
                    untreated.wb = s.wb * weight_factor(res.alpha, res.beth_B, f, false);
                    next.push_back(std::move(untreated));
                }
            } else {
                next.push_back(s);
            }
        }
        states = std::move(next);
        check_bound(states.size(), bound);

        for (const State& s : states) {
            if (s.treat.none()) acc.wS[k].add(s.mass * s.wb * s.wh * s.wc);
        }

        // H-step.
        next.clear();
        for (const State& s : states) {
            if (s.treat.none()) {
                const double f = dgm.p_h(k, s.ls);
                acc.wHnat[k].add(s.mass * f * s.wb * s.wh * s.wc);
                if (f > 0.0) {
                    State treated = s;
                    treated.treat = {2, k};
                    treated.mass = s.mass * f;
                    treated.wh = s.wh * weight_factor(res.beta, res.beth_H, f, true);
                    acc.wH[k].add(treated.mass * s.wb * treated.wh * s.wc);
                    next.push_back(std::move(treated));
                }
                if (f < 1.0) {
                    State untreated = s;
                    untreated.mass = s.mass * (1.0 - f);
                    untreated.wh = s.wh * weight_factor(res.beta, res.beth_H, f, false);
                    next.push_back(std::move(untreated));
                }
            } else {
                next.push_back(s);
            }
        }
        states = std::move(next);
        check_bound(states.size(), bound);

        // C-step: only uncensored mass continues; the censoring weight
        // removes the attrition.
        if (dgm.censoring) {
            for (State& s : states) {
                if (!s.treat.none()) continue;  // treated subjects stay uncensored
                const double pc = dgm.p_c(k, s.ls);
                if (pc >= 1.0)
                    throw NumericError("censoring hazard 1 leaves no uncensored mass at k=" +
                                       std::to_string(k));
                s.mass *= 1.0 - pc;
                s.wc /= 1.0 - pc;
            }
        }

        // Y-step: hazard-representation aggregates, then survival.
        for (State& s : states) {
            const int v = n_v > 1 ? s.ls[0] : 0;
            const double w = s.wb * s.wh * s.wc;
            const double h = dgm.p_y(k, s.ls, s.treat);
            acc.den[k][v].add(s.mass * w);
            acc.num[k][v].add(s.mass * h * w);
            s.mass *= 1.0 - h;
        }
        std::erase_if(states, [](const State& s) { return s.mass == 0.0; });
    }
}

WeightedAccumulators run_weighted_pass(const DiscreteDGM& dgm, const RegimeSpec& regime, int K,
                                       int n_v, std::uint64_t bound,
                                       std::vector<OracleIntervalInfo>& resolved_out) {
    OracleResult forward = gformula_risk(dgm, regime, K, bound);
    resolved_out = std::move(forward.intervals);
    WeightedAccumulators acc;
    acc.num.assign(K + 1, std::vector<KahanSum>(n_v));
    acc.den.assign(K + 1, std::vector<KahanSum>(n_v));
    acc.wB.assign(K + 1, {});
    acc.wH.assign(K + 1, {});
    acc.wBnat.assign(K + 1, {});
    acc.wHnat.assign(K + 1, {});
    acc.wR.assign(K + 1, {});
    acc.wS.assign(K + 1, {});
    weighted_factual_pass(dgm, K, resolved_out, n_v, bound, acc);
    return acc;
}

}  // namespace

std::vector<double> gformula_hazard_repr(const DiscreteDGM& dgm, const RegimeSpec& regime, int K,
                                         VPartition v, std::uint64_t state_bound) {
    const int n_v = v == VPartition::FullL1 ? dgm.l_levels.at(0) : 1;
    std::vector<OracleIntervalInfo> resolved;
    WeightedAccumulators acc = run_weighted_pass(dgm, regime, K, n_v, state_bound, resolved);

    // Marginal distribution of V = L_1 (factual == counterfactual at k=1).
    std::vector<double> fv(n_v, 1.0);
    if (n_v > 1) fv = dgm.p_l(1, {}, {});

    std::vector<double> risk(K, 0.0);
    for (int vi = 0; vi < n_v; ++vi) {
        double survival = 1.0;
        double cum = 0.0;
        for (int k = 1; k <= K; ++k) {
            const double den = acc.den[k][vi].value();
            const double lambda = den > 0.0 ? acc.num[k][vi].value() / den : 0.0;
            cum += survival * lambda;
            survival *= 1.0 - lambda;
            risk[k - 1] += fv[vi] * cum;
        }
    }
    return risk;
}

std::vector<ConstraintCheckRow> check_constraints(const DiscreteDGM& dgm, const RegimeSpec& regime,
                                                  int K, std::uint64_t state_bound) {
    std::vector<OracleIntervalInfo> resolved;
    WeightedAccumulators acc = run_weighted_pass(dgm, regime, K, 1, state_bound, resolved);
    std::vector<ConstraintCheckRow> rows(K);
    for (int k = 1; k <= K; ++k) {
        ConstraintCheckRow& row = rows[k - 1];
        const OracleIntervalInfo& info = resolved[k - 1];
        row.k = k;
        row.weighted_B = acc.wB[k].value();
        row.weighted_H = acc.wH[k].value();
        row.weighted_B_nat = acc.wBnat[k].value();
        row.weighted_H_nat = acc.wHnat[k].value();
        row.weighted_R = acc.wR[k].value();
        row.weighted_S = acc.wS[k].value();
        row.target_B = info.res.target_B;
        row.target_H = info.res.target_H;
        row.aleph_B = info.res.aleph_B;
        row.aleph_H = info.res.aleph_H;
        row.beth_B = info.res.beth_B;
        row.beth_H = info.res.beth_H;
    }
    return rows;
}

std::vector<double> treat_all_eligible_risk(const DiscreteDGM& dgm, int K,
                                            std::uint64_t state_bound) {
    std::vector<State> states{State{{}, {}, 1.0}};
    std::vector<double> risk(K, 0.0);
    KahanSum cum;
    for (int k = 1; k <= K; ++k) {
        std::vector<State> next;
        for (const State& s : states) {
            const auto& row = dgm.p_l(k, s.ls, s.treat);
            for (std::size_t l = 0; l < row.size(); ++l) {
                if (row[l] == 0.0) continue;
                State ns = s;
                ns.ls.push_back(static_cast<int>(l));
                ns.mass = s.mass * row[l];
                if (ns.treat.none()) ns.treat = {1, k};  // treat everyone eligible
                next.push_back(std::move(ns));
            }
        }
        states = std::move(next);
        check_bound(states.size(), state_bound);
        for (State& s : states) {
            const double h = dgm.p_y(k, s.ls, s.treat);
            cum.add(s.mass * h);
            s.mass *= 1.0 - h;
        }
        risk[k - 1] = cum.value();
    }
    return risk;
}

std::vector<double> factual_risk(const DiscreteDGM& dgm, int K, std::uint64_t state_bound) {
    if (dgm.censoring)
        throw ConfigError("factual risk is undefined for DGMs with censoring");
    FactualMarginals f = factual_pass(dgm, K, state_bound);
    f.risk.erase(f.risk.begin());
    f.risk.resize(K);
    return f.risk;
}

}  // namespace proprep
