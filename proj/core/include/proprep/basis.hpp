#pragma once

#include <span>
#include <string>
#include <vector>

#include "proprep/panel.hpp"

namespace proprep {

// Truncated-power natural cubic spline: cubic truncations at internal knots,
// linear truncations at boundary knots, on top of {x, x^2, x^3}.
struct SplineSpec {
    std::vector<double> internal_knots;   // strictly increasing
    std::vector<double> boundary_knots;   // empty or {lo, hi} with lo < knots < hi
    bool degenerate = false;              // collapsed to the polynomial-only basis

    std::size_t width() const { return 3 + internal_knots.size() + boundary_knots.size(); }
    void validate() const;
};

// Basis vector {x, x^2, x^3, (x-xi_I)^3_+ ..., (x-xi_B)_+ ...}.
std::vector<double> spline_basis(double x, const SplineSpec& spec);

// time_basis(k) evaluates the same construction on the interval index.
std::vector<double> time_basis(int k, const SplineSpec& spec);

struct PercentileKnots {
    double inner_lo = 35.0;
    double inner_hi = 65.0;
    double outer_lo = 5.0;
    double outer_hi = 95.0;
};

// Places internal knots at the inner percentiles and boundary knots at the
// outer percentiles of the observed values. Collapses to the polynomial-only
// basis (degenerate=true) when the percentiles do not strictly separate.
SplineSpec knots_from_percentiles(std::vector<double> values, const PercentileKnots& pct);

enum class TermKind {
    TimeLinear,         // raw k
    TimeSpline,         // g(k) block
    Covariate,          // numeric column or categorical dummies
    CovariateSpline,    // percentile-knot spline of a numeric covariate
    InteractionTime,    // covariate * k
    InteractionTimeSpline,  // covariate * g(k) block
    Regime,             // dummies per non-reference regime (gamma only)
    RegimeByTime,       // regime dummies * k (gamma only)
};

struct FormulaTerm {
    TermKind kind;
    std::string covariate;      // covariate-based terms
    SplineSpec spline;          // TimeSpline / InteractionTimeSpline knots
    PercentileKnots percentiles;  // CovariateSpline
};

struct FormulaSpec {
    bool intercept = true;
    // Saturated mode bypasses the design entirely: fits become empirical
    // frequency tables keyed by (k, covariate history).
    bool saturated = false;
    std::vector<FormulaTerm> terms;
};

// A formula resolved against a concrete panel: percentile knots frozen,
// dummy layouts fixed, column names assigned. Reused verbatim for prediction.
struct BoundFormula {
    FormulaSpec spec;
    std::vector<SplineSpec> resolved_splines;  // per term (CovariateSpline only)
    std::vector<std::string> columns;
    int n_regimes = 1;  // >1 only for gamma formulas

    std::size_t width() const { return columns.size(); }
};

// Resolves covariate references and percentile knots against the panel.
// `n_regimes` > 1 enables Regime/RegimeByTime terms (regime 0 is reference).
BoundFormula bind_formula(const FormulaSpec& spec, const PanelDataset& panel, int n_regimes = 1);

// One design row. `z` indexes the regime clone (ignored when n_regimes == 1).
void design_row(const BoundFormula& bf, const PanelSchema& schema, const PanelRecord& rec, int z,
                std::span<double> out);

// Row-per-record design matrix over all records of the panel (z = 0).
std::vector<std::vector<double>> build_design(const BoundFormula& bf, const PanelDataset& panel);

}  // namespace proprep
