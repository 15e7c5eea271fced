#include "proprep/basis.hpp"

#include <algorithm>
#include <cmath>

#include "proprep/util.hpp"

namespace proprep {

void SplineSpec::validate() const {
    if (degenerate) return;
    for (std::size_t i = 1; i < internal_knots.size(); ++i)
        if (!(internal_knots[i - 1] < internal_knots[i]))
            throw ConfigError("internal knots must be strictly increasing");
    if (!boundary_knots.empty()) {
        if (boundary_knots.size() != 2 || !(boundary_knots[0] < boundary_knots[1]))
            throw ConfigError("boundary knots must be an increasing pair");
        if (!internal_knots.empty() &&
            (!(boundary_knots[0] < internal_knots.front()) ||
             !(internal_knots.back() < boundary_knots[1])))
            throw ConfigError("internal knots must lie strictly inside the boundary knots");
    }
}

std::vector<double> spline_basis(double x, const SplineSpec& spec) {
    std::vector<double> out;
    out.reserve(spec.degenerate ? 3 : spec.width());
    out.push_back(x);
    out.push_back(x * x);
    out.push_back(x * x * x);
    if (spec.degenerate) return out;
    for (double xi : spec.internal_knots) {
        double d = x - xi;
        out.push_back(d > 0.0 ? d * d * d : 0.0);
    }
    for (double xi : spec.boundary_knots) {
        double d = x - xi;
        out.push_back(d > 0.0 ? d : 0.0);
    }
    return out;
}

std::vector<double> time_basis(int k, const SplineSpec& spec) {
    if (k < 1) throw ConfigError("time basis evaluated at k < 1");
    return spline_basis(static_cast<double>(k), spec);
}

SplineSpec knots_from_percentiles(std::vector<double> values, const PercentileKnots& pct) {
    SplineSpec spec;
    if (values.empty()) throw ConfigError("cannot place spline knots on an empty sample");
    const double lo_i = quantile_interp(values, pct.inner_lo / 100.0);
    const double hi_i = quantile_interp(values, pct.inner_hi / 100.0);
    const double lo_b = quantile_interp(values, pct.outer_lo / 100.0);
    const double hi_b = quantile_interp(std::move(values), pct.outer_hi / 100.0);
    if (!(lo_b < lo_i && lo_i < hi_i && hi_i < hi_b)) {
        spec.degenerate = true;  // ties between percentiles: polynomial-only
        return spec;
    }
    spec.internal_knots = {lo_i, hi_i};
    spec.boundary_knots = {lo_b, hi_b};
    return spec;
}

namespace {

const CovariateSpec& covariate_or_throw(const PanelSchema& schema, const std::string& name) {
    int idx = schema.covariate_index(name);
    if (idx < 0) throw ConfigError("unknown covariate '" + name + "' in formula");
    return schema.covariates[idx];
}

std::vector<std::string> spline_column_names(const std::string& base, const SplineSpec& spec) {
    std::vector<std::string> names{base, base + "^2", base + "^3"};
    if (spec.degenerate) return names;
    for (double xi : spec.internal_knots) names.push_back(base + "_tI(" + format_double(xi) + ")");
    for (double xi : spec.boundary_knots) names.push_back(base + "_tB(" + format_double(xi) + ")");
    return names;
}

// Dummy columns of a covariate (single column for numeric).
std::vector<std::string> covariate_column_names(const CovariateSpec& cov) {
    if (cov.kind == CovariateKind::Numeric) return {cov.name};
    std::vector<std::string> names;
    int ref = cov.reference_index();
    for (std::size_t l = 0; l < cov.levels.size(); ++l)
        if (static_cast<int>(l) != ref) names.push_back(cov.name + "=" + cov.levels[l]);
    return names;
}

void append_covariate_values(const CovariateSpec& cov, double value, std::span<double> out,
                             std::size_t& pos) {
    if (cov.kind == CovariateKind::Numeric) {
        out[pos++] = value;
        return;
    }
    int ref = cov.reference_index();
    for (std::size_t l = 0; l < cov.levels.size(); ++l) {
        if (static_cast<int>(l) == ref) continue;
        out[pos++] = (static_cast<int>(l) == static_cast<int>(value)) ? 1.0 : 0.0;
    }
}

}  // namespace

BoundFormula bind_formula(const FormulaSpec& spec, const PanelDataset& panel, int n_regimes) {
    BoundFormula bf;
    bf.spec = spec;
    bf.n_regimes = n_regimes;
    bf.resolved_splines.resize(spec.terms.size());
    if (spec.saturated) {
        for (const auto& cov : panel.schema.covariates)
            if (cov.kind == CovariateKind::Numeric)
                throw ConfigError("saturated formulas require discrete covariates ('" + cov.name +
                                  "' is numeric)");
        return bf;
    }
    if (spec.intercept) bf.columns.push_back("(intercept)");

    // Column order: time basis, covariates in schema order, regime dummies,
    // interactions last.
    auto emit_kind = [&](TermKind kind) {
        for (std::size_t t = 0; t < spec.terms.size(); ++t) {
            const FormulaTerm& term = spec.terms[t];
            if (term.kind != kind) continue;
            switch (kind) {
                case TermKind::TimeLinear:
                    bf.columns.push_back("k");
                    break;
                case TermKind::TimeSpline: {
                    term.spline.validate();
                    for (auto& n : spline_column_names("k", term.spline)) bf.columns.push_back(n);
                    break;
                }
                case TermKind::Covariate: {
                    const auto& cov = covariate_or_throw(panel.schema, term.covariate);
                    for (auto& n : covariate_column_names(cov)) bf.columns.push_back(n);
                    break;
                }
                case TermKind::CovariateSpline: {
                    const auto& cov = covariate_or_throw(panel.schema, term.covariate);
                    if (cov.kind != CovariateKind::Numeric)
                        throw ConfigError("spline term requires numeric covariate '" + cov.name + "'");
                    std::vector<double> values;
                    for (const auto& s : panel.subjects)
                        for (const auto& r : s.records)
                            values.push_back(r.covs[panel.schema.covariate_index(cov.name)]);
                    bf.resolved_splines[t] = knots_from_percentiles(std::move(values), term.percentiles);
                    for (auto& n : spline_column_names(cov.name, bf.resolved_splines[t]))
                        bf.columns.push_back(n);
                    break;
                }
                case TermKind::Regime: {
                    if (n_regimes < 2)
                        throw ConfigError("regime term in a formula bound without regimes");
                    for (int z = 1; z < n_regimes; ++z)
                        bf.columns.push_back("Z=" + std::to_string(z));
                    break;
                }
                case TermKind::RegimeByTime: {
                    if (n_regimes < 2)
                        throw ConfigError("regime term in a formula bound without regimes");
                    for (int z = 1; z < n_regimes; ++z)
                        bf.columns.push_back("Z=" + std::to_string(z) + ":k");
                    break;
                }
                case TermKind::InteractionTime: {
                    const auto& cov = covariate_or_throw(panel.schema, term.covariate);
                    for (auto& n : covariate_column_names(cov)) bf.columns.push_back(n + ":k");
                    break;
                }
                case TermKind::InteractionTimeSpline: {
                    const auto& cov = covariate_or_throw(panel.schema, term.covariate);
                    term.spline.validate();
                    for (auto& base : covariate_column_names(cov))
                        for (auto& n : spline_column_names("k", term.spline))
                            bf.columns.push_back(base + ":" + n);
                    break;
                }
            }
        }
    };
    emit_kind(TermKind::TimeLinear);
    emit_kind(TermKind::TimeSpline);
    emit_kind(TermKind::Covariate);
    emit_kind(TermKind::CovariateSpline);
    emit_kind(TermKind::Regime);
    emit_kind(TermKind::RegimeByTime);
    emit_kind(TermKind::InteractionTime);
    emit_kind(TermKind::InteractionTimeSpline);
    return bf;
}

void design_row(const BoundFormula& bf, const PanelSchema& schema, const PanelRecord& rec, int z,
                std::span<double> out) {
    std::size_t pos = 0;
    if (bf.spec.intercept) out[pos++] = 1.0;

    auto emit_kind = [&](TermKind kind) {
        for (std::size_t t = 0; t < bf.spec.terms.size(); ++t) {
            const FormulaTerm& term = bf.spec.terms[t];
            if (term.kind != kind) continue;
            switch (kind) {
                case TermKind::TimeLinear:
                    out[pos++] = static_cast<double>(rec.k);
                    break;
                case TermKind::TimeSpline:
                    for (double v : time_basis(rec.k, term.spline)) out[pos++] = v;
                    break;
                case TermKind::Covariate: {
                    int idx = schema.covariate_index(term.covariate);
                    append_covariate_values(schema.covariates[idx], rec.covs[idx], out, pos);
                    break;
                }
                case TermKind::CovariateSpline: {
                    int idx = schema.covariate_index(term.covariate);
                    for (double v : spline_basis(rec.covs[idx], bf.resolved_splines[t]))
                        out[pos++] = v;
                    break;
                }
                case TermKind::Regime:
                    for (int zz = 1; zz < bf.n_regimes; ++zz) out[pos++] = (zz == z) ? 1.0 : 0.0;
                    break;
                case TermKind::RegimeByTime:
                    for (int zz = 1; zz < bf.n_regimes; ++zz)
                        out[pos++] = (zz == z) ? static_cast<double>(rec.k) : 0.0;
                    break;
                case TermKind::InteractionTime: {
                    int idx = schema.covariate_index(term.covariate);
                    const std::size_t before = pos;
                    append_covariate_values(schema.covariates[idx], rec.covs[idx], out, pos);
                    for (std::size_t i = before; i < pos; ++i) out[i] *= static_cast<double>(rec.k);
                    break;
                }
                case TermKind::InteractionTimeSpline: {
                    int idx = schema.covariate_index(term.covariate);
                    const CovariateSpec& cov = schema.covariates[idx];
                    std::vector<double> gk = time_basis(rec.k, term.spline);
                    if (cov.kind == CovariateKind::Numeric) {
                        for (double v : gk) out[pos++] = rec.covs[idx] * v;
                    } else {
                        int ref = cov.reference_index();
                        for (std::size_t l = 0; l < cov.levels.size(); ++l) {
                            if (static_cast<int>(l) == ref) continue;
                            double d = (static_cast<int>(l) == static_cast<int>(rec.covs[idx])) ? 1.0 : 0.0;
                            for (double v : gk) out[pos++] = d * v;
                        }
                    }
                    break;
                }
            }
        }
    };
    emit_kind(TermKind::TimeLinear);
    emit_kind(TermKind::TimeSpline);
    emit_kind(TermKind::Covariate);
    emit_kind(TermKind::CovariateSpline);
    emit_kind(TermKind::Regime);
    emit_kind(TermKind::RegimeByTime);
    emit_kind(TermKind::InteractionTime);
    emit_kind(TermKind::InteractionTimeSpline);
}

std::vector<std::vector<double>> build_design(const BoundFormula& bf, const PanelDataset& panel) {
    std::vector<std::vector<double>> rows;
    rows.reserve(panel.n_records());
    for (const auto& subj : panel.subjects) {
        for (const auto& rec : subj.records) {
            std::vector<double> row(bf.width());
            design_row(bf, panel.schema, rec, 0, row);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace proprep
