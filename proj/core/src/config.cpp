#include "proprep/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace proprep {

namespace {
using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

SplineSpec parse_spline(const json& j) {
    SplineSpec spec;
    spec.internal_knots = j.value("internal_knots", std::vector<double>{});
    spec.boundary_knots = j.value("boundary_knots", std::vector<double>{});
    spec.validate();
    return spec;
}

FormulaSpec parse_formula(const json& j) {
    FormulaSpec spec;
    spec.intercept = j.value("intercept", true);
    spec.saturated = j.value("saturated", false);
    if (spec.saturated) return spec;
    for (const auto& t : j.value("terms", json::array())) {
        FormulaTerm term;
        const std::string type = t.at("type").get<std::string>();
        if (type == "time") {
            term.kind = TermKind::TimeLinear;
        } else if (type == "time_spline") {
            term.kind = TermKind::TimeSpline;
            term.spline = parse_spline(t);
        } else if (type == "covariate") {
            term.kind = TermKind::Covariate;
            term.covariate = t.at("name").get<std::string>();
        } else if (type == "covariate_spline") {
            term.kind = TermKind::CovariateSpline;
            term.covariate = t.at("name").get<std::string>();
            if (t.contains("percentiles")) {
                const auto p = t.at("percentiles").get<std::vector<double>>();
                if (p.size() != 4)
                    throw ConfigError("percentiles must be [inner_lo, inner_hi, outer_lo, outer_hi]");
                term.percentiles = {p[0], p[1], p[2], p[3]};
            }
        } else if (type == "regime") {
            term.kind = TermKind::Regime;
        } else if (type == "regime_by_time") {
            term.kind = TermKind::RegimeByTime;
        } else if (type == "interaction") {
            term.covariate = t.at("name").get<std::string>();
            const std::string with = t.value("with", "time");
            if (with == "time") {
                term.kind = TermKind::InteractionTime;
            } else if (with == "time_spline") {
                term.kind = TermKind::InteractionTimeSpline;
                term.spline = parse_spline(t);
            } else {
                throw ConfigError("interaction 'with' must be time or time_spline");
            }
        } else {
            throw ConfigError("unknown formula term type '" + type + "'");
        }
        spec.terms.push_back(std::move(term));
    }
    return spec;
}

PanelSchema parse_schema(const json& j) {
    PanelSchema schema;
    for (const auto& c : j) {
        CovariateSpec cov;
        cov.name = c.at("name").get<std::string>();
        const std::string kind = c.value("kind", "numeric");
        if (kind == "numeric") {
            cov.kind = CovariateKind::Numeric;
        } else if (kind == "categorical") {
            cov.kind = CovariateKind::Categorical;
            cov.levels = c.at("levels").get<std::vector<std::string>>();
            cov.reference = c.value("reference", "");
            if (cov.levels.empty()) throw ConfigError("categorical '" + cov.name + "' needs levels");
            cov.reference_index();  // validates
        } else {
            throw ConfigError("covariate kind must be numeric or categorical");
        }
        cov.baseline = c.value("baseline", false);
        schema.covariates.push_back(std::move(cov));
    }
    return schema;
}

std::vector<double> parse_series(const json& j, const char* name) {
    if (j.is_number()) return {j.get<double>()};
    if (j.is_array()) return j.get<std::vector<double>>();
    throw ConfigError(std::string(name) + " must be a number or an array");
}

RegimeSpec parse_regime(const json& j) {
    if (j.contains("preset")) {
        RegimeSpec r = regime_preset(j.at("preset").get<std::string>());
        if (j.contains("label")) r.label = j.at("label").get<std::string>();
        return r;
    }
    RegimeSpec r;
    r.label = j.at("label").get<std::string>();
    if (j.contains("q")) r.q = parse_series(j.at("q"), "q");
    if (j.contains("m")) r.m = parse_series(j.at("m"), "m");
    r.abolish_censoring = j.value("abolish_censoring", true);
    return r;
}

ParametricDGM parse_parametric(const json& j) {
    ParametricDGM dgm;
    dgm.K = j.at("K").get<int>();
    for (const auto& b : j.value("baselines", json::array())) {
        ParametricDGM::Baseline bl;
        bl.name = b.at("name").get<std::string>();
        const std::string dist = b.value("dist", "normal");
        if (dist == "normal")
            bl.dist = ParametricDGM::Baseline::Dist::Normal;
        else if (dist == "uniform")
            bl.dist = ParametricDGM::Baseline::Dist::Uniform;
        else if (dist == "bernoulli")
            bl.dist = ParametricDGM::Baseline::Dist::Bernoulli;
        else
            throw ConfigError("baseline dist must be normal, uniform, or bernoulli");
        bl.a = b.value("a", 0.0);
        bl.b = b.value("b", 1.0);
        dgm.baselines.push_back(std::move(bl));
    }
    dgm.severity_name = j.value("severity_name", std::string{"severity"});
    dgm.severity_start_mu = j.value("severity_start_mu", 0.0);
    dgm.severity_start_sd = j.value("severity_start_sd", 1.0);
    dgm.severity_drift = j.value("severity_drift", 0.0);
    dgm.severity_sd = j.value("severity_sd", 0.5);
    auto parse_hazard = [](const json& h) {
        ParametricDGM::Hazard out;
        out.intercept = h.value("intercept", -3.0);
        out.per_k = h.value("per_k", 0.0);
        out.slopes = h.value("slopes", std::vector<double>{});
        out.effect_B = h.value("effect_B", 0.0);
        out.effect_H = h.value("effect_H", 0.0);
        return out;
    };
    dgm.treat_B = parse_hazard(j.at("treat_B"));
    dgm.treat_H = parse_hazard(j.at("treat_H"));
    dgm.death = parse_hazard(j.at("death"));
    if (j.contains("censor")) dgm.censor = parse_hazard(j.at("censor"));
    return dgm;
}

std::string join_path(const std::string& base, const std::string& rel) {
    if (rel.empty() || rel.front() == '/' || base.empty()) return rel;
    return base + "/" + rel;
}

}  // namespace

FormulaSpec parse_formula_json(const std::string& text) {
    try {
        return parse_formula(json::parse(text));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad formula: ") + e.what());
    }
}

RunConfig parse_run_config(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    try {
        RunConfig cfg;
        if (j.contains("input")) cfg.input = join_path(base_dir, j.at("input").get<std::string>());
        if (j.contains("covariates")) cfg.schema = parse_schema(j.at("covariates"));

        if (j.contains("models")) {
            const json& m = j.at("models");
            if (m.value("saturated", false)) {
                cfg.pipeline.formulas.phi_B.saturated = true;
                cfg.pipeline.formulas.phi_H.saturated = true;
                cfg.pipeline.formulas.phi_C.saturated = true;
            } else {
                if (m.contains("phi_B")) cfg.pipeline.formulas.phi_B = parse_formula(m.at("phi_B"));
                if (m.contains("phi_H")) cfg.pipeline.formulas.phi_H = parse_formula(m.at("phi_H"));
                if (m.contains("phi_C")) cfg.pipeline.formulas.phi_C = parse_formula(m.at("phi_C"));
            }
        }
        if (j.contains("gamma")) cfg.pipeline.gamma = parse_formula(j.at("gamma"));
        cfg.pipeline.v_names = j.value("V", std::vector<std::string>{});
        for (const auto& name : cfg.pipeline.v_names)
            if (cfg.schema.covariate_index(name) < 0)
                throw ConfigError("V references unknown covariate '" + name + "'");

        if (!j.contains("regimes") || j.at("regimes").empty())
            throw ConfigError("config must declare a nonempty regime list");
        for (const auto& r : j.at("regimes")) cfg.pipeline.regimes.push_back(parse_regime(r));

        if (j.contains("K")) cfg.pipeline.K = j.at("K").get<int>();
        if (j.contains("weight_cap") && !j.at("weight_cap").is_null())
            cfg.pipeline.weight_cap = j.at("weight_cap").get<double>();
        if (j.value("algorithm", "generalized") == "main_text")
            cfg.pipeline.weight_options.force_main_text = true;

        if (j.contains("bootstrap")) {
            cfg.bootstrap.B = j.at("bootstrap").value("B", 500);
            cfg.bootstrap.seed = j.at("bootstrap").value("seed", 1ULL);
        }
        if (j.contains("validate")) {
            cfg.validate.seed = j.at("validate").value("seed", cfg.validate.seed);
            cfg.validate.n_dgms = j.at("validate").value("n_dgms", cfg.validate.n_dgms);
        }
        cfg.oracle_bound = j.value("oracle_bound", cfg.oracle_bound);
        cfg.validate.state_bound = cfg.oracle_bound;
        cfg.threads = j.value("threads", 1);
        cfg.bootstrap.threads = cfg.threads;

        if (j.contains("simulate")) {
            const json& s = j.at("simulate");
            cfg.sim_n = s.at("n").get<int>();
            cfg.sim_seed = s.value("seed", 1ULL);
            if (s.contains("dgm")) {
                if (s.at("dgm").is_string())
                    cfg.sim_dgm = DiscreteDGM::from_json(
                        read_file(join_path(base_dir, s.at("dgm").get<std::string>())));
                else
                    cfg.sim_dgm = DiscreteDGM::from_json(s.at("dgm").dump());
            } else if (s.contains("parametric")) {
                cfg.sim_parametric = parse_parametric(s.at("parametric"));
            } else {
                throw ConfigError("simulate needs a 'dgm' or 'parametric' source");
            }
        }
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
}

RunConfig load_run_config(const std::string& path) {
    std::string base;
    const auto slash = path.find_last_of('/');
    if (slash != std::string::npos) base = path.substr(0, slash);
    return parse_run_config(read_file(path), base);
}

}  // namespace proprep
