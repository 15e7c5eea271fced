// proprep: counterfactual survival under resource-constrained treatment
// regimes. Subcommands: fit, simulate, validate, bootstrap.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <nlohmann/json.hpp>

#include "proprep/boot.hpp"
#include "proprep/checks.hpp"
#include "proprep/config.hpp"
#include "proprep/pipeline.hpp"
#include "proprep/sim.hpp"
#include "proprep/util.hpp"

namespace {

namespace fs = std::filesystem;
using namespace proprep;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitValidation = 5;

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
}

std::string risk_table(const std::vector<RiskCurve>& risks, const BootstrapResult* bands) {
    std::ostringstream out;
    out << "regime,k,risk,lo,hi\n";
    for (std::size_t z = 0; z < risks.size(); ++z) {
        for (std::size_t k = 0; k < risks[z].risk.size(); ++k) {
            out << risks[z].regime << ',' << (k + 1) << ',' << format_double(risks[z].risk[k]);
            if (bands) {
                out << ',' << format_double(bands->lo[z][k]) << ','
                    << format_double(bands->hi[z][k]);
            } else {
                out << ",,";
            }
            out << '\n';
        }
    }
    return out.str();
}

std::string utilization_table(const std::vector<UtilizationRow>& rows) {
    std::ostringstream out;
    out << "regime,k,util_B,util_H\n";
    for (const auto& row : rows)
        out << row.regime << ',' << row.k << ',' << format_double(row.util_B) << ','
            << format_double(row.util_H) << '\n';
    return out.str();
}

std::string summary_json(const PipelineResult& result) {
    nlohmann::json j;
    j["n_subjects"] = result.cloned.panel.n_subjects();
    j["n_rows"] = result.cloned.n_rows();
    j["K"] = result.cloned.panel.horizon;
    nlohmann::json regimes = nlohmann::json::array();
    for (const auto& r : result.cloned.regimes) regimes.push_back(r.label);
    j["regimes"] = std::move(regimes);
    if (result.msm.saturated) {
        j["msm"]["saturated"] = true;
    } else {
        j["msm"]["saturated"] = false;
        j["msm"]["converged"] = result.msm.glm->converged;
        j["msm"]["iterations"] = result.msm.glm->iterations;
        j["msm"]["loglik"] = result.msm.glm->loglik;
        nlohmann::json coef = nlohmann::json::object();
        for (std::size_t c = 0; c < result.msm.gamma.columns.size(); ++c)
            coef[result.msm.gamma.columns[c]] = result.msm.glm->coef[static_cast<int>(c)];
        j["msm"]["psi"] = std::move(coef);
    }
    return j.dump(2) + "\n";
}

void write_fit_outputs(const fs::path& out_dir, const PipelineResult& result,
                       const BootstrapResult* bands) {
    fs::create_directories(out_dir);
    write_text(out_dir / "risk.csv", risk_table(result.risks, bands));
    write_text(out_dir / "utilization.csv", utilization_table(result.utilization));
    write_text(out_dir / "diagnostics.csv",
               result.weights.dump_diagnostics(result.cloned.regimes));
    write_text(out_dir / "summary.json", summary_json(result));
    if (bands) {
        std::ostringstream diffs;
        diffs << "pair,k,lo,hi\n";
        for (const auto& band : bands->diff) {
            const std::string pair =
                bands->regime_labels[band.a] + "-" + bands->regime_labels[band.b];
            for (std::size_t k = 0; k < band.lo.size(); ++k)
                diffs << pair << ',' << (k + 1) << ',' << format_double(band.lo[k]) << ','
                      << format_double(band.hi[k]) << '\n';
        }
        write_text(out_dir / "diff_bands.csv", diffs.str());
    }
}

int dispatch(const std::string& command, const std::string& config_path,
             const std::string& out_dir, int threads_override,
             std::optional<std::uint64_t> seed_override) {
    RunConfig cfg = load_run_config(config_path);
    if (threads_override > 0) {
        cfg.threads = threads_override;
        cfg.bootstrap.threads = threads_override;
    }
    if (seed_override) {
        cfg.sim_seed = *seed_override;
        cfg.bootstrap.seed = *seed_override;
        cfg.validate.seed = *seed_override;
    }
    const fs::path out{out_dir};

    if (command == "fit") {
        PanelDataset panel = load_panel_file(cfg.input, cfg.schema);
        PipelineResult result = run_pipeline(std::move(panel), cfg.pipeline);
        write_fit_outputs(out, result, nullptr);
        return kExitOk;
    }
    if (command == "bootstrap") {
        PanelDataset panel = load_panel_file(cfg.input, cfg.schema);
        PipelineResult result = run_pipeline(panel, cfg.pipeline);
        BootstrapResult bands = bootstrap(panel, cfg.pipeline, cfg.bootstrap);
        write_fit_outputs(out, result, &bands);
        return kExitOk;
    }
    if (command == "simulate") {
        if (cfg.sim_n < 1) throw ConfigError("simulate needs n >= 1");
        PanelDataset panel;
        if (cfg.sim_dgm)
            panel = sample_panel(*cfg.sim_dgm, cfg.sim_n, cfg.sim_seed);
        else if (cfg.sim_parametric)
            panel = sample_panel(*cfg.sim_parametric, cfg.sim_n, cfg.sim_seed);
        else
            throw ConfigError("config has no 'simulate' source");
        fs::create_directories(out);
        save_panel_file(panel, (out / "panel.csv").string());
        return kExitOk;
    }
    if (command == "validate") {
        const auto suites = run_validation_suites(cfg.validate);
        bool all_passed = true;
        for (const auto& suite : suites) {
            std::cout << (suite.passed ? "[PASS] " : "[FAIL] ") << suite.name << ": "
                      << suite.detail << '\n';
            all_passed = all_passed && suite.passed;
        }
        return all_passed ? kExitOk : kExitValidation;
    }
    throw ConfigError("unknown command '" + command + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IPW estimation of survival under proportionally-representative interventions"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;
    std::optional<std::uint64_t> seed;

    for (const char* name : {"fit", "simulate", "validate", "bootstrap"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--threads", threads, "worker thread bound");
        sub->add_option("--seed", seed, "override the configured seed");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        return dispatch(command, config_path, out_dir, threads, seed);
    } catch (const ConfigError& e) {
        std::cerr << "{\"error\":\"config\",\"message\":\"" << e.what() << "\"}\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "{\"error\":\"data\",\"message\":\"" << e.what() << "\"}\n";
        return kExitData;
    } catch (const ValidationError& e) {
        std::cerr << "{\"error\":\"validation\",\"message\":\"" << e.what() << "\"}\n";
        return kExitValidation;
    } catch (const Error& e) {
        std::cerr << "{\"error\":\"numeric\",\"message\":\"" << e.what() << "\"}\n";
        return kExitNumeric;
    }
}
