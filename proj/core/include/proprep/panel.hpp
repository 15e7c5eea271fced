#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "proprep/errors.hpp"

namespace proprep {

enum class CovariateKind { Numeric, Categorical };

struct CovariateSpec {
    std::string name;
    CovariateKind kind = CovariateKind::Numeric;
    // Baseline covariates are measured at k=1 and carried forward; the loader
    // rejects within-subject variation.
    bool baseline = false;
    // Categorical: exhaustive level list; the reference level takes no dummy
    // column in design matrices.
    std::vector<std::string> levels;
    std::string reference;

    int reference_index() const;
    int level_index(const std::string& value) const;  // -1 if unknown
};

struct PanelSchema {
    std::vector<CovariateSpec> covariates;

    int covariate_index(const std::string& name) const;  // -1 if unknown
};

// One person-interval row. Covariate values are stored in schema order;
// categorical values are level indices.
struct PanelRecord {
    int k = 0;
    std::vector<double> covs;
    bool B = false;
    bool H = false;
    bool C = false;
    bool Y = false;
    // Derived eligibility: R = alive, uncensored, never treated before k;
    // S additionally requires B=0 at k.
    bool R = false;
    bool S = false;
};

struct Subject {
    std::string id;
    std::vector<PanelRecord> records;  // consecutive k starting at 1
};

// Immutable after construction; share read-only across workers.
struct PanelDataset {
    PanelSchema schema;
    std::vector<Subject> subjects;
    int horizon = 0;  // K

    std::size_t n_subjects() const { return subjects.size(); }
    std::size_t n_records() const;
};

// Reads long-format CSV `id,k,<covariates...>,B,H,C,Y` (header row required,
// columns located by name). Rows may arrive unordered. Validates the single
// dose rule, absorbing death/censoring, consecutive intervals, and binary
// flags; derives R/S. Empty fields are an error: no imputation.
PanelDataset load_panel(std::istream& source, const PanelSchema& schema);
PanelDataset load_panel_file(const std::string& path, const PanelSchema& schema);

void save_panel(const PanelDataset& panel, std::ostream& out);
void save_panel_file(const PanelDataset& panel, const std::string& path);

// Recomputes R_k and S_k on every record from each subject's history.
PanelDataset derive_eligibility(PanelDataset panel);

// Drops all records with k > K.
PanelDataset truncate_horizon(const PanelDataset& panel, int K);

}  // namespace proprep
