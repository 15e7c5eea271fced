#include "proprep/panel.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "proprep/util.hpp"

namespace proprep {

int CovariateSpec::reference_index() const {
    if (reference.empty()) return 0;
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (levels[i] == reference) return static_cast<int>(i);
    throw ConfigError("reference level '" + reference + "' not among declared levels of '" +
                      name + "'");
}

int CovariateSpec::level_index(const std::string& value) const {
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (levels[i] == value) return static_cast<int>(i);
    return -1;
}

int PanelSchema::covariate_index(const std::string& name) const {
    for (std::size_t i = 0; i < covariates.size(); ++i)
        if (covariates[i].name == name) return static_cast<int>(i);
    return -1;
}

std::size_t PanelDataset::n_records() const {
    std::size_t n = 0;
    for (const auto& s : subjects) n += s.records.size();
    return n;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

bool parse_binary_flag(const std::string& s, const char* col, std::size_t line_no) {
    if (s == "0") return false;
    if (s == "1") return true;
    throw DataError(std::string("non-binary value '") + s + "' in column " + col + " at line " +
                    std::to_string(line_no));
}

double parse_number(const std::string& s, const std::string& col, std::size_t line_no) {
    double v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw DataError("cannot parse numeric value '" + s + "' in column " + col + " at line " +
                        std::to_string(line_no));
    return v;
}

void validate_subject(const Subject& subj) {
    bool treated = false;
    for (std::size_t i = 0; i < subj.records.size(); ++i) {
        const PanelRecord& r = subj.records[i];
        if (r.k != static_cast<int>(i) + 1)
            throw DataError("subject '" + subj.id + "': intervals must be consecutive from 1 (gap before k=" +
                            std::to_string(r.k) + ")");
        if (r.B && r.H)
            throw DataError("subject '" + subj.id + "': B and H both 1 at k=" + std::to_string(r.k));
        if (treated && (r.B || r.H))
            throw DataError("subject '" + subj.id + "': second treatment at k=" + std::to_string(r.k) +
                            " violates the single-dose rule");
        treated = treated || r.B || r.H;
        if (r.C && r.Y)
            throw DataError("subject '" + subj.id + "': Y is unobservable in the censoring interval k=" +
                            std::to_string(r.k));
        const bool last = i + 1 == subj.records.size();
        if (r.Y && !last)
            throw DataError("subject '" + subj.id + "': records after death at k=" + std::to_string(r.k));
        if (r.C && !last)
            throw DataError("subject '" + subj.id + "': records after censoring at k=" + std::to_string(r.k));
    }
}

}  // namespace

PanelDataset load_panel(std::istream& source, const PanelSchema& schema) {
    std::string line;
    if (!std::getline(source, line)) throw DataError("empty input: missing header row");
    const std::vector<std::string> header = split_csv_line(line);

    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw DataError("missing column '" + name + "'");
    };

    const int col_id = column("id");
    const int col_k = column("k");
    const int col_B = column("B");
    const int col_H = column("H");
    const int col_C = column("C");
    const int col_Y = column("Y");
    std::vector<int> cov_cols;
    for (const auto& cov : schema.covariates) cov_cols.push_back(column(cov.name));

    // Rows may be unordered; bucket by subject and interval first.
    std::map<std::string, std::map<int, PanelRecord>> staged;
    std::vector<std::string> subject_order;
    std::size_t line_no = 1;
    while (std::getline(source, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        for (std::size_t i = 0; i < fields.size(); ++i)
            if (fields[i].empty())
                throw DataError("line " + std::to_string(line_no) + ": empty field in column '" +
                                header[i] + "' (missing values are not imputed)");

        PanelRecord rec;
        const std::string& id = fields[col_id];
        rec.k = static_cast<int>(parse_number(fields[col_k], "k", line_no));
        if (rec.k < 1)
            throw DataError("line " + std::to_string(line_no) + ": interval index must be >= 1");
        rec.B = parse_binary_flag(fields[col_B], "B", line_no);
        rec.H = parse_binary_flag(fields[col_H], "H", line_no);
        rec.C = parse_binary_flag(fields[col_C], "C", line_no);
        rec.Y = parse_binary_flag(fields[col_Y], "Y", line_no);
        rec.covs.resize(schema.covariates.size());
        for (std::size_t j = 0; j < schema.covariates.size(); ++j) {
            const CovariateSpec& cov = schema.covariates[j];
            const std::string& raw = fields[cov_cols[j]];
            if (cov.kind == CovariateKind::Categorical) {
                int idx = cov.level_index(raw);
                if (idx < 0)
                    throw DataError("line " + std::to_string(line_no) + ": unknown level '" + raw +
                                    "' for categorical covariate '" + cov.name + "'");
                rec.covs[j] = static_cast<double>(idx);
            } else {
                rec.covs[j] = parse_number(raw, cov.name, line_no);
            }
        }

        auto& per_subject = staged[id];
        if (per_subject.count(rec.k))
            throw DataError("duplicate record for subject '" + id + "' at k=" +
                            std::to_string(rec.k));
        if (per_subject.empty()) subject_order.push_back(id);
        per_subject.emplace(rec.k, std::move(rec));
    }

    PanelDataset panel;
    panel.schema = schema;
    panel.subjects.reserve(subject_order.size());
    for (const auto& id : subject_order) {
        Subject subj;
        subj.id = id;
        for (auto& [k, rec] : staged[id]) subj.records.push_back(std::move(rec));
        validate_subject(subj);
        for (std::size_t j = 0; j < schema.covariates.size(); ++j) {
            if (!schema.covariates[j].baseline) continue;
            for (const auto& rec : subj.records)
                if (rec.covs[j] != subj.records.front().covs[j])
                    throw DataError("subject '" + id + "': baseline covariate '" +
                                    schema.covariates[j].name + "' varies across intervals");
        }
        panel.horizon = std::max(panel.horizon, subj.records.back().k);
        panel.subjects.push_back(std::move(subj));
    }
    if (panel.subjects.empty()) throw DataError("no data rows");
    return derive_eligibility(std::move(panel));
}

PanelDataset load_panel_file(const std::string& path, const PanelSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open panel file '" + path + "'");
    return load_panel(in, schema);
}

void save_panel(const PanelDataset& panel, std::ostream& out) {
    out << "id,k";
    for (const auto& cov : panel.schema.covariates) out << ',' << cov.name;
    out << ",B,H,C,Y\n";
    for (const auto& subj : panel.subjects) {
        for (const auto& rec : subj.records) {
            out << subj.id << ',' << rec.k;
            for (std::size_t j = 0; j < rec.covs.size(); ++j) {
                const CovariateSpec& cov = panel.schema.covariates[j];
                if (cov.kind == CovariateKind::Categorical)
                    out << ',' << cov.levels[static_cast<int>(rec.covs[j])];
                else
                    out << ',' << format_double(rec.covs[j]);
            }
            out << ',' << (rec.B ? 1 : 0) << ',' << (rec.H ? 1 : 0) << ',' << (rec.C ? 1 : 0)
                << ',' << (rec.Y ? 1 : 0) << '\n';
        }
    }
}

void save_panel_file(const PanelDataset& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write panel file '" + path + "'");
    save_panel(panel, out);
}

PanelDataset derive_eligibility(PanelDataset panel) {
    for (auto& subj : panel.subjects) {
        bool treated_before = false;
        for (auto& rec : subj.records) {
            // R_1 = 1 always: records exist only while alive and uncensored,
            // so only prior treatment can break eligibility.
            rec.R = !treated_before;
            rec.S = rec.R && !rec.B;
            treated_before = treated_before || rec.B || rec.H;
        }
    }
    return panel;
}

PanelDataset truncate_horizon(const PanelDataset& panel, int K) {
    if (K < 1) throw ConfigError("truncation horizon must be >= 1");
    PanelDataset out;
    out.schema = panel.schema;
    out.horizon = 0;
    out.subjects.reserve(panel.subjects.size());
    for (const auto& subj : panel.subjects) {
        Subject trimmed;
        trimmed.id = subj.id;
        for (const auto& rec : subj.records)
            if (rec.k <= K) trimmed.records.push_back(rec);
        out.horizon = std::max(out.horizon, trimmed.records.back().k);
        out.subjects.push_back(std::move(trimmed));
    }
    return out;
}

}  // namespace proprep
