#include "proprep/dgm.hpp"

#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

#include "proprep/util.hpp"

namespace proprep {

namespace {
using nlohmann::json;

std::string treat_label(TreatState t) {
    if (t.none()) return "none";
    return (t.type == 1 ? "B@" : "H@") + std::to_string(t.time);
}

TreatState parse_treat(const std::string& s) {
    if (s == "none") return {};
    TreatState t;
    if (s.rfind("B@", 0) == 0)
        t.type = 1;
    else if (s.rfind("H@", 0) == 0)
        t.type = 2;
    else
        throw DataError("bad treat label '" + s + "'");
    t.time = std::stoi(s.substr(2));
    return t;
}
}  // namespace

std::uint64_t DiscreteDGM::hist_key(const std::vector<int>& ls, TreatState treat) const {
    std::uint64_t key = static_cast<std::uint64_t>(treat.type) * 64u +
                        static_cast<std::uint64_t>(treat.time);
    key = key * 64u + static_cast<std::uint64_t>(ls.size());
    for (std::size_t j = 0; j < ls.size(); ++j) {
        const int base = l_levels.at(j);
        if (ls[j] < 0 || ls[j] >= base) throw DataError("covariate level out of range");
        key = key * static_cast<std::uint64_t>(base) + static_cast<std::uint64_t>(ls[j]);
    }
    return key;
}

const std::vector<double>& DiscreteDGM::p_l(int k, const std::vector<int>& prev,
                                            TreatState treat) const {
    auto it = pl_.find(hist_key(prev, treat));
    if (it == pl_.end())
        throw DataError("missing L CPT row at k=" + std::to_string(k));
    return it->second;
}

double DiscreteDGM::p_b(int k, const std::vector<int>& ls) const {
    auto it = pb_.find(hist_key(ls, {}));
    if (it == pb_.end()) throw DataError("missing B CPT row at k=" + std::to_string(k));
    return it->second;
}

double DiscreteDGM::p_h(int k, const std::vector<int>& ls) const {
    auto it = ph_.find(hist_key(ls, {}));
    if (it == ph_.end()) throw DataError("missing H CPT row at k=" + std::to_string(k));
    return it->second;
}

double DiscreteDGM::p_c(int k, const std::vector<int>& ls) const {
    if (!censoring) return 0.0;
    auto it = pc_.find(hist_key(ls, {}));
    if (it == pc_.end()) throw DataError("missing C CPT row at k=" + std::to_string(k));
    return it->second;
}

double DiscreteDGM::p_y(int k, const std::vector<int>& ls, TreatState treat) const {
    auto it = py_.find(hist_key(ls, treat));
    if (it == py_.end()) throw DataError("missing Y CPT row at k=" + std::to_string(k));
    return it->second;
}

void DiscreteDGM::set_p_l(int k, const std::vector<int>& prev, TreatState treat,
                          std::vector<double> probs) {
    if (static_cast<int>(prev.size()) != k - 1)
        throw DataError("L CPT at k conditions on k-1 prior covariates");
    if (static_cast<int>(probs.size()) != l_levels.at(k - 1))
        throw DataError("L CPT row width does not match the level count");
    pl_[hist_key(prev, treat)] = std::move(probs);
}

void DiscreteDGM::set_p_b(int k, const std::vector<int>& ls, double p) {
    if (static_cast<int>(ls.size()) != k) throw DataError("B CPT at k conditions on k covariates");
    pb_[hist_key(ls, {})] = p;
}

void DiscreteDGM::set_p_h(int k, const std::vector<int>& ls, double p) {
    if (static_cast<int>(ls.size()) != k) throw DataError("H CPT at k conditions on k covariates");
    ph_[hist_key(ls, {})] = p;
}

void DiscreteDGM::set_p_c(int k, const std::vector<int>& ls, double p) {
    if (static_cast<int>(ls.size()) != k) throw DataError("C CPT at k conditions on k covariates");
    pc_[hist_key(ls, {})] = p;
}

void DiscreteDGM::set_p_y(int k, const std::vector<int>& ls, TreatState treat, double p) {
    if (static_cast<int>(ls.size()) != k) throw DataError("Y CPT at k conditions on k covariates");
    py_[hist_key(ls, treat)] = p;
}

namespace {

// Enumerates all dose states valid just before interval k (doses at t < k)
// plus, when `through_k`, doses received at k itself.
std::vector<TreatState> treat_states(int k, bool through_k) {
    std::vector<TreatState> states{{}};
    const int last = through_k ? k : k - 1;
    for (int t = 1; t <= last; ++t) {
        states.push_back({1, t});
        states.push_back({2, t});
    }
    return states;
}

void for_each_l_history(const std::vector<int>& levels, int len,
                        const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> ls(len, 0);
    std::function<void(int)> rec = [&](int pos) {
        if (pos == len) {
            fn(ls);
            return;
        }
        for (int v = 0; v < levels[pos]; ++v) {
            ls[pos] = v;
            rec(pos + 1);
        }
    };
    rec(0);
}

}  // namespace

void DiscreteDGM::validate() const {
    if (K < 1) throw DataError("DGM horizon must be >= 1");
    if (static_cast<int>(l_levels.size()) != K) throw DataError("l_levels must have K entries");
    auto check_p = [](double p, const char* what, int k) {
        if (!(p >= 0.0 && p <= 1.0) || !std::isfinite(p))
            throw DataError(std::string(what) + " probability outside [0,1] at k=" +
                            std::to_string(k));
    };
    for (int k = 1; k <= K; ++k) {
        for_each_l_history(l_levels, k - 1, [&](const std::vector<int>& prev) {
            for (TreatState t : treat_states(k, false)) {
                const auto& row = p_l(k, prev, t);
                double sum = 0.0;
                for (double p : row) {
                    check_p(p, "L", k);
                    sum += p;
                }
                if (std::abs(sum - 1.0) > 1e-9)
                    throw DataError("L CPT row does not sum to 1 at k=" + std::to_string(k) +
                                    " (sum=" + format_double(sum) + ")");
            }
        });
        for_each_l_history(l_levels, k, [&](const std::vector<int>& ls) {
            check_p(p_b(k, ls), "B", k);
            check_p(p_h(k, ls), "H", k);
            if (censoring) check_p(p_c(k, ls), "C", k);
            for (TreatState t : treat_states(k, true)) check_p(p_y(k, ls, t), "Y", k);
        });
    }
}

std::string DiscreteDGM::to_json() const {
    json j;
    j["K"] = K;
    j["l_levels"] = l_levels;
    j["censoring"] = censoring;
    json pl = json::array(), pb = json::array(), ph = json::array(), pc = json::array(),
         py = json::array();
    for (int k = 1; k <= K; ++k) {
        for_each_l_history(l_levels, k - 1, [&](const std::vector<int>& prev) {
            for (TreatState t : treat_states(k, false))
                pl.push_back({{"k", k}, {"l", prev}, {"treat", treat_label(t)},
                              {"p", p_l(k, prev, t)}});
        });
        for_each_l_history(l_levels, k, [&](const std::vector<int>& ls) {
            pb.push_back({{"k", k}, {"l", ls}, {"p", p_b(k, ls)}});
            ph.push_back({{"k", k}, {"l", ls}, {"p", p_h(k, ls)}});
            if (censoring) pc.push_back({{"k", k}, {"l", ls}, {"p", p_c(k, ls)}});
            for (TreatState t : treat_states(k, true))
                py.push_back({{"k", k}, {"l", ls}, {"treat", treat_label(t)},
                              {"p", p_y(k, ls, t)}});
        });
    }
    j["pL"] = std::move(pl);
    j["pB"] = std::move(pb);
    j["pH"] = std::move(ph);
    if (censoring) j["pC"] = std::move(pc);
    j["pY"] = std::move(py);
    return j.dump(2);
}

DiscreteDGM DiscreteDGM::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("bad DGM document: ") + e.what());
    }
    DiscreteDGM dgm;
    try {
        dgm.K = j.at("K").get<int>();
        dgm.l_levels = j.at("l_levels").get<std::vector<int>>();
        dgm.censoring = j.value("censoring", false);
        for (const auto& row : j.at("pL"))
            dgm.set_p_l(row.at("k").get<int>(), row.at("l").get<std::vector<int>>(),
                        parse_treat(row.at("treat").get<std::string>()),
                        row.at("p").get<std::vector<double>>());
        for (const auto& row : j.at("pB"))
            dgm.set_p_b(row.at("k").get<int>(), row.at("l").get<std::vector<int>>(),
                        row.at("p").get<double>());
        for (const auto& row : j.at("pH"))
            dgm.set_p_h(row.at("k").get<int>(), row.at("l").get<std::vector<int>>(),
                        row.at("p").get<double>());
        if (dgm.censoring)
            for (const auto& row : j.at("pC"))
                dgm.set_p_c(row.at("k").get<int>(), row.at("l").get<std::vector<int>>(),
                            row.at("p").get<double>());
        for (const auto& row : j.at("pY"))
            dgm.set_p_y(row.at("k").get<int>(), row.at("l").get<std::vector<int>>(),
                        parse_treat(row.at("treat").get<std::string>()),
                        row.at("p").get<double>());
    } catch (const json::exception& e) {
        throw DataError(std::string("bad DGM document: ") + e.what());
    }
    dgm.validate();
    return dgm;
}

DiscreteDGM random_dgm(std::uint64_t seed, const RandomDgmOptions& options) {
    DiscreteDGM dgm;
    dgm.K = options.K;
    dgm.l_levels = options.l_levels;
    while (static_cast<int>(dgm.l_levels.size()) < options.K)
        dgm.l_levels.push_back(dgm.l_levels.empty() ? 2 : dgm.l_levels.back());
    dgm.l_levels.resize(options.K);
    dgm.censoring = options.censoring;

    // Slot ids per table kind keep the draws independent.
    auto draw = [&](std::uint64_t kind, std::uint64_t key, double lo, double hi) {
        return lo + (hi - lo) * counter_u01(seed, kind, key, 0);
    };
    std::uint64_t counter = 0;
    for (int k = 1; k <= options.K; ++k) {
        for_each_l_history(dgm.l_levels, k - 1, [&](const std::vector<int>& prev) {
            for (TreatState t : treat_states(k, false)) {
                std::vector<double> row(dgm.l_levels[k - 1]);
                double sum = 0.0;
                for (auto& p : row) {
                    p = 0.05 + counter_u01(seed, 1, ++counter, 0);
                    sum += p;
                }
                for (auto& p : row) p /= sum;
                dgm.set_p_l(k, prev, t, std::move(row));
            }
        });
        for_each_l_history(dgm.l_levels, k, [&](const std::vector<int>& ls) {
            dgm.set_p_b(k, ls, draw(2, ++counter, options.treat_lo, options.treat_hi));
            dgm.set_p_h(k, ls, draw(3, ++counter, options.treat_lo, options.treat_hi));
            if (dgm.censoring)
                dgm.set_p_c(k, ls, draw(4, ++counter, options.censor_lo, options.censor_hi));
            for (TreatState t : treat_states(k, true))
                dgm.set_p_y(k, ls, t, draw(5, ++counter, options.hazard_lo, options.hazard_hi));
        });
    }
    dgm.validate();
    return dgm;
}

DiscreteDGM corrupt_first_l_row(DiscreteDGM dgm) {
    auto it = dgm.pl_.begin();
    if (it != dgm.pl_.end() && !it->second.empty()) it->second[0] += 0.5;
    return dgm;
}

}  // namespace proprep
