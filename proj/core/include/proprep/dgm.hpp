#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "proprep/errors.hpp"

namespace proprep {

// Treatment status carried through a history: at most one dose ever.
struct TreatState {
    int type = 0;  // 0 none, 1 superior (B), 2 inferior (H)
    int time = 0;  // interval of the dose (0 when untreated)

    bool none() const { return type == 0; }
    friend bool operator==(const TreatState&, const TreatState&) = default;
};

// Explicit conditional probability tables over a small finite state space.
// Within-interval topological order (L_k, B_k, H_k, C_k, Y_k); structural
// zeros (treated or dead implies no further treatment, censored stays
// censored) are built into the keying: treatment tables exist only for
// eligible histories.
class DiscreteDGM {
public:
    int K = 0;
    std::vector<int> l_levels;  // support size of L_k, one entry per interval
    bool censoring = false;

    // L_k | alive, uncensored, history: distribution over levels of L_k.
    // `prev` holds l_1..l_{k-1}; `treat` the dose state before interval k.
    const std::vector<double>& p_l(int k, const std::vector<int>& prev, TreatState treat) const;
    // P(B_k=1 | R_k=1, l_1..l_k)
    double p_b(int k, const std::vector<int>& ls) const;
    // P(H_k=1 | S_k=1, l_1..l_k)
    double p_h(int k, const std::vector<int>& ls) const;
    // P(C_k=1 | S_k=1, H_k=0, C_{k-1}=0, l_1..l_k); only when censoring=true
    double p_c(int k, const std::vector<int>& ls) const;
    // P(Y_k=1 | alive, l_1..l_k, dose state through k)
    double p_y(int k, const std::vector<int>& ls, TreatState treat) const;

    void set_p_l(int k, const std::vector<int>& prev, TreatState treat, std::vector<double> probs);
    void set_p_b(int k, const std::vector<int>& ls, double p);
    void set_p_h(int k, const std::vector<int>& ls, double p);
    void set_p_c(int k, const std::vector<int>& ls, double p);
    void set_p_y(int k, const std::vector<int>& ls, TreatState treat, double p);

    // Row sums, probability ranges, and key completeness over all reachable
    // histories. Throws DataError on the first violation.
    void validate() const;

    std::string to_json() const;
    static DiscreteDGM from_json(const std::string& text);

private:
    std::uint64_t hist_key(const std::vector<int>& ls, TreatState treat) const;

    std::unordered_map<std::uint64_t, std::vector<double>> pl_;
    std::unordered_map<std::uint64_t, double> pb_, ph_, pc_, py_;

    friend DiscreteDGM corrupt_first_l_row(DiscreteDGM dgm);
};

struct RandomDgmOptions {
    int K = 2;
    std::vector<int> l_levels = {2, 2};  // broadcast last entry if shorter than K
    bool censoring = false;
    double treat_lo = 0.05, treat_hi = 0.6;
    double hazard_lo = 0.02, hazard_hi = 0.45;
    double censor_lo = 0.02, censor_hi = 0.25;
};

// Deterministically fills every reachable CPT entry from the seed.
DiscreteDGM random_dgm(std::uint64_t seed, const RandomDgmOptions& options);

// Test helper: breaks one L row sum so validation must fail.
DiscreteDGM corrupt_first_l_row(DiscreteDGM dgm);

}  // namespace proprep
