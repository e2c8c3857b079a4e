#pragma once

#include <map>
#include <vector>

#include "pdterm/panel.hpp"

namespace pdterm {

// Discrete-time life table over unique observed stopping ages. Competing
// risks (settlement, write-off) are folded into the censored counts; the
// original resolution codes stay available on the panel.
struct LifeTable {
    std::vector<int> age;          // unique stopping ages, ascending
    std::vector<double> n_risk;    // spells with entry < age <= stop
    std::vector<double> failures;  // defaults at this age
    std::vector<double> censored;  // everything else stopping at this age
    std::vector<double> hazard;    // failures / n_risk
    std::vector<double> survival;  // chained (1 - hazard)
    std::vector<double> density;   // S(prev) - S(cur)
    std::vector<double> variance;  // Greenwood variance of S; +inf once exhausted

    std::size_t size() const noexcept { return age.size(); }
};

// Caps the table at `age_cap`; pass age_cap <= 0 to apply the default rule
// (last age before the at-risk share of spells first drops below 0.5%).
LifeTable build_life_table(const SpellPanel& panel, int age_cap = 0);

struct SurvivalBand {
    double level = 0.95;
    std::vector<double> lower;
    std::vector<double> upper;
};

// Symmetric normal-approximation interval on S, clipped to [0,1]. Ages where
// the Greenwood sum is undefined (a risk set fully failed) get [0,1].
SurvivalBand greenwood_ci(const LifeTable& table, double level);

// The discrete density f(t) keyed by age: the empirical term-structure used
// as the "actual" side of actual-vs-expected comparisons.
std::map<int, double> empirical_term_structure(const LifeTable& table);

}  // namespace pdterm
