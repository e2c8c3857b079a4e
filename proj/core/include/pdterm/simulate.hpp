#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pdterm/panel.hpp"

namespace pdterm {

struct HazardBin {
    int last_age = 0;  // inclusive upper age; <= 0 means open-ended
    double hazard = 0.0;
};

struct Ar1Spec {
    std::string name;
    double mean = 0.0;
    double persistence = 0.0;
    double volatility = 0.0;
};

struct MarkovSpec {
    double p01 = 0.05;  // monthly chance the delinquency proxy turns on
    double p10 = 0.35;  // monthly chance it clears
};

// Generator configuration. The hazard of the main event for a row at spell
// age t with covariates x is logistic(logit(baseline(t)) + beta' x).
struct SimConfig {
    std::size_t n_loans = 0;
    int horizon = 0;  // observation window length in calendar months
    std::uint64_t seed = 0;
    std::vector<HazardBin> baseline_hazard;
    std::map<std::string, double> true_coefficients;
    double settlement_rate = 0.0;
    double writeoff_rate = 0.0;
    double cure_probability = 0.0;
    std::vector<Ar1Spec> macro_series;
    MarkovSpec delinquency;
    YearMonth start_month = YearMonth(2012, 1);
    int origination_spread = -1;  // max origination offset; default horizon/3

    void validate() const;
    double baseline_at(int age) const;

    static SimConfig from_json_string(const std::string& text);
    static SimConfig from_json_file(const std::string& path);
    std::string to_json_string() const;
};

struct GroundTruth {
    std::vector<double> hazard;  // aligned with the panel's rows
    std::map<std::string, double> coefficients;
};

struct SimResult {
    SpellPanel panel;
    GroundTruth truth;
};

// Deterministic in (config, seed); loans are generated on independent streams
// keyed by (seed, loan id), so the thread count never changes the output.
SimResult simulate(const SimConfig& config, int threads = 1);

void write_ground_truth(const SpellPanel& panel, const GroundTruth& truth, std::ostream& out);

}  // namespace pdterm
