#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdterm/panel.hpp"

namespace pdterm {

// 12-month worst-ever default rate per calendar month: the share of loans
// performing at t that default within (t, t+12]. Months lacking the full
// outcome window are omitted.
std::map<YearMonth, double> portfolio_default_rate(const SpellPanel& panel);

enum class MacroLink { kIdentity, kLogit };

// Portfolio-level creditworthiness regression: the default-rate series
// modelled on macro covariates under an identity or logit link.
struct MacroModel {
    MacroLink link = MacroLink::kIdentity;
    std::vector<std::string> covariates;  // includes the implicit intercept first
    std::vector<double> coefficients;
    std::vector<YearMonth> months;
    std::vector<double> fitted;  // mu_hat over the fitted months
    double anchor = 0.0;         // mu_hat at the final fitted month
    std::size_t out_of_range = 0;  // identity-link fits outside [0,1]

    double predict(const std::vector<double>& macro_values) const;
};

MacroModel fit_macro_model(const std::vector<YearMonth>& months,
                           const std::vector<double>& default_rate,
                           const std::vector<std::vector<double>>& macro_columns,
                           const std::vector<std::string>& macro_names, MacroLink link);

struct ClipCounter {
    std::size_t clipped = 0;
};

// Proportional shift x * mu_t / mu_anchor, clipped into [0,1]; the raw ratio
// formula is unbounded. Throws on a zero anchor.
double proportional_shift(double x, double mu_t, double mu_anchor,
                          ClipCounter* counter = nullptr);

struct LifetimePdCurve {
    std::vector<double> shifted_hazard;  // macro-shifted PDs treated as hazards
    std::vector<double> survival;
    std::vector<double> lifetime_pd;     // S(t-1) * shifted hazard
    std::size_t clipped = 0;
};

// Chains macro-shifted PDs into a lifetime PD term-structure over the
// forecast months. The survival product starts at the first forecast month.
LifetimePdCurve bellini_lifetime_pd(double pd, const std::vector<double>& mu_forecast,
                                    double mu_anchor);

// Cohort-level defaults table: initial volumes and default counts by lifetime
// point. Later cohorts have shorter observed lifetimes (lower staircase).
struct DefaultsTable {
    std::vector<std::string> cohorts;        // oldest first
    std::vector<double> initial_volume;      // n'_{t0}
    std::vector<std::vector<double>> defaults;  // defaults[t][v-1]

    void validate() const;
    std::size_t lifetime_points() const;

    static DefaultsTable from_csv(const std::string& path);
    void write_csv(std::ostream& out) const;
};

// Volume-weighted empirical PD per horizon over a trailing reference window
// of `reference_months` cohorts, anchored at the newest cohort and slid back
// one cohort per extra horizon. Horizons whose window would leave the table
// are omitted.
std::map<int, double> breed_term_structure(const DefaultsTable& table, int reference_months);

// Empirical one-month default rate per (cohort, lifetime point) with the
// survivor denominator n'_{tv} = n'_{t0} - sum of earlier defaults.
std::map<std::pair<int, int>, double> empirical_cohort_rate(const DefaultsTable& table);

// Builds a defaults table from a panel: cohorts keyed by origination month,
// first spells only. An optional categorical covariate partitions the panel
// into segments, each with its own table.
DefaultsTable defaults_table_from_panel(const SpellPanel& panel);
std::map<std::string, DefaultsTable> defaults_table_by_segment(const SpellPanel& panel,
                                                               const std::string& covariate);

}  // namespace pdterm
