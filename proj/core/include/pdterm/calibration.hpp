#pragma once

#include <map>
#include <span>
#include <vector>

#include "pdterm/panel.hpp"

namespace pdterm {

// Mean absolute gap between two term-structures over the ages present in
// `actual` up to `age_cap`; ages missing from `expected` count as zero there.
double term_structure_mae(const std::map<int, double>& actual,
                          const std::map<int, double>& expected, int age_cap);

struct DefaultRateSeries {
    std::vector<YearMonth> months;   // common months after edge truncation
    std::vector<double> empirical;   // 12-month worst-ever default rate
    std::vector<double> expected;    // mean rolling 12-month predicted PD
    double mae = 0.0;
};

// Actual-vs-expected 12-month default rates by calendar month. The empirical
// side asks, per month, what share of loans with a performing row that month
// default within the following 12 months; the expected side averages the
// per-row rolling 12-month predicted PDs over the same loans. The final 12
// calendar months lack a full outcome window and are dropped from both sides.
DefaultRateSeries default_rate_series(const SpellPanel& panel,
                                      std::span<const double> rolling_12m_pd);

}  // namespace pdterm
