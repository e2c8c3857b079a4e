#pragma once

#include <cstdint>
#include <map>

#include "pdterm/panel.hpp"

namespace pdterm {

struct SplitResult {
    SpellPanel train;
    SpellPanel valid;
    double sampling_fraction = 0.0;
    std::uint64_t seed = 0;
};

// Simple random clustered sampling: whole loans are assigned to one side, so
// every row of a loan lands in the same partition. The training side gets
// round(s_f * loan count) loans. Deterministic in (panel loan set, seed);
// row order of the input does not matter.
SplitResult clustered_split(const SpellPanel& panel, double sampling_fraction,
                            std::uint64_t seed);

struct ResolutionRateSeries {
    ResolutionType type = ResolutionType::kDefault;
    std::map<YearMonth, double> rates;       // cohort month -> share resolving as `type`
    std::map<YearMonth, std::size_t> cohort_sizes;  // spells stopping that month
};

// Cohort-end allocation: a spell belongs to the calendar month of its final
// row. Months where no spell stops are omitted.
ResolutionRateSeries resolution_rate(const SpellPanel& panel, ResolutionType type);

// Mean absolute gap between two series over the union of their months; a
// month absent from one side counts the other side's full rate.
double average_discrepancy(const ResolutionRateSeries& a, const ResolutionRateSeries& b);

}  // namespace pdterm
