#include "pdterm/resample.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pdterm/errors.hpp"
#include "pdterm/rng.hpp"

namespace pdterm {

SplitResult clustered_split(const SpellPanel& panel, double sampling_fraction,
                            std::uint64_t seed) {
    if (sampling_fraction <= 0.0 || sampling_fraction >= 1.0)
        throw InvalidConfig("sampling fraction must lie strictly between 0 and 1");

    std::vector<std::int64_t> loans;
    loans.reserve(panel.loan_count());
    for (const Spell& spell : panel.spells())
        if (loans.empty() || loans.back() != spell.loan_id) loans.push_back(spell.loan_id);

    if (loans.size() < 2)
        throw ValidationError("too few clusters: need at least 2 loans to split");

    const auto n_train = static_cast<std::size_t>(
        std::llround(sampling_fraction * static_cast<double>(loans.size())));
    if (n_train == 0 || n_train == loans.size())
        throw ValidationError("too few clusters: the split would leave one side empty");

    // Fisher-Yates over the sorted loan ids; independent of input row order.
    std::mt19937_64 rng = make_stream(seed, 0x73706c6974ULL);
    for (std::size_t i = loans.size() - 1; i > 0; --i) {
        const std::size_t j = rng() % (i + 1);
        std::swap(loans[i], loans[j]);
    }

    std::vector<std::int64_t> train_ids(loans.begin(), loans.begin() + n_train);
    std::vector<std::int64_t> valid_ids(loans.begin() + n_train, loans.end());
    std::sort(train_ids.begin(), train_ids.end());
    std::sort(valid_ids.begin(), valid_ids.end());

    SplitResult result;
    result.train = panel.subset_by_loans(train_ids);
    result.valid = panel.subset_by_loans(valid_ids);
    result.sampling_fraction = sampling_fraction;
    result.seed = seed;
    return result;
}

ResolutionRateSeries resolution_rate(const SpellPanel& panel, ResolutionType type) {
    if (panel.empty()) throw EmptyPanel();
    ResolutionRateSeries series;
    series.type = type;
    std::map<YearMonth, std::size_t> hits;
    for (const Spell& spell : panel.spells()) {
        ++series.cohort_sizes[spell.stop_month];
        if (spell.resolution == type) ++hits[spell.stop_month];
    }
    for (const auto& [month, size] : series.cohort_sizes) {
        const auto it = hits.find(month);
        const std::size_t k = it == hits.end() ? 0 : it->second;
        series.rates[month] = static_cast<double>(k) / static_cast<double>(size);
    }
    return series;
}

double average_discrepancy(const ResolutionRateSeries& a, const ResolutionRateSeries& b) {
    if (a.type != b.type)
        throw ValidationError("resolution-rate series compare only within one event type");
    std::set<YearMonth> months;
    for (const auto& [month, rate] : a.rates) months.insert(month);
    for (const auto& [month, rate] : b.rates) months.insert(month);
    if (months.empty()) return 0.0;
    double sum = 0.0;
    for (YearMonth month : months) {
        const auto ia = a.rates.find(month);
        const auto ib = b.rates.find(month);
        const double ra = ia == a.rates.end() ? 0.0 : ia->second;
        const double rb = ib == b.rates.end() ? 0.0 : ib->second;
        sum += std::abs(ra - rb);
    }
    return sum / static_cast<double>(months.size());
}

}  // namespace pdterm
