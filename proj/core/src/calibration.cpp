#include "pdterm/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "pdterm/errors.hpp"

namespace pdterm {

double term_structure_mae(const std::map<int, double>& actual,
                          const std::map<int, double>& expected, int age_cap) {
    double sum = 0.0;
    std::size_t count = 0;
    bool overlap = false;
    for (const auto& [age, dens] : actual) {
        if (age > age_cap) break;
        const auto it = expected.find(age);
        const double other = it == expected.end() ? 0.0 : it->second;
        if (it != expected.end()) overlap = true;
        sum += std::abs(dens - other);
        ++count;
    }
    if (count == 0 || !overlap)
        throw ValidationError("term structures share no ages up to the cap");
    return sum / static_cast<double>(count);
}

DefaultRateSeries default_rate_series(const SpellPanel& panel,
                                      std::span<const double> rolling_12m_pd) {
    if (panel.empty()) throw EmptyPanel();
    if (rolling_12m_pd.size() != panel.rows().size())
        throw ValidationError("one rolling PD per panel row is required");
    const int first = panel.first_month().index();
    const int last = panel.last_month().index();
    if (last - first < 12)
        throw ValidationError("panel must span at least 13 calendar months");

    // Default event months per loan, for the worst-ever lookup.
    std::unordered_map<std::int64_t, std::vector<int>> default_months;
    for (const Spell& spell : panel.spells())
        if (spell.defaulted()) default_months[spell.loan_id].push_back(spell.stop_month.index());
    for (auto& [loan, months] : default_months) std::sort(months.begin(), months.end());

    const int n_months = last - first + 1;
    std::vector<std::size_t> at_risk(n_months, 0);
    std::vector<std::size_t> defaulted(n_months, 0);
    std::vector<double> expected_sum(n_months, 0.0);

    const auto& rows = panel.rows();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const int m = rows[r].date.index() - first;
        ++at_risk[m];
        expected_sum[m] += rolling_12m_pd[r];
        const auto it = default_months.find(rows[r].loan_id);
        if (it != default_months.end()) {
            // Default strictly after this month, within 12 months.
            const auto hit = std::upper_bound(it->second.begin(), it->second.end(),
                                              rows[r].date.index());
            if (hit != it->second.end() && *hit <= rows[r].date.index() + 12) ++defaulted[m];
        }
    }

    DefaultRateSeries series;
    double mae_sum = 0.0;
    std::size_t mae_count = 0;
    for (int m = 0; m + 12 < n_months; ++m) {  // drop the incomplete tail window
        if (at_risk[m] == 0) continue;
        const double empirical =
            static_cast<double>(defaulted[m]) / static_cast<double>(at_risk[m]);
        const double expected = expected_sum[m] / static_cast<double>(at_risk[m]);
        series.months.push_back(YearMonth::from_index(first + m));
        series.empirical.push_back(empirical);
        series.expected.push_back(expected);
        mae_sum += std::abs(empirical - expected);
        ++mae_count;
    }
    if (mae_count == 0) throw ValidationError("no calendar month has a complete 12-month window");
    series.mae = mae_sum / static_cast<double>(mae_count);
    return series;
}

}  // namespace pdterm
