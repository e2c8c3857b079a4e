#include "pdterm/life_table.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdterm/errors.hpp"

namespace pdterm {

namespace {

// Inverse standard normal CDF (Acklam's rational approximation, |eps| < 1.2e-9).
double normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (p < plow) {
        const double q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > 1 - plow) return -normal_quantile(1 - p);
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

}  // namespace

LifeTable build_life_table(const SpellPanel& panel, int age_cap) {
    if (panel.empty()) throw EmptyPanel();

    int max_stop = 0;
    for (const Spell& spell : panel.spells()) max_stop = std::max(max_stop, spell.stop_time);

    // At-risk counts for every age via a difference array: a spell is at risk
    // over ages (entry, stop].
    std::vector<double> at_risk(max_stop + 2, 0.0);
    std::vector<double> fail(max_stop + 1, 0.0);
    std::vector<double> cens(max_stop + 1, 0.0);
    for (const Spell& spell : panel.spells()) {
        at_risk[spell.entry_time + 1] += 1.0;
        at_risk[spell.stop_time + 1] -= 1.0;
        if (spell.defaulted())
            fail[spell.stop_time] += 1.0;
        else
            cens[spell.stop_time] += 1.0;
    }
    for (int a = 1; a <= max_stop; ++a) at_risk[a] += at_risk[a - 1];

    if (age_cap <= 0) {
        // Default cap: last age before the at-risk share of spells first
        // drops below 0.5%.
        const double total = static_cast<double>(panel.spells().size());
        age_cap = max_stop;
        for (int a = 1; a <= max_stop; ++a) {
            if (at_risk[a] / total < 0.005) {
                age_cap = a - 1;
                break;
            }
        }
        if (age_cap < 1) age_cap = 1;
    }

    LifeTable table;
    double survival = 1.0;
    double greenwood_sum = 0.0;
    bool exhausted = false;
    for (int a = 1; a <= std::min(age_cap, max_stop); ++a) {
        if (fail[a] == 0.0 && cens[a] == 0.0) continue;
        const double n = at_risk[a];
        const double f = fail[a];
        const double h = f / n;
        const double prev_survival = survival;
        survival *= 1.0 - h;
        table.age.push_back(a);
        table.n_risk.push_back(n);
        table.failures.push_back(f);
        table.censored.push_back(cens[a]);
        table.hazard.push_back(h);
        table.survival.push_back(survival);
        table.density.push_back(prev_survival - survival);
        if (!exhausted && n == f) exhausted = true;
        if (exhausted) {
            table.variance.push_back(std::numeric_limits<double>::infinity());
        } else {
            greenwood_sum += f / (n * (n - f));
            table.variance.push_back(survival * survival * greenwood_sum);
        }
    }
    return table;
}

SurvivalBand greenwood_ci(const LifeTable& table, double level) {
    if (level <= 0.0 || level >= 1.0) throw InvalidConfig("confidence level must be in (0,1)");
    SurvivalBand band;
    band.level = level;
    const double z = normal_quantile(0.5 + level / 2.0);
    band.lower.reserve(table.size());
    band.upper.reserve(table.size());
    for (std::size_t k = 0; k < table.size(); ++k) {
        if (!std::isfinite(table.variance[k])) {
            band.lower.push_back(0.0);
            band.upper.push_back(1.0);
            continue;
        }
        const double half = z * std::sqrt(table.variance[k]);
        band.lower.push_back(std::max(0.0, table.survival[k] - half));
        band.upper.push_back(std::min(1.0, table.survival[k] + half));
    }
    return band;
}

std::map<int, double> empirical_term_structure(const LifeTable& table) {
    std::map<int, double> dens;
    for (std::size_t k = 0; k < table.size(); ++k)
        if (table.density[k] > 0.0) dens[table.age[k]] = table.density[k];
    return dens;
}

}  // namespace pdterm
