#include "pdterm/brier.hpp"

#include <algorithm>
#include <cmath>

#include "pdterm/errors.hpp"

namespace pdterm {

CensorSurvivor::CensorSurvivor(const MarkerPanel& mp) {
    if (mp.spells.empty()) throw EmptyPanel();
    const int max_age = mp.max_time();
    std::vector<double> censor_events(max_age + 2, 0.0);
    std::vector<double> risk_diff(max_age + 2, 0.0);
    for (const MarkerSpell& spell : mp.spells) {
        risk_diff[spell.entry + 1] += 1.0;
        risk_diff[spell.observed_time + 1] -= 1.0;
        if (!spell.event) censor_events[spell.observed_time] += 1.0;
    }
    double survival = 1.0;
    double risk = 0.0;
    for (int age = 1; age <= max_age; ++age) {
        risk += risk_diff[age];
        if (censor_events[age] > 0.0 && risk > 0.0) {
            survival *= std::max(0.0, 1.0 - censor_events[age] / risk);
            jump_age_.push_back(age);
            value_.push_back(survival);
        }
    }
}

double CensorSurvivor::at(int t) const {
    const auto it = std::upper_bound(jump_age_.begin(), jump_age_.end(), t);
    if (it == jump_age_.begin()) return 1.0;
    return value_[it - jump_age_.begin() - 1];
}

double CensorSurvivor::at_left(int t) const { return at(t - 1); }

double tbs(const MarkerPanel& mp, std::span<const double> survival_predictions, int t_star,
           const CensorSurvivor& censor) {
    if (mp.spells.empty()) throw EmptyPanel();
    if (survival_predictions.size() != mp.spells.size())
        throw ValidationError("one survival prediction per spell is required");
    if (t_star < 1) throw InvalidConfig("tBS horizon must be >= 1");

    const double g_at_star = censor.at(t_star);
    double sum = 0.0;
    std::size_t contributing = 0;
    for (std::size_t s = 0; s < mp.spells.size(); ++s) {
        const MarkerSpell& spell = mp.spells[s];
        if (spell.entry >= t_star) continue;  // entered too late to inform this horizon
        ++contributing;
        const double p = survival_predictions[s];
        if (spell.observed_time > t_star) {
            if (g_at_star <= 0.0)
                throw NumericError("censoring survivor is zero at the tBS horizon");
            sum += (1.0 - p) * (1.0 - p) / g_at_star;
        } else if (spell.event) {
            const double g = censor.at_left(spell.observed_time);
            if (g <= 0.0)
                throw NumericError("censoring survivor is zero at an event time");
            sum += p * p / g;
        }
        // censored on or before the horizon: weight zero
    }
    if (contributing == 0) throw NumericError("no spell informs the tBS horizon");
    return sum / static_cast<double>(contributing);
}

double tbs(const MarkerPanel& mp, std::span<const double> survival_predictions, int t_star) {
    return tbs(mp, survival_predictions, t_star, CensorSurvivor(mp));
}

TBsCurve tbs_curve(const MarkerPanel& mp,
                   const std::vector<std::vector<double>>& predictions,
                   const std::vector<int>& horizons) {
    if (predictions.size() != mp.spells.size())
        throw ValidationError("predictions must be per spell");
    TBsCurve curve;
    curve.horizons = horizons;
    const CensorSurvivor censor(mp);
    std::vector<double> column(mp.spells.size());
    for (std::size_t k = 0; k < horizons.size(); ++k) {
        for (std::size_t s = 0; s < column.size(); ++s) column[s] = predictions[s][k];
        curve.scores.push_back(tbs(mp, column, horizons[k], censor));
    }
    curve.ibs = ibs(curve);
    return curve;
}

double ibs(const TBsCurve& curve) {
    if (curve.scores.empty()) return 0.0;
    double sum = 0.0;
    for (double score : curve.scores) sum += score;
    return sum / static_cast<double>(curve.scores.size());
}

}  // namespace pdterm
