#pragma once

#include <span>
#include <vector>

#include "pdterm/troc.hpp"

namespace pdterm {

// Kaplan-Meier estimate of the censoring survivor G(u) = P(C > u): the same
// machinery as the event-time KM with the event and censoring roles swapped,
// honouring delayed entry. Evaluate left-continuously via at_left().
class CensorSurvivor {
  public:
    explicit CensorSurvivor(const MarkerPanel& mp);

    double at(int t) const;       // G(t)
    double at_left(int t) const;  // G(t-), the value just before t

  private:
    std::vector<int> jump_age_;
    std::vector<double> value_;  // survivor after the jump at jump_age_
};

// IPC-weighted time-dependent Brier score at horizon `t_star` given per-spell
// survival predictions. Spells censored before the horizon carry weight
// zero; spells entering observation at or after the horizon are left out
// entirely (delayed entry carries no information about the horizon).
double tbs(const MarkerPanel& mp, std::span<const double> survival_predictions, int t_star,
           const CensorSurvivor& censor);

double tbs(const MarkerPanel& mp, std::span<const double> survival_predictions, int t_star);

struct TBsCurve {
    std::vector<int> horizons;
    std::vector<double> scores;
    double ibs = 0.0;  // uniform-weight mean over the grid
};

// Integrated Brier score over the monthly grid 1..t_star; predictions come
// per spell and per horizon: predictions[s][k] = S(horizons[k] | spell s).
TBsCurve tbs_curve(const MarkerPanel& mp,
                   const std::vector<std::vector<double>>& predictions,
                   const std::vector<int>& horizons);

double ibs(const TBsCurve& curve);

}  // namespace pdterm
