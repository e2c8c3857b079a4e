#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pdterm/panel.hpp"

namespace pdterm {

// One subject-spell of marker (risk score) observations: markers cover the
// observed ages entry+1 .. observed_time, the event flag says whether the
// spell ended in the main event.
struct MarkerSpell {
    int entry = 0;
    int observed_time = 0;  // stopping age
    bool event = false;
    std::vector<double> markers;
};

struct MarkerPanel {
    std::vector<MarkerSpell> spells;

    std::size_t marker_count() const;
    int max_time() const;
};

// Builds a marker panel from per-row scores; spells keep their panel order.
MarkerPanel make_marker_panel(const SpellPanel& panel, std::span<const double> row_markers);

// Mean-adjusted empirical marker distribution: the average over spells of the
// within-spell fraction of markers <= m, each spell normalized by its own
// marker count.
double marker_cdf(const MarkerPanel& mp, double m);

struct AkritasOptions {
    double bandwidth = 0.05;  // fraction of markers per neighbourhood (2 * lambda_n)
};

struct TrocWarnings {
    std::size_t vacuous_thresholds = 0;   // thresholds above every marker
    std::size_t empty_neighbourhoods = 0; // conditional curves with no event mass
};

// Smoothed bivariate survivor S(p_c, t): for each marker above the threshold,
// a nearest-neighbour-weighted Kaplan-Meier conditional on the marker value,
// averaged within spells (each spell normalized by its marker count) and then
// across spells. Empty marker sets above p_c contribute zero.
double akritas_survivor(const MarkerPanel& mp, double threshold, int t,
                        const AkritasOptions& options = {}, TrocWarnings* warnings = nullptr);

struct TrocPoint {
    double threshold = 0.0;
    double false_positive = 0.0;
    double true_positive = 0.0;
};

struct TRocCurve {
    int horizon = 0;
    double bandwidth = 0.0;
    std::vector<TrocPoint> points;  // swept from -inf (1,1) to +inf (0,0)
    double auc = 0.0;
    TrocWarnings warnings;
};

// Cumulative-case / dynamic-control ROC at horizon t. The default grid uses
// 512 marker quantiles plus the two infinite endpoints.
TRocCurve troc(const MarkerPanel& mp, int t, const AkritasOptions& options = {},
               int grid_points = 512);

}  // namespace pdterm
