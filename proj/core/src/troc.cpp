#include "pdterm/troc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pdterm/errors.hpp"

namespace pdterm {

std::size_t MarkerPanel::marker_count() const {
    std::size_t count = 0;
    for (const MarkerSpell& spell : spells) count += spell.markers.size();
    return count;
}

int MarkerPanel::max_time() const {
    int t = 0;
    for (const MarkerSpell& spell : spells) t = std::max(t, spell.observed_time);
    return t;
}

MarkerPanel make_marker_panel(const SpellPanel& panel, std::span<const double> row_markers) {
    if (row_markers.size() != panel.rows().size())
        throw ValidationError("marker vector must align with panel rows");
    MarkerPanel mp;
    mp.spells.reserve(panel.spells().size());
    for (const Spell& spell : panel.spells()) {
        MarkerSpell ms;
        ms.entry = spell.entry_time;
        ms.observed_time = spell.stop_time;
        ms.event = spell.defaulted();
        ms.markers.assign(row_markers.begin() + spell.first_row,
                          row_markers.begin() + spell.first_row + spell.row_count);
        mp.spells.push_back(std::move(ms));
    }
    return mp;
}

double marker_cdf(const MarkerPanel& mp, double m) {
    if (mp.spells.empty()) throw EmptyPanel();
    double sum = 0.0;
    for (const MarkerSpell& spell : mp.spells) {
        if (spell.markers.empty()) continue;
        std::size_t below = 0;
        for (double value : spell.markers)
            if (value <= m) ++below;
        sum += static_cast<double>(below) / static_cast<double>(spell.markers.size());
    }
    return sum / static_cast<double>(mp.spells.size());
}

namespace {

// Markers flattened and grouped by unique value. Every member of a group
// shares its empirical-CDF value, so groups are the natural unit for the
// nearest-neighbour windows (ties join or leave a window together).
class SmoothedSurvivor {
  public:
    SmoothedSurvivor(const MarkerPanel& mp, double bandwidth) : mp_(mp) {
        if (bandwidth <= 0.0 || bandwidth > 1.0)
            throw InvalidConfig("bandwidth must lie in (0, 1]");
        const std::size_t n_spells = mp.spells.size();
        for (std::size_t s = 0; s < n_spells; ++s) {
            const MarkerSpell& spell = mp_.spells[s];
            if (spell.markers.empty()) continue;
            if (static_cast<int>(spell.markers.size()) != spell.observed_time - spell.entry)
                throw ValidationError("marker spell must carry one marker per observed age");
            for (double value : spell.markers) {
                values_.push_back(value);
                spell_of_.push_back(s);
            }
        }
        const std::size_t w = values_.size();
        if (w == 0) throw EmptyPanel();

        order_.resize(w);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
            return values_[a] != values_[b] ? values_[a] < values_[b] : a < b;
        });

        // Group boundaries over the sorted order.
        for (std::size_t i = 0; i < w;) {
            std::size_t j = i + 1;
            while (j < w && values_[order_[j]] == values_[order_[i]]) ++j;
            group_begin_.push_back(i);
            group_value_.push_back(values_[order_[i]]);
            i = j;
        }
        group_begin_.push_back(w);

        const std::size_t g = groups();
        group_weight_.assign(g, 0.0);
        group_cdf_.assign(g, 0.0);
        double cum = 0.0;
        for (std::size_t k = 0; k < g; ++k) {
            for (std::size_t i = group_begin_[k]; i < group_begin_[k + 1]; ++i) {
                const MarkerSpell& spell = mp_.spells[spell_of_[order_[i]]];
                group_weight_[k] +=
                    1.0 / (static_cast<double>(n_spells) * static_cast<double>(spell.markers.size()));
            }
            cum += group_weight_[k];
            group_cdf_[k] = cum;
        }

        window_markers_ = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(bandwidth * static_cast<double>(w))));
        max_age_ = mp.max_time();
    }

    std::size_t groups() const noexcept { return group_value_.size(); }
    double value_of(std::size_t g) const { return group_value_[g]; }
    double weight_of(std::size_t g) const { return group_weight_[g]; }

    // F_M at an arbitrary marker value.
    double cdf(double m) const {
        const auto it = std::upper_bound(group_value_.begin(), group_value_.end(), m);
        if (it == group_value_.begin()) return 0.0;
        return group_cdf_[it - group_value_.begin() - 1];
    }

    // Conditional Kaplan-Meier survivor at `horizon` for each group's
    // neighbourhood, via a sliding group window over the sorted markers.
    std::vector<double> conditional_survivors(int horizon, TrocWarnings* warnings) {
        const std::size_t g = groups();
        std::vector<double> out(g, 1.0);
        event_mass_.assign(max_age_ + 2, 0.0);
        risk_diff_.assign(max_age_ + 2, 0.0);
        lo_ = 0;
        hi_ = 0;  // window is [lo_, hi_) over groups; starts empty
        count_ = 0;
        for (std::size_t k = 0; k < g; ++k) {
            place_window(k);
            out[k] = evaluate(horizon, warnings);
        }
        return out;
    }

  private:
    std::size_t group_size(std::size_t k) const { return group_begin_[k + 1] - group_begin_[k]; }

    void add_group(std::size_t k, double sign) {
        for (std::size_t i = group_begin_[k]; i < group_begin_[k + 1]; ++i) {
            const MarkerSpell& spell = mp_.spells[spell_of_[order_[i]]];
            const double w = sign / static_cast<double>(spell.markers.size());
            if (spell.event) event_mass_[spell.observed_time] += w;
            risk_diff_[spell.entry + 1] += w;
            risk_diff_[spell.observed_time + 1] -= w;
        }
    }

    // Moves the incremental window to the nearest >= window_markers_ markers
    // of group k by CDF distance, whole groups at a time so ties always join
    // or leave together. The pointers only drift forward as k advances, so a
    // full sweep costs O(groups + markers).
    void place_window(std::size_t k) {
        const std::size_t g = groups();
        auto grow_lo = [&] { add_group(--lo_, +1.0); count_ += group_size(lo_); };
        auto grow_hi = [&] { add_group(hi_, +1.0); count_ += group_size(hi_); ++hi_; };
        auto drop_lo = [&] { add_group(lo_, -1.0); count_ -= group_size(lo_); ++lo_; };
        auto drop_hi = [&] { --hi_; add_group(hi_, -1.0); count_ -= group_size(hi_); };

        while (hi_ <= k) grow_hi();
        while (lo_ > k) grow_lo();

        auto dist_left_out = [&] {  // next candidate to the left
            return lo_ == 0 ? std::numeric_limits<double>::infinity()
                            : group_cdf_[k] - group_cdf_[lo_ - 1];
        };
        auto dist_right_out = [&] {  // next candidate to the right
            return hi_ >= g ? std::numeric_limits<double>::infinity()
                            : group_cdf_[hi_] - group_cdf_[k];
        };
        while (count_ < window_markers_ && (lo_ > 0 || hi_ < g)) {
            if (dist_left_out() <= dist_right_out())
                grow_lo();
            else
                grow_hi();
        }
        // Shed the farther edge while the count allows; equal edge distances
        // are ties and both stay in.
        while (true) {
            const double dl = lo_ < k ? group_cdf_[k] - group_cdf_[lo_] : -1.0;
            const double dr = hi_ > k + 1 ? group_cdf_[hi_ - 1] - group_cdf_[k] : -1.0;
            if (dl > dr && count_ - group_size(lo_) >= window_markers_) {
                drop_lo();
            } else if (dr > dl && count_ - group_size(hi_ - 1) >= window_markers_) {
                drop_hi();
            } else {
                break;
            }
        }
        // Tie extension outward to the furthest included distance.
        const double dmax =
            std::max({lo_ < k ? group_cdf_[k] - group_cdf_[lo_] : 0.0,
                      hi_ > k + 1 ? group_cdf_[hi_ - 1] - group_cdf_[k] : 0.0, 0.0});
        while (lo_ > 0 && group_cdf_[k] - group_cdf_[lo_ - 1] <= dmax) grow_lo();
        while (hi_ < g && group_cdf_[hi_] - group_cdf_[k] <= dmax) grow_hi();
    }

    double evaluate(int horizon, TrocWarnings* warnings) const {
        double survival = 1.0;
        double risk = 0.0;
        bool any_event = false;
        const int cap = std::min(horizon, max_age_);
        for (int age = 1; age <= cap; ++age) {
            risk += risk_diff_[age];
            const double d = event_mass_[age];
            if (d > 0.0 && risk > 0.0) {
                survival *= std::max(0.0, 1.0 - d / risk);
                any_event = true;
            }
        }
        if (!any_event && warnings) ++warnings->empty_neighbourhoods;
        return survival;
    }

    const MarkerPanel& mp_;
    std::vector<double> values_;
    std::vector<std::size_t> spell_of_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> group_begin_;
    std::vector<double> group_value_;
    std::vector<double> group_weight_;
    std::vector<double> group_cdf_;
    std::size_t window_markers_ = 1;
    int max_age_ = 0;

    // sliding window state
    std::vector<double> event_mass_;
    std::vector<double> risk_diff_;
    std::size_t lo_ = 0;
    std::size_t hi_ = 0;
    std::size_t count_ = 0;
};

}  // namespace

double akritas_survivor(const MarkerPanel& mp, double threshold, int t,
                        const AkritasOptions& options, TrocWarnings* warnings) {
    if (t <= 0) return 1.0;
    SmoothedSurvivor smoother(mp, options.bandwidth);
    const std::vector<double> survivors = smoother.conditional_survivors(t, nullptr);
    double sum = 0.0;
    bool any = false;
    for (std::size_t g = 0; g < smoother.groups(); ++g) {
        if (smoother.value_of(g) > threshold) {
            sum += smoother.weight_of(g) * survivors[g];
            any = true;
        }
    }
    if (!any && warnings) ++warnings->vacuous_thresholds;
    return sum;  // empty-sum convention: 0 when no marker qualifies
}

TRocCurve troc(const MarkerPanel& mp, int t, const AkritasOptions& options, int grid_points) {
    if (mp.spells.empty()) throw EmptyPanel();
    bool any_event_by_t = false;
    bool any_survivor_past_t = false;
    for (const MarkerSpell& spell : mp.spells) {
        if (spell.event && spell.observed_time <= t) any_event_by_t = true;
        if (spell.observed_time > t) any_survivor_past_t = true;
    }
    if (!any_event_by_t || !any_survivor_past_t)
        throw NumericError("degenerate horizon t=" + std::to_string(t) +
                           ": needs both an event by t and a survivor past t");

    TRocCurve curve;
    curve.horizon = t;
    curve.bandwidth = options.bandwidth;

    SmoothedSurvivor smoother(mp, options.bandwidth);
    const std::vector<double> survivors = smoother.conditional_survivors(t, &curve.warnings);

    const std::size_t g = smoother.groups();
    // Suffix sums over groups above a threshold.
    std::vector<double> suffix_weight(g + 1, 0.0);
    std::vector<double> suffix_weighted_survivor(g + 1, 0.0);
    for (std::size_t k = g; k-- > 0;) {
        suffix_weight[k] = suffix_weight[k + 1] + smoother.weight_of(k);
        suffix_weighted_survivor[k] =
            suffix_weighted_survivor[k + 1] + smoother.weight_of(k) * survivors[k];
    }
    const double s_all = suffix_weighted_survivor[0];  // S(t) at p_c = -inf
    if (s_all <= 0.0 || s_all >= 1.0)
        throw NumericError("degenerate horizon: smoothed survivor hit " +
                           std::to_string(s_all));

    auto point_at = [&](double threshold, std::size_t first_above) {
        TrocPoint point;
        point.threshold = threshold;
        const double above = suffix_weight[first_above];
        const double above_survivor = suffix_weighted_survivor[first_above];
        point.true_positive = std::clamp((above - above_survivor) / (1.0 - s_all), 0.0, 1.0);
        point.false_positive = std::clamp(above_survivor / s_all, 0.0, 1.0);
        return point;
    };

    curve.points.push_back(point_at(-std::numeric_limits<double>::infinity(), 0));
    // Threshold grid: marker-value quantiles.
    const int wanted = std::max(1, grid_points);
    std::size_t previous_group = g + 1;
    for (int q = 0; q < wanted; ++q) {
        const std::size_t idx =
            wanted == 1 ? 0
                        : static_cast<std::size_t>(std::llround(
                              static_cast<double>(q) * static_cast<double>(g - 1) /
                              static_cast<double>(wanted - 1)));
        if (idx == previous_group) continue;
        previous_group = idx;
        // Threshold at the group's value: markers strictly above qualify.
        curve.points.push_back(point_at(smoother.value_of(idx), idx + 1));
    }
    curve.points.push_back(point_at(std::numeric_limits<double>::infinity(), g));

    // Trapezoid over points sorted by false-positive rate; vertical runs
    // (tied F+) contribute nothing.
    std::vector<std::pair<double, double>> sorted;
    sorted.reserve(curve.points.size());
    for (const TrocPoint& point : curve.points)
        sorted.emplace_back(point.false_positive, point.true_positive);
    std::sort(sorted.begin(), sorted.end());
    double auc = 0.0;
    for (std::size_t i = 1; i < sorted.size(); ++i)
        auc += (sorted[i].first - sorted[i - 1].first) *
               (sorted[i].second + sorted[i - 1].second) / 2.0;
    curve.auc = std::clamp(auc, 0.0, 1.0);
    return curve;
}

}  // namespace pdterm
