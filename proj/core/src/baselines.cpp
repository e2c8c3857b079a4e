#include "pdterm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <Eigen/Dense>

#include "pdterm/csv.hpp"
#include "pdterm/errors.hpp"

namespace pdterm {

std::map<YearMonth, double> portfolio_default_rate(const SpellPanel& panel) {
    if (panel.empty()) throw EmptyPanel();
    const int first = panel.first_month().index();
    const int last = panel.last_month().index();
    if (last - first < 12)
        throw ValidationError("panel must span at least 13 calendar months");

    std::unordered_map<std::int64_t, std::vector<int>> default_months;
    for (const Spell& spell : panel.spells())
        if (spell.defaulted()) default_months[spell.loan_id].push_back(spell.stop_month.index());
    for (auto& [loan, months] : default_months) std::sort(months.begin(), months.end());

    std::map<YearMonth, double> series;
    std::map<int, std::pair<std::size_t, std::size_t>> counts;  // month -> (defaulted, at risk)
    for (const PanelRow& row : panel.rows()) {
        const int m = row.date.index();
        if (m + 12 > last) continue;  // incomplete outcome window
        auto& [hit, size] = counts[m];
        ++size;
        const auto it = default_months.find(row.loan_id);
        if (it != default_months.end()) {
            const auto next = std::upper_bound(it->second.begin(), it->second.end(), m);
            if (next != it->second.end() && *next <= m + 12) ++hit;
        }
    }
    for (const auto& [m, c] : counts)
        series[YearMonth::from_index(m)] =
            static_cast<double>(c.first) / static_cast<double>(c.second);
    return series;
}

double MacroModel::predict(const std::vector<double>& macro_values) const {
    if (macro_values.size() + 1 != coefficients.size())
        throw ValidationError("macro value count does not match the fitted model");
    double eta = coefficients[0];
    for (std::size_t j = 0; j < macro_values.size(); ++j)
        eta += coefficients[j + 1] * macro_values[j];
    return link == MacroLink::kIdentity ? eta : 1.0 / (1.0 + std::exp(-eta));
}

MacroModel fit_macro_model(const std::vector<YearMonth>& months,
                           const std::vector<double>& default_rate,
                           const std::vector<std::vector<double>>& macro_columns,
                           const std::vector<std::string>& macro_names, MacroLink link) {
    const std::size_t n = default_rate.size();
    if (n == 0) throw ValidationError("empty default-rate series");
    if (months.size() != n) throw ValidationError("months and rates must align");
    const std::size_t p = macro_columns.size();
    if (macro_names.size() != p) throw ValidationError("macro names and columns must align");
    for (const auto& col : macro_columns)
        if (col.size() != n) throw ValidationError("macro column length mismatch");
    if (n <= p + 1) throw ValidationError("not enough months to fit the macro model");

    Eigen::MatrixXd x(n, p + 1);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        for (std::size_t j = 0; j < p; ++j) x(i, j + 1) = macro_columns[j][i];
        y(i) = default_rate[i];
    }

    MacroModel model;
    model.link = link;
    model.covariates.push_back("(intercept)");
    for (const std::string& name : macro_names) model.covariates.push_back(name);
    model.months = months;

    Eigen::VectorXd beta;
    if (link == MacroLink::kIdentity) {
        beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    } else {
        // Quasi-binomial IRLS on the rate series.
        beta = Eigen::VectorXd::Zero(p + 1);
        const double eps = 1e-9;
        for (int iter = 0; iter < 100; ++iter) {
            Eigen::VectorXd eta = x * beta;
            Eigen::VectorXd mu = eta.unaryExpr(
                [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
            Eigen::VectorXd w = mu.array() * (1.0 - mu.array()) + eps;
            Eigen::VectorXd z = eta.array() + (y - mu).array() / w.array();
            Eigen::MatrixXd xtwx = x.transpose() * w.asDiagonal() * x;
            Eigen::VectorXd next = xtwx.ldlt().solve(x.transpose() * (w.asDiagonal() * z));
            const double delta = (next - beta).cwiseAbs().maxCoeff();
            beta = next;
            if (delta < 1e-10) break;
        }
    }
    if (!beta.allFinite()) throw NumericError("macro model fit failed");

    model.coefficients.assign(beta.data(), beta.data() + p + 1);
    model.fitted.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double eta = beta(0);
        for (std::size_t j = 0; j < p; ++j) eta += beta(j + 1) * macro_columns[j][i];
        model.fitted[i] = link == MacroLink::kIdentity ? eta : 1.0 / (1.0 + std::exp(-eta));
        if (model.fitted[i] < 0.0 || model.fitted[i] > 1.0) ++model.out_of_range;
    }
    model.anchor = model.fitted.back();
    return model;
}

double proportional_shift(double x, double mu_t, double mu_anchor, ClipCounter* counter) {
    if (mu_anchor == 0.0) throw ValidationError("proportional shift needs a nonzero anchor");
    const double raw = x * mu_t / mu_anchor;
    const double clipped = std::clamp(raw, 0.0, 1.0);
    if (clipped != raw && counter) ++counter->clipped;
    return clipped;
}

LifetimePdCurve bellini_lifetime_pd(double pd, const std::vector<double>& mu_forecast,
                                    double mu_anchor) {
    if (mu_forecast.empty()) throw ValidationError("need at least one forecast month");
    if (pd <= 0.0 || pd >= 1.0)
        throw ValidationError("the anchor PD must lie strictly between 0 and 1");
    LifetimePdCurve curve;
    ClipCounter clip;
    double survival = 1.0;
    for (double mu : mu_forecast) {
        const double hazard = proportional_shift(pd, mu, mu_anchor, &clip);
        curve.shifted_hazard.push_back(hazard);
        curve.lifetime_pd.push_back(survival * hazard);
        survival *= 1.0 - hazard;
        curve.survival.push_back(survival);
    }
    curve.clipped = clip.clipped;
    return curve;
}

void DefaultsTable::validate() const {
    const std::size_t n = cohorts.size();
    if (n == 0) throw ValidationError("defaults table has no cohorts");
    if (initial_volume.size() != n || defaults.size() != n)
        throw ValidationError("defaults table columns must align with cohorts");
    std::size_t prev_len = defaults[0].size();
    for (std::size_t t = 0; t < n; ++t) {
        if (initial_volume[t] <= 0.0)
            throw ValidationError("cohort " + cohorts[t] + " has no initial volume");
        double total = 0.0;
        for (double d : defaults[t]) {
            if (d < 0.0) throw ValidationError("negative default count in cohort " + cohorts[t]);
            total += d;
        }
        if (total > initial_volume[t])
            throw ValidationError("cohort " + cohorts[t] + " defaults exceed its volume");
        if (t > 0 && defaults[t].size() > prev_len)
            throw ValidationError("defaults table must be a lower staircase (cohort " +
                                  cohorts[t] + " is longer than its predecessor)");
        prev_len = defaults[t].size();
    }
}

std::size_t DefaultsTable::lifetime_points() const {
    std::size_t v = 0;
    for (const auto& row : defaults) v = std::max(v, row.size());
    return v;
}

DefaultsTable DefaultsTable::from_csv(const std::string& path) {
    csv::Reader reader(path);
    const int cohort_col = reader.column("Cohort");
    const int volume_col = reader.column("InitialVolume");
    if (cohort_col < 0) throw MissingColumn("Cohort");
    if (volume_col < 0) throw MissingColumn("InitialVolume");
    std::vector<int> d_cols;
    for (int v = 1;; ++v) {
        const int col = reader.column("d_" + std::to_string(v));
        if (col < 0) break;
        d_cols.push_back(col);
    }
    if (d_cols.empty()) throw MissingColumn("d_1");

    DefaultsTable table;
    std::vector<std::string_view> fields;
    while (reader.next(fields)) {
        if (fields.size() <= static_cast<std::size_t>(std::max(cohort_col, volume_col)))
            throw ParseError(reader.line(), "short record in defaults table");
        table.cohorts.emplace_back(fields[cohort_col]);
        table.initial_volume.push_back(
            csv::parse_double(fields[volume_col], reader.line(), "InitialVolume"));
        std::vector<double> row;
        for (int col : d_cols) {
            if (static_cast<std::size_t>(col) >= fields.size()) break;
            const std::string_view value = fields[col];
            if (value.empty()) break;  // staircase edge
            row.push_back(csv::parse_double(value, reader.line(), "d_v"));
        }
        table.defaults.push_back(std::move(row));
    }
    table.validate();
    return table;
}

void DefaultsTable::write_csv(std::ostream& out) const {
    csv::Writer writer(out);
    std::vector<std::string> fields = {"Cohort", "InitialVolume"};
    for (std::size_t v = 1; v <= lifetime_points(); ++v)
        fields.push_back("d_" + std::to_string(v));
    writer.row(fields);
    for (std::size_t t = 0; t < cohorts.size(); ++t) {
        fields.assign({cohorts[t], csv::format_double(initial_volume[t])});
        for (double d : defaults[t]) fields.push_back(csv::format_double(d));
        fields.resize(2 + lifetime_points());
        writer.row(fields);
    }
}

std::map<int, double> breed_term_structure(const DefaultsTable& table, int reference_months) {
    table.validate();
    if (reference_months < 1) throw ValidationError("reference period must be >= 1 month");
    const int n = static_cast<int>(table.cohorts.size());
    if (n < reference_months)
        throw ValidationError("defaults table has fewer cohorts than the reference period");

    std::map<int, double> term_structure;
    for (int v = 1;; ++v) {
        // Window anchored at the newest cohort, slid back v-1 cohorts.
        const int hi = n - 1 - (v - 1);
        const int lo = hi - (reference_months - 1);
        if (lo < 0) break;
        double defaults = 0.0;
        double volume = 0.0;
        bool complete = true;
        for (int w = lo; w <= hi; ++w) {
            if (table.defaults[w].size() < static_cast<std::size_t>(v)) {
                complete = false;
                break;
            }
            defaults += table.defaults[w][v - 1];
            volume += table.initial_volume[w];
        }
        if (!complete) break;
        term_structure[v] = defaults / volume;
    }
    if (term_structure.empty())
        throw ValidationError("no horizon has a complete reference window");
    return term_structure;
}

std::map<std::pair<int, int>, double> empirical_cohort_rate(const DefaultsTable& table) {
    table.validate();
    std::map<std::pair<int, int>, double> rates;
    for (std::size_t t = 0; t < table.cohorts.size(); ++t) {
        double survivors = table.initial_volume[t];
        for (std::size_t v = 0; v < table.defaults[t].size(); ++v) {
            if (survivors <= 0.0)
                throw ValidationError("cohort " + table.cohorts[t] +
                                      " ran out of survivors before its last lifetime point");
            rates[{static_cast<int>(t), static_cast<int>(v) + 1}] =
                table.defaults[t][v] / survivors;
            survivors -= table.defaults[t][v];
        }
    }
    return rates;
}

namespace {

DefaultsTable table_from_spells(const std::vector<const Spell*>& first_spells,
                                int panel_last_month) {
    // Cohort = inferred origination month; horizon = spell age at default.
    std::map<int, std::pair<double, std::map<int, double>>> cohorts;  // month -> (volume, d_v)
    for (const Spell* spell : first_spells) {
        const int origination = spell->stop_month.index() - spell->stop_time + 1;
        auto& [volume, d] = cohorts[origination];
        volume += 1.0;
        if (spell->defaulted()) d[spell->stop_time] += 1.0;
    }
    DefaultsTable table;
    for (const auto& [month, data] : cohorts) {
        table.cohorts.push_back(YearMonth::from_index(month).str());
        table.initial_volume.push_back(data.first);
        // Observable lifetime of this cohort within the sampling window.
        const int observable = std::max(panel_last_month - month + 1, 1);
        std::vector<double> row(observable, 0.0);
        for (const auto& [age, count] : data.second) row[age - 1] = count;
        table.defaults.push_back(std::move(row));
    }
    table.validate();
    return table;
}

}  // namespace

DefaultsTable defaults_table_from_panel(const SpellPanel& panel) {
    if (panel.empty()) throw EmptyPanel();
    std::vector<const Spell*> first_spells;
    for (const Spell& spell : panel.spells())
        if (spell.spell_num == 1) first_spells.push_back(&spell);
    return table_from_spells(first_spells, panel.last_month().index());
}

std::map<std::string, DefaultsTable> defaults_table_by_segment(const SpellPanel& panel,
                                                               const std::string& covariate) {
    if (panel.empty()) throw EmptyPanel();
    const auto slot = panel.categorical_slot(covariate);
    if (!slot) throw ValidationError("segmentation needs a categorical covariate: " + covariate);
    std::map<std::string, std::vector<const Spell*>> segments;
    for (const Spell& spell : panel.spells()) {
        if (spell.spell_num != 1) continue;
        const auto level = panel.category(spell.first_row, *slot);
        segments[panel.levels(*slot)[level]].push_back(&spell);
    }
    std::map<std::string, DefaultsTable> tables;
    for (const auto& [segment, spells] : segments)
        tables[segment] = table_from_spells(spells, panel.last_month().index());
    return tables;
}

}  // namespace pdterm
