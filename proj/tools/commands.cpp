#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdterm/baselines.hpp"
#include "pdterm/brier.hpp"
#include "pdterm/calibration.hpp"
#include "pdterm/csv.hpp"
#include "pdterm/errors.hpp"
#include "pdterm/hazard_model.hpp"
#include "pdterm/life_table.hpp"
#include "pdterm/panel.hpp"
#include "pdterm/resample.hpp"
#include "pdterm/simulate.hpp"
#include "pdterm/troc.hpp"
#include "pdterm/version.hpp"

namespace pdterm::cli {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------- plumbing

std::uint64_t fnv1a(std::string_view data, std::uint64_t hash = 0xcbf29ce484222325ULL) {
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open input: " + path);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        hash = fnv1a(std::string_view(buf, static_cast<std::size_t>(in.gcount())), hash);
    return hex64(hash);
}

// All outputs go through a temp file and a rename, so a failed run never
// leaves a half-written artifact behind.
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& writer) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ValidationError("cannot open for writing: " + path);
        writer(out);
        if (!out) throw ValidationError("write failed: " + path);
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Run manifest: enough to re-run the command and to notice when anything
// (config, seed, inputs) changed. Contains no timestamps, so a rerun with
// identical inputs produces identical bytes.
class Manifest {
  public:
    Manifest(std::string command, const std::string& config_echo)
        : command_(std::move(command)), config_hash_(hex64(fnv1a(config_echo))) {}

    void input(const std::string& path) { inputs_[path] = file_digest(path); }
    void output(const std::string& path) { outputs_.push_back(path); }
    void seed(std::uint64_t value) { seed_ = value; }

    void write(const std::string& path) const {
        json j;
        j["tool"] = std::string("pd-term ") + kVersion;
        j["command"] = command_;
        j["config_hash"] = config_hash_;
        if (seed_) j["seed"] = *seed_;
        j["inputs"] = inputs_;
        j["outputs"] = outputs_;
        atomic_write(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
    }

  private:
    std::string command_;
    std::string config_hash_;
    std::optional<std::uint64_t> seed_;
    std::map<std::string, std::string> inputs_;
    std::vector<std::string> outputs_;
};

int resolve_threads(int option_value) {
    if (option_value > 0) return option_value;
    if (const char* env = std::getenv("PD_TERM_THREADS")) {
        const int parsed = std::atoi(env);
        if (parsed > 0) return parsed;
    }
    return 1;
}

std::string sibling_path(const std::string& base, const std::string& suffix) {
    std::filesystem::path p(base);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string config_path;
    std::string out_panel;
    std::string out_truth;
    std::string out_echo;
    std::string manifest_path;
    int threads = 0;
};

int run_simulate(const SimulateArgs& args) {
    const SimConfig config = SimConfig::from_json_string(read_text_file(args.config_path));
    const std::string truth_path =
        args.out_truth.empty() ? sibling_path(args.out_panel, "_truth.csv") : args.out_truth;
    const std::string echo_path =
        args.out_echo.empty() ? sibling_path(args.out_panel, "_config.json") : args.out_echo;

    const SimResult result = simulate(config, resolve_threads(args.threads));

    atomic_write(args.out_panel, [&](std::ostream& out) { write_panel(result.panel, out); });
    atomic_write(truth_path,
                 [&](std::ostream& out) { write_ground_truth(result.panel, result.truth, out); });
    atomic_write(echo_path, [&](std::ostream& out) { out << config.to_json_string() << '\n'; });

    Manifest manifest("simulate", config.to_json_string());
    manifest.seed(config.seed);
    manifest.input(args.config_path);
    manifest.output(args.out_panel);
    manifest.output(truth_path);
    manifest.output(echo_path);
    manifest.write(args.manifest_path.empty() ? args.out_panel + ".manifest.json"
                                              : args.manifest_path);

    std::cerr << "simulated " << result.panel.loan_count() << " loans, "
              << result.panel.spells().size() << " spells, " << result.panel.rows().size()
              << " rows\n";
    return 0;
}

// -------------------------------------------------------------------- split

struct SplitArgs {
    std::string in_path;
    double fraction = 0.7;
    std::uint64_t seed = 1;
    std::string out_train;
    std::string out_valid;
    std::string report_path;
    std::string manifest_path;
};

int run_split(const SplitArgs& args) {
    const SpellPanel panel = load_panel(args.in_path);
    const SplitResult split = clustered_split(panel, args.fraction, args.seed);

    atomic_write(args.out_train, [&](std::ostream& out) { write_panel(split.train, out); });
    atomic_write(args.out_valid, [&](std::ostream& out) { write_panel(split.valid, out); });

    json report;
    report["sampling_fraction"] = args.fraction;
    report["seed"] = args.seed;
    report["loans"] = {{"full", panel.loan_count()},
                       {"train", split.train.loan_count()},
                       {"valid", split.valid.loan_count()}};
    for (ResolutionType type : kAllResolutions) {
        const ResolutionRateSeries full = resolution_rate(panel, type);
        const ResolutionRateSeries train = resolution_rate(split.train, type);
        const ResolutionRateSeries valid = resolution_rate(split.valid, type);
        json entry;
        entry["full_vs_train"] = average_discrepancy(full, train);
        entry["full_vs_valid"] = average_discrepancy(full, valid);
        entry["train_vs_valid"] = average_discrepancy(train, valid);
        report["average_discrepancy"][std::string(resolution_name(type))] = entry;
    }
    const std::string report_path =
        args.report_path.empty() ? sibling_path(args.out_train, "_ad.json") : args.report_path;
    atomic_write(report_path, [&](std::ostream& out) { out << report.dump(2) << '\n'; });

    std::ostringstream config;
    config << "split fraction=" << args.fraction << " seed=" << args.seed;
    Manifest manifest("split", config.str());
    manifest.seed(args.seed);
    manifest.input(args.in_path);
    manifest.output(args.out_train);
    manifest.output(args.out_valid);
    manifest.output(report_path);
    manifest.write(args.manifest_path.empty() ? args.out_train + ".manifest.json"
                                              : args.manifest_path);
    return 0;
}

// ----------------------------------------------------------------------- km

struct KmArgs {
    std::string in_path;
    std::string out_path;
    int age_cap = 0;
    double level = 0.95;
    std::string manifest_path;
};

int run_km(const KmArgs& args) {
    const SpellPanel panel = load_panel(args.in_path);
    const LifeTable table = build_life_table(panel, args.age_cap);
    const SurvivalBand band = greenwood_ci(table, args.level);

    atomic_write(args.out_path, [&](std::ostream& out) {
        csv::Writer writer(out);
        writer.row({"age", "n_risk", "failures", "censored", "hazard", "survival", "density",
                    "variance", "lower", "upper"});
        for (std::size_t k = 0; k < table.size(); ++k)
            writer.row({std::to_string(table.age[k]), csv::format_double(table.n_risk[k]),
                        csv::format_double(table.failures[k]),
                        csv::format_double(table.censored[k]),
                        csv::format_double(table.hazard[k]),
                        csv::format_double(table.survival[k]),
                        csv::format_double(table.density[k]),
                        csv::format_double(table.variance[k]),
                        csv::format_double(band.lower[k]), csv::format_double(band.upper[k])});
    });

    std::ostringstream config;
    config << "km age_cap=" << args.age_cap << " level=" << args.level;
    Manifest manifest("km", config.str());
    manifest.input(args.in_path);
    manifest.output(args.out_path);
    manifest.write(args.manifest_path.empty() ? args.out_path + ".manifest.json"
                                              : args.manifest_path);
    return 0;
}

// ---------------------------------------------------------------------- fit

struct FitArgs {
    std::string in_path;
    std::string spec_path;
    std::string out_model;
    std::string out_coef;
    std::string report_path;
    std::string manifest_path;
    double tol = 1e-8;
    int max_iter = 50;
    int threads = 0;
    bool allow_nonconverged = false;
};

int run_fit(const FitArgs& args) {
    const std::string spec_text =
        args.spec_path.empty() ? std::string("{}") : read_text_file(args.spec_path);
    const ModelSpec spec = ModelSpec::from_json_string(spec_text);
    const SpellPanel panel = load_panel(args.in_path);
    const DesignMatrix design = build_design(panel, spec);

    FitOptions options;
    options.tol = args.tol;
    options.max_iter = args.max_iter;
    options.threads = resolve_threads(args.threads);
    const FittedDthModel model = fit(design, options);
    if (!model.converged && !args.allow_nonconverged)
        throw NotConverged("fit did not converge in " + std::to_string(model.iterations) +
                           " iterations (rerun with --allow-nonconverged to keep it)");

    atomic_write(args.out_model, [&](std::ostream& out) { out << model.to_json_string() << '\n'; });

    const std::string coef_path =
        args.out_coef.empty() ? sibling_path(args.out_model, "_coef.csv") : args.out_coef;
    atomic_write(coef_path, [&](std::ostream& out) {
        csv::Writer writer(out);
        writer.row({"term", "coefficient", "std_error"});
        for (std::size_t j = 0; j < model.coefficients.size(); ++j) {
            const std::string label = j < model.stratum_labels.size()
                                          ? model.stratum_labels[j]
                                          : model.extra_labels[j - model.stratum_labels.size()];
            writer.row({label, csv::format_double(model.coefficients[j]),
                        csv::format_double(model.std_errors[j])});
        }
    });

    json report;
    report["converged"] = model.converged;
    report["ridged"] = model.ridged;
    report["iterations"] = model.iterations;
    report["deviance"] = model.deviance;
    report["design_width"] = design.width();
    report["strata"] = design.strata();
    report["rows"] = design.rows();
    std::size_t events = 0;
    for (std::size_t r = 0; r < design.rows(); ++r) events += design.response(r);
    report["events"] = events;
    report["dropped_strata"] = design.dropped_strata();
    const std::string report_path = args.report_path.empty()
                                        ? sibling_path(args.out_model, "_report.json")
                                        : args.report_path;
    atomic_write(report_path, [&](std::ostream& out) { out << report.dump(2) << '\n'; });

    Manifest manifest("fit", spec.to_json_string() + "|tol=" + csv::format_double(args.tol) +
                                 "|max_iter=" + std::to_string(args.max_iter));
    manifest.input(args.in_path);
    if (!args.spec_path.empty()) manifest.input(args.spec_path);
    manifest.output(args.out_model);
    manifest.output(coef_path);
    manifest.output(report_path);
    manifest.write(args.manifest_path.empty() ? args.out_model + ".manifest.json"
                                              : args.manifest_path);

    std::cerr << "fit: " << design.rows() << " rows, width " << design.width() << ", "
              << model.iterations << " iterations, deviance " << model.deviance << "\n";
    return 0;
}

// ------------------------------------------------------------------ predict

struct PredictArgs {
    std::string model_path;
    std::string in_path;
    std::string out_path;
    std::string manifest_path;
};

int run_predict(const PredictArgs& args) {
    const FittedDthModel model = FittedDthModel::from_json_file(args.model_path);
    const SpellPanel panel = load_panel(args.in_path);
    const std::vector<double> hazard = predict_hazard(model, panel);

    atomic_write(args.out_path, [&](std::ostream& out) {
        csv::Writer writer(out);
        writer.row({"LoanID", "Date", "SpellNum", "SpellPeriod", "Hazard"});
        for (std::size_t r = 0; r < panel.rows().size(); ++r) {
            const PanelRow& row = panel.rows()[r];
            writer.row({std::to_string(row.loan_id), row.date.str(),
                        std::to_string(row.spell_num), std::to_string(row.spell_period),
                        csv::format_double(hazard[r])});
        }
    });

    Manifest manifest("predict", "predict");
    manifest.input(args.model_path);
    manifest.input(args.in_path);
    manifest.output(args.out_path);
    manifest.write(args.manifest_path.empty() ? args.out_path + ".manifest.json"
                                              : args.manifest_path);
    return 0;
}

// ----------------------------------------------------------------- diagnose

struct DiagnoseArgs {
    std::string model_path;
    std::string in_path;
    std::string pred_path;  // optional marker override
    std::string out_dir;
    std::vector<int> horizons = {3, 12, 24, 36};
    double bandwidth = 0.05;
    int t_star = 0;
    int age_cap = 0;
    int grid = 512;
    std::string manifest_path;
};

std::vector<double> markers_from_csv(const SpellPanel& panel, const std::string& path) {
    csv::Reader reader(path);
    const int loan_col = reader.column("LoanID");
    const int spell_col = reader.column("SpellNum");
    const int period_col = reader.column("SpellPeriod");
    const int hazard_col = reader.column("Hazard");
    if (loan_col < 0 || spell_col < 0 || period_col < 0 || hazard_col < 0)
        throw MissingColumn("LoanID/SpellNum/SpellPeriod/Hazard");
    std::map<std::tuple<std::int64_t, int, int>, double> by_key;
    std::vector<std::string_view> fields;
    while (reader.next(fields)) {
        if (fields.size() < reader.header().size())
            throw ParseError(reader.line(), "short record in prediction file");
        by_key[{csv::parse_int(fields[loan_col], reader.line(), "LoanID"),
                static_cast<int>(csv::parse_int(fields[spell_col], reader.line(), "SpellNum")),
                static_cast<int>(
                    csv::parse_int(fields[period_col], reader.line(), "SpellPeriod"))}] =
            csv::parse_double(fields[hazard_col], reader.line(), "Hazard");
    }
    std::vector<double> markers(panel.rows().size());
    for (std::size_t r = 0; r < panel.rows().size(); ++r) {
        const PanelRow& row = panel.rows()[r];
        const auto it = by_key.find({row.loan_id, row.spell_num, row.spell_period});
        if (it == by_key.end())
            throw ValidationError("prediction file lacks a row for loan " +
                                  std::to_string(row.loan_id));
        markers[r] = it->second;
    }
    return markers;
}

int run_diagnose(const DiagnoseArgs& args) {
    const FittedDthModel model = FittedDthModel::from_json_file(args.model_path);
    const SpellPanel panel = load_panel(args.in_path);
    std::filesystem::create_directories(args.out_dir);
    auto in_dir = [&](const std::string& name) {
        return (std::filesystem::path(args.out_dir) / name).string();
    };

    int max_age = 0;
    for (const Spell& spell : panel.spells()) max_age = std::max(max_age, spell.stop_time);
    const int t_star = args.t_star > 0 ? std::min(args.t_star, max_age) : std::min(120, max_age);

    const std::vector<double> markers = args.pred_path.empty()
                                            ? predict_hazard(model, panel)
                                            : markers_from_csv(panel, args.pred_path);
    const MarkerPanel marker_panel = make_marker_panel(panel, markers);

    json summary;
    summary["horizons"] = args.horizons;
    summary["bandwidth"] = args.bandwidth;
    summary["t_star"] = t_star;

    for (int horizon : args.horizons) {
        const TRocCurve curve = troc(marker_panel, horizon, {args.bandwidth}, args.grid);
        atomic_write(in_dir("troc_h" + std::to_string(horizon) + ".csv"),
                     [&](std::ostream& out) {
                         csv::Writer writer(out);
                         writer.row({"threshold", "false_positive", "true_positive"});
                         for (const TrocPoint& point : curve.points)
                             writer.row({csv::format_double(point.threshold),
                                         csv::format_double(point.false_positive),
                                         csv::format_double(point.true_positive)});
                     });
        summary["tauc"][std::to_string(horizon)] = curve.auc;
    }

    std::vector<int> grid;
    for (int t = 1; t <= t_star; ++t) grid.push_back(t);
    const std::vector<std::vector<double>> survival = survival_at_horizons(model, panel, grid);
    const TBsCurve brier = tbs_curve(marker_panel, survival, grid);
    atomic_write(in_dir("tbs.csv"), [&](std::ostream& out) {
        csv::Writer writer(out);
        writer.row({"horizon", "tbs"});
        for (std::size_t k = 0; k < brier.horizons.size(); ++k)
            writer.row(
                {std::to_string(brier.horizons[k]), csv::format_double(brier.scores[k])});
    });
    summary["ibs"] = brier.ibs;
    summary["ibs_rule_of_thumb_pass"] = brier.ibs < 0.25;  // 0.5-predictor cut-off

    const LifeTable table = build_life_table(panel, args.age_cap);
    const int cap = table.age.empty() ? 1 : table.age.back();
    const auto actual = empirical_term_structure(table);
    const TermStructurePrediction expected = predict_term_structure(model, panel, cap);
    std::map<int, double> expected_map;
    for (std::size_t k = 0; k < expected.portfolio.age.size(); ++k)
        expected_map[expected.portfolio.age[k]] = expected.portfolio.density[k];
    atomic_write(in_dir("term_structure.csv"), [&](std::ostream& out) {
        csv::Writer writer(out);
        writer.row({"age", "actual", "expected"});
        for (const auto& [age, dens] : actual) {
            const auto it = expected_map.find(age);
            writer.row({std::to_string(age), csv::format_double(dens),
                        csv::format_double(it == expected_map.end() ? 0.0 : it->second)});
        }
    });
    summary["term_structure_mae"] = term_structure_mae(actual, expected_map, cap);
    summary["term_structure_age_cap"] = cap;

    const std::vector<double> rolling = rolling_12m_default_probability(model, panel);
    const DefaultRateSeries rates = default_rate_series(panel, rolling);
    atomic_write(in_dir("default_rates.csv"), [&](std::ostream& out) {
        csv::Writer writer(out);
        writer.row({"month", "empirical", "expected"});
        for (std::size_t i = 0; i < rates.months.size(); ++i)
            writer.row({rates.months[i].str(), csv::format_double(rates.empirical[i]),
                        csv::format_double(rates.expected[i])});
    });
    summary["default_rate_mae"] = rates.mae;

    atomic_write(in_dir("summary.json"),
                 [&](std::ostream& out) { out << summary.dump(2) << '\n'; });

    std::ostringstream config;
    config << "diagnose bandwidth=" << args.bandwidth << " t_star=" << t_star
           << " grid=" << args.grid;
    for (int h : args.horizons) config << " h=" << h;
    Manifest manifest("diagnose", config.str());
    manifest.input(args.model_path);
    manifest.input(args.in_path);
    if (!args.pred_path.empty()) manifest.input(args.pred_path);
    for (int horizon : args.horizons)
        manifest.output(in_dir("troc_h" + std::to_string(horizon) + ".csv"));
    manifest.output(in_dir("tbs.csv"));
    manifest.output(in_dir("term_structure.csv"));
    manifest.output(in_dir("default_rates.csv"));
    manifest.output(in_dir("summary.json"));
    manifest.write(args.manifest_path.empty() ? in_dir("manifest.json") : args.manifest_path);
    return 0;
}

// ---------------------------------------------------------------- baselines

struct BelliniArgs {
    std::string in_path;
    double pd = 0.02;
    std::string link = "identity";
    std::vector<std::string> macro;
    int horizon = 12;
    std::string forecast_path;
    std::string out_path;
    std::string out_macro;
    bool account_level = false;
    std::string manifest_path;
};

int run_bellini(const BelliniArgs& args) {
    const SpellPanel panel = load_panel(args.in_path);
    const MacroLink link = args.link == "logit" ? MacroLink::kLogit : MacroLink::kIdentity;

    // Macro covariates are constant within a calendar month; collect one
    // value per month per covariate.
    std::vector<std::size_t> slots;
    for (const std::string& name : args.macro) {
        const auto slot = panel.numeric_slot(name);
        if (!slot) throw ValidationError("panel lacks numeric covariate: " + name);
        slots.push_back(*slot);
    }
    std::map<int, std::vector<double>> macro_by_month;
    for (std::size_t r = 0; r < panel.rows().size(); ++r) {
        auto& values = macro_by_month[panel.rows()[r].date.index()];
        if (values.empty())
            for (std::size_t slot : slots) values.push_back(panel.numeric(r, slot));
    }

    const auto rate_series = portfolio_default_rate(panel);
    std::vector<YearMonth> months;
    std::vector<double> rates;
    std::vector<std::vector<double>> columns(slots.size());
    for (const auto& [month, rate] : rate_series) {
        months.push_back(month);
        rates.push_back(rate);
        const auto& values = macro_by_month.at(month.index());
        for (std::size_t j = 0; j < slots.size(); ++j) columns[j].push_back(values[j]);
    }
    const MacroModel macro_model = fit_macro_model(months, rates, columns, args.macro, link);

    // Forecast mu over the horizon: a CSV of future macro values, or a flat
    // extension of the last observed month.
    std::vector<double> mu_forecast;
    if (!args.forecast_path.empty()) {
        csv::Reader reader(args.forecast_path);
        std::vector<int> cols;
        for (const std::string& name : args.macro) {
            const int col = reader.column(name);
            if (col < 0) throw MissingColumn(name);
            cols.push_back(col);
        }
        std::vector<std::string_view> fields;
        while (reader.next(fields)) {
            std::vector<double> z;
            for (int col : cols)
                z.push_back(csv::parse_double(fields[col], reader.line(), "macro"));
            mu_forecast.push_back(macro_model.predict(z));
        }
    } else {
        std::vector<double> last;
        for (std::size_t j = 0; j < slots.size(); ++j) last.push_back(columns[j].back());
        mu_forecast.assign(args.horizon, macro_model.predict(last));
    }
    if (mu_forecast.empty()) throw ValidationError("empty macro forecast");

    std::size_t clipped = 0;
    if (args.account_level) {
        // Account-level variant: a single-stratum logistic regression of the
        // monthly event indicator on the macro covariates; its per-account
        // prediction is macro-shifted and chained like the portfolio PD.
        ModelSpec spec;
        spec.time_bins = TimeBins({1000000});
        spec.use_spell_bins = false;
        spec.interact_time_spell = false;
        spec.numeric_covariates = args.macro;
        spec.event_weight = 1.0;
        const FittedDthModel account_model = fit(build_design(panel, spec));
        const std::vector<double> mu_account = predict_hazard(account_model, panel);

        atomic_write(args.out_path, [&](std::ostream& out) {
            csv::Writer writer(out);
            writer.row({"LoanID", "horizon", "shifted_hazard", "survival", "lifetime_pd"});
            std::map<std::int64_t, std::size_t> last_row;
            for (std::size_t r = 0; r < panel.rows().size(); ++r)
                last_row[panel.rows()[r].loan_id] = r;
            for (const auto& [loan, row] : last_row) {
                const LifetimePdCurve curve =
                    bellini_lifetime_pd(std::clamp(mu_account[row], 1e-9, 1.0 - 1e-9),
                                        mu_forecast, macro_model.anchor);
                clipped += curve.clipped;
                for (std::size_t t = 0; t < curve.lifetime_pd.size(); ++t)
                    writer.row({std::to_string(loan), std::to_string(t + 1),
                                csv::format_double(curve.shifted_hazard[t]),
                                csv::format_double(curve.survival[t]),
                                csv::format_double(curve.lifetime_pd[t])});
            }
        });
    } else {
        const LifetimePdCurve curve =
            bellini_lifetime_pd(args.pd, mu_forecast, macro_model.anchor);
        clipped = curve.clipped;
        atomic_write(args.out_path, [&](std::ostream& out) {
            csv::Writer writer(out);
            writer.row({"horizon", "mu_hat", "shifted_hazard", "survival", "lifetime_pd"});
            for (std::size_t t = 0; t < curve.lifetime_pd.size(); ++t)
                writer.row({std::to_string(t + 1), csv::format_double(mu_forecast[t]),
                            csv::format_double(curve.shifted_hazard[t]),
                            csv::format_double(curve.survival[t]),
                            csv::format_double(curve.lifetime_pd[t])});
        });
    }

    json macro_json;
    macro_json["link"] = args.link;
    macro_json["covariates"] = macro_model.covariates;
    macro_json["coefficients"] = macro_model.coefficients;
    macro_json["anchor"] = macro_model.anchor;
    macro_json["out_of_range_fits"] = macro_model.out_of_range;
    macro_json["clipped_shifts"] = clipped;
    const std::string macro_path =
        args.out_macro.empty() ? sibling_path(args.out_path, "_macro.json") : args.out_macro;
    atomic_write(macro_path, [&](std::ostream& out) { out << macro_json.dump(2) << '\n'; });

    std::ostringstream config;
    config << "bellini pd=" << args.pd << " link=" << args.link << " horizon=" << args.horizon
           << " account_level=" << args.account_level;
    Manifest manifest("baseline bellini", config.str());
    manifest.input(args.in_path);
    if (!args.forecast_path.empty()) manifest.input(args.forecast_path);
    manifest.output(args.out_path);
    manifest.output(macro_path);
    manifest.write(args.manifest_path.empty() ? args.out_path + ".manifest.json"
                                              : args.manifest_path);
    return 0;
}

struct BreedArgs {
    std::string table_path;
    std::string in_path;
    std::string segment;
    int reference_months = 3;
    std::string out_path;
    std::string out_rates;
    std::string out_table;
    std::string manifest_path;
};

int run_breed(const BreedArgs& args) {
    if (args.table_path.empty() == args.in_path.empty())
        throw ValidationError("baseline breed needs exactly one of --defaults-table or --in");

    std::map<std::string, DefaultsTable> tables;
    if (!args.table_path.empty()) {
        if (!args.segment.empty())
            throw ValidationError("--segment requires a panel input (--in)");
        tables["all"] = DefaultsTable::from_csv(args.table_path);
    } else {
        const SpellPanel panel = load_panel(args.in_path);
        if (args.segment.empty())
            tables["all"] = defaults_table_from_panel(panel);
        else
            tables = defaults_table_by_segment(panel, args.segment);
    }

    atomic_write(args.out_path, [&](std::ostream& out) {
        csv::Writer writer(out);
        writer.row({"segment", "horizon", "empirical_pd"});
        for (const auto& [segment, table] : tables) {
            const auto ts = breed_term_structure(table, args.reference_months);
            for (const auto& [horizon, pd] : ts)
                writer.row({segment, std::to_string(horizon), csv::format_double(pd)});
        }
    });

    if (!args.out_rates.empty()) {
        atomic_write(args.out_rates, [&](std::ostream& out) {
            csv::Writer writer(out);
            writer.row({"segment", "cohort", "lifetime_point", "empirical_rate"});
            for (const auto& [segment, table] : tables)
                for (const auto& [key, rate] : empirical_cohort_rate(table))
                    writer.row({segment, table.cohorts[key.first], std::to_string(key.second),
                                csv::format_double(rate)});
        });
    }
    if (!args.out_table.empty()) {
        if (tables.size() != 1)
            throw ValidationError("--out-table supports a single (unsegmented) table");
        atomic_write(args.out_table,
                     [&](std::ostream& out) { tables.begin()->second.write_csv(out); });
    }

    std::ostringstream config;
    config << "breed r=" << args.reference_months << " segment=" << args.segment;
    Manifest manifest("baseline breed", config.str());
    if (!args.table_path.empty()) manifest.input(args.table_path);
    if (!args.in_path.empty()) manifest.input(args.in_path);
    manifest.output(args.out_path);
    if (!args.out_rates.empty()) manifest.output(args.out_rates);
    if (!args.out_table.empty()) manifest.output(args.out_table);
    manifest.write(args.manifest_path.empty() ? args.out_path + ".manifest.json"
                                              : args.manifest_path);
    return 0;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Term-structures of lifetime default risk from loan-level panels"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* simulate_cmd =
        app.add_subcommand("simulate", "Generate a synthetic loan panel with known hazards");
    simulate_cmd->add_option("--config", sim.config_path, "Generator config JSON")->required();
    simulate_cmd->add_option("--out", sim.out_panel, "Output panel CSV")->required();
    simulate_cmd->add_option("--truth", sim.out_truth, "Ground-truth hazard CSV");
    simulate_cmd->add_option("--echo-config", sim.out_echo, "Config echo JSON");
    simulate_cmd->add_option("--manifest", sim.manifest_path, "Run manifest JSON");
    simulate_cmd->add_option("--threads", sim.threads,
                             "Worker threads (falls back to PD_TERM_THREADS)");

    SplitArgs split;
    CLI::App* split_cmd =
        app.add_subcommand("split", "Clustered train/validation split with an AD report");
    split_cmd->add_option("--in", split.in_path, "Input panel CSV")->required();
    split_cmd->add_option("--fraction", split.fraction, "Training fraction (default 0.7)");
    split_cmd->add_option("--seed", split.seed, "Split seed (default 1)");
    split_cmd->add_option("--out-train", split.out_train, "Training panel CSV")->required();
    split_cmd->add_option("--out-valid", split.out_valid, "Validation panel CSV")->required();
    split_cmd->add_option("--report", split.report_path, "AD report JSON");
    split_cmd->add_option("--manifest", split.manifest_path, "Run manifest JSON");

    KmArgs km;
    CLI::App* km_cmd = app.add_subcommand("km", "Life table and empirical term-structure");
    km_cmd->add_option("--in", km.in_path, "Input panel CSV")->required();
    km_cmd->add_option("--out", km.out_path, "Life-table CSV")->required();
    km_cmd->add_option("--age-cap", km.age_cap,
                       "Maximum spell age (default: cap where <0.5% remain at risk)");
    km_cmd->add_option("--level", km.level, "Confidence level (default 0.95)");
    km_cmd->add_option("--manifest", km.manifest_path, "Run manifest JSON");

    FitArgs fit_args;
    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit the discrete-time hazard model");
    fit_cmd->add_option("--in", fit_args.in_path, "Training panel CSV")->required();
    fit_cmd->add_option("--spec", fit_args.spec_path,
                        "Model spec JSON (default: standard bins, spell interaction)");
    fit_cmd->add_option("--out-model", fit_args.out_model, "Fitted model JSON")->required();
    fit_cmd->add_option("--out-coef", fit_args.out_coef, "Coefficient CSV");
    fit_cmd->add_option("--report", fit_args.report_path, "Fit report JSON");
    fit_cmd->add_option("--tol", fit_args.tol, "Coefficient tolerance (default 1e-8)");
    fit_cmd->add_option("--max-iter", fit_args.max_iter, "Newton iteration cap (default 50)");
    fit_cmd->add_option("--threads", fit_args.threads,
                        "Worker threads (falls back to PD_TERM_THREADS)");
    fit_cmd->add_flag("--allow-nonconverged", fit_args.allow_nonconverged,
                      "Keep a non-converged fit instead of failing");
    fit_cmd->add_option("--manifest", fit_args.manifest_path, "Run manifest JSON");

    PredictArgs predict;
    CLI::App* predict_cmd =
        app.add_subcommand("predict", "Per-row hazards under a fitted model");
    predict_cmd->add_option("--model", predict.model_path, "Fitted model JSON")->required();
    predict_cmd->add_option("--in", predict.in_path, "Panel CSV")->required();
    predict_cmd->add_option("--out", predict.out_path, "Per-row hazard CSV")->required();
    predict_cmd->add_option("--manifest", predict.manifest_path, "Run manifest JSON");

    DiagnoseArgs diagnose;
    CLI::App* diagnose_cmd = app.add_subcommand(
        "diagnose", "tROC/tAUC, tBS/IBS, term-structure and 12-month rate comparisons");
    diagnose_cmd->add_option("--model", diagnose.model_path, "Fitted model JSON")->required();
    diagnose_cmd->add_option("--in", diagnose.in_path, "Evaluation panel CSV")->required();
    diagnose_cmd->add_option("--pred", diagnose.pred_path,
                             "Optional per-row hazard CSV used as the marker values");
    diagnose_cmd->add_option("--out-dir", diagnose.out_dir, "Output directory")->required();
    diagnose_cmd->add_option("--horizons", diagnose.horizons,
                             "tROC horizons in months (default 3,12,24,36)")
        ->delimiter(',');
    diagnose_cmd->add_option("--bandwidth", diagnose.bandwidth,
                             "Neighbourhood share of markers (default 0.05)");
    diagnose_cmd->add_option("--tstar", diagnose.t_star,
                             "Brier-score horizon cap (default min(120, max age))");
    diagnose_cmd->add_option("--age-cap", diagnose.age_cap, "Term-structure age cap");
    diagnose_cmd->add_option("--grid", diagnose.grid, "Threshold grid points (default 512)");
    diagnose_cmd->add_option("--manifest", diagnose.manifest_path, "Run manifest JSON");

    CLI::App* baseline_cmd = app.add_subcommand("baseline", "Reference approaches");
    baseline_cmd->require_subcommand(1);

    BelliniArgs bellini;
    CLI::App* bellini_cmd = baseline_cmd->add_subcommand(
        "bellini", "Macro-shifted PD chaining on a portfolio default-rate regression");
    bellini_cmd->add_option("--in", bellini.in_path, "Input panel CSV")->required();
    bellini_cmd->add_option("--pd", bellini.pd, "Anchor PD to shift and chain");
    bellini_cmd->add_option("--link", bellini.link, "Link function")
        ->check(CLI::IsMember({"identity", "logit"}));
    bellini_cmd->add_option("--macro", bellini.macro, "Macro covariate names")
        ->delimiter(',')
        ->required();
    bellini_cmd->add_option("--horizon", bellini.horizon, "Flat-forecast months (default 12)");
    bellini_cmd->add_option("--forecast", bellini.forecast_path,
                            "CSV of future macro values (one column per covariate)");
    bellini_cmd->add_option("--out", bellini.out_path, "Term-structure CSV")->required();
    bellini_cmd->add_option("--out-macro", bellini.out_macro, "Macro model JSON");
    bellini_cmd->add_flag("--account-level", bellini.account_level,
                          "Account-level variant (per-loan logistic PD)");
    bellini_cmd->add_option("--manifest", bellini.manifest_path, "Run manifest JSON");

    BreedArgs breed;
    CLI::App* breed_cmd = baseline_cmd->add_subcommand(
        "breed", "Empirical PD term-structure from a cohort defaults table");
    breed_cmd->add_option("--defaults-table", breed.table_path, "Defaults table CSV");
    breed_cmd->add_option("--in", breed.in_path, "Panel CSV to convert into a defaults table");
    breed_cmd->add_option("--segment", breed.segment, "Categorical covariate for segmentation");
    breed_cmd->add_option("--r,--reference", breed.reference_months,
                          "Reference period in months (default 3)");
    breed_cmd->add_option("--out", breed.out_path, "Term-structure CSV")->required();
    breed_cmd->add_option("--out-cohort-rates", breed.out_rates, "Cohort rate CSV");
    breed_cmd->add_option("--out-table", breed.out_table, "Echo the defaults table CSV");
    breed_cmd->add_option("--manifest", breed.manifest_path, "Run manifest JSON");

    try {
        app.parse(argc, argv);
        if (*simulate_cmd) return run_simulate(sim);
        if (*split_cmd) return run_split(split);
        if (*km_cmd) return run_km(km);
        if (*fit_cmd) return run_fit(fit_args);
        if (*predict_cmd) return run_predict(predict);
        if (*diagnose_cmd) {
            if (diagnose.horizons.empty()) diagnose.horizons = {3, 12, 24, 36};
            return run_diagnose(diagnose);
        }
        if (*baseline_cmd) {
            if (*bellini_cmd) return run_bellini(bellini);
            if (*breed_cmd) return run_breed(breed);
        }
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace pdterm::cli
