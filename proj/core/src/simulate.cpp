#include "pdterm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "pdterm/csv.hpp"
#include "pdterm/errors.hpp"
#include "pdterm/parallel.hpp"
#include "pdterm/rng.hpp"

namespace pdterm {

namespace {

using nlohmann::json;

double logit(double p) { return std::log(p / (1.0 - p)); }
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void SimConfig::validate() const {
    if (n_loans == 0) throw InvalidConfig("n_loans must be positive");
    if (horizon < 24) throw InvalidConfig("horizon must be at least 24 months");
    if (baseline_hazard.empty()) throw InvalidConfig("baseline_hazard must not be empty");
    int prev_edge = 0;
    for (std::size_t i = 0; i < baseline_hazard.size(); ++i) {
        const HazardBin& bin = baseline_hazard[i];
        if (bin.hazard <= 0.0 || bin.hazard >= 1.0)
            throw InvalidConfig("baseline hazards must lie strictly between 0 and 1");
        const bool open = bin.last_age <= 0;
        if (open && i + 1 != baseline_hazard.size())
            throw InvalidConfig("only the final baseline bin may be open-ended");
        if (!open && bin.last_age <= prev_edge)
            throw InvalidConfig("baseline bin edges must be strictly increasing");
        if (!open) prev_edge = bin.last_age;
    }
    if (baseline_hazard.back().last_age > 0)
        throw InvalidConfig("the final baseline bin must be open-ended");
    auto probability = [](double p, const char* what) {
        if (p < 0.0 || p >= 1.0)
            throw InvalidConfig(std::string(what) + " must lie in [0,1)");
    };
    probability(settlement_rate, "settlement_rate");
    probability(writeoff_rate, "writeoff_rate");
    probability(cure_probability, "cure_probability");
    probability(delinquency.p01, "delinquency p01");
    probability(delinquency.p10, "delinquency p10");
    for (const Ar1Spec& s : macro_series) {
        if (s.name.empty()) throw InvalidConfig("macro series needs a name");
        if (s.persistence <= -1.0 || s.persistence >= 1.0)
            throw InvalidConfig("macro persistence must lie in (-1,1)");
        if (s.volatility < 0.0) throw InvalidConfig("macro volatility must be >= 0");
    }
    for (const auto& [name, beta] : true_coefficients) {
        (void)beta;
        if (name == "delinq") continue;
        const bool known = std::any_of(macro_series.begin(), macro_series.end(),
                                       [&](const Ar1Spec& s) { return s.name == name; });
        if (!known)
            throw InvalidConfig("true coefficient references unknown covariate: " + name);
    }
}

double SimConfig::baseline_at(int age) const {
    for (const HazardBin& bin : baseline_hazard)
        if (bin.last_age <= 0 || age <= bin.last_age) return bin.hazard;
    return baseline_hazard.back().hazard;
}

SimConfig SimConfig::from_json_string(const std::string& text) {
    json j = json::parse(text);
    SimConfig cfg;
    const std::vector<std::string> known = {
        "n_loans",       "horizon",        "seed",        "baseline_hazard",
        "true_coefficients", "settlement_rate", "writeoff_rate", "cure_probability",
        "macro_series",  "delinquency",    "start_month", "origination_spread"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw InvalidConfig("unknown key in simulation config: " + it.key());

    cfg.n_loans = j.at("n_loans").get<std::size_t>();
    cfg.horizon = j.at("horizon").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    for (const json& bin : j.at("baseline_hazard")) {
        HazardBin hb;
        hb.last_age = bin.contains("upto") && !bin["upto"].is_null() ? bin["upto"].get<int>() : 0;
        hb.hazard = bin.at("hazard").get<double>();
        cfg.baseline_hazard.push_back(hb);
    }
    if (j.contains("true_coefficients"))
        for (auto it = j["true_coefficients"].begin(); it != j["true_coefficients"].end(); ++it)
            cfg.true_coefficients[it.key()] = it.value().get<double>();
    cfg.settlement_rate = j.value("settlement_rate", 0.0);
    cfg.writeoff_rate = j.value("writeoff_rate", 0.0);
    cfg.cure_probability = j.value("cure_probability", 0.0);
    if (j.contains("macro_series"))
        for (const json& m : j["macro_series"])
            cfg.macro_series.push_back({m.at("name").get<std::string>(),
                                        m.value("mean", 0.0), m.value("persistence", 0.0),
                                        m.value("volatility", 0.0)});
    if (j.contains("delinquency")) {
        cfg.delinquency.p01 = j["delinquency"].value("p01", cfg.delinquency.p01);
        cfg.delinquency.p10 = j["delinquency"].value("p10", cfg.delinquency.p10);
    }
    if (j.contains("start_month"))
        cfg.start_month = YearMonth::parse(j["start_month"].get<std::string>());
    cfg.origination_spread = j.value("origination_spread", -1);
    cfg.validate();
    return cfg;
}

SimConfig SimConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

std::string SimConfig::to_json_string() const {
    json j;
    j["n_loans"] = n_loans;
    j["horizon"] = horizon;
    j["seed"] = seed;
    j["baseline_hazard"] = json::array();
    for (const HazardBin& bin : baseline_hazard) {
        json b;
        if (bin.last_age > 0)
            b["upto"] = bin.last_age;
        else
            b["upto"] = nullptr;
        b["hazard"] = bin.hazard;
        j["baseline_hazard"].push_back(b);
    }
    j["true_coefficients"] = json::object();
    for (const auto& [name, beta] : true_coefficients) j["true_coefficients"][name] = beta;
    j["settlement_rate"] = settlement_rate;
    j["writeoff_rate"] = writeoff_rate;
    j["cure_probability"] = cure_probability;
    j["macro_series"] = json::array();
    for (const Ar1Spec& m : macro_series)
        j["macro_series"].push_back({{"name", m.name},
                                     {"mean", m.mean},
                                     {"persistence", m.persistence},
                                     {"volatility", m.volatility}});
    j["delinquency"] = {{"p01", delinquency.p01}, {"p10", delinquency.p10}};
    j["start_month"] = start_month.str();
    j["origination_spread"] = origination_spread;
    return j.dump(2);
}

namespace {

struct LoanRows {
    std::vector<PanelRow> rows;
    std::vector<double> numeric;  // rows x (macro slots + delinq)
    std::vector<double> hazard;
};

// One loan's full history. Draw order within a performing month is fixed:
// delinquency update, default, settlement, write-off.
LoanRows simulate_loan(const SimConfig& cfg, std::int64_t loan_id,
                       const std::vector<std::vector<double>>& macro, int spread) {
    LoanRows out;
    std::mt19937_64 rng = make_stream(cfg.seed, static_cast<std::uint64_t>(loan_id));
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const int nm = static_cast<int>(cfg.macro_series.size());
    std::vector<double> beta_macro(nm, 0.0);
    for (int k = 0; k < nm; ++k) {
        auto it = cfg.true_coefficients.find(cfg.macro_series[k].name);
        if (it != cfg.true_coefficients.end()) beta_macro[k] = it->second;
    }
    double beta_delinq = 0.0;
    if (auto it = cfg.true_coefficients.find("delinq"); it != cfg.true_coefficients.end())
        beta_delinq = it->second;

    const int origin = spread > 0 ? static_cast<int>(unif(rng) * (spread + 1)) : 0;

    int delinq_state = 0;
    int spell_num = 1;
    int spell_period = 0;
    bool in_default = false;
    std::vector<PanelRow> spell_rows;
    std::vector<double> spell_numeric;
    std::vector<double> spell_hazard;

    auto flush_spell = [&](ResolutionType resolution) {
        if (spell_rows.empty()) return;
        for (PanelRow& row : spell_rows) {
            row.resolution = resolution;
            row.stop_time = spell_rows.back().spell_period;
            row.spell_age = row.stop_time;  // entry_time is 0 for simulated spells
            row.event = false;
        }
        if (resolution == ResolutionType::kDefault) spell_rows.back().event = true;
        out.rows.insert(out.rows.end(), spell_rows.begin(), spell_rows.end());
        out.numeric.insert(out.numeric.end(), spell_numeric.begin(), spell_numeric.end());
        out.hazard.insert(out.hazard.end(), spell_hazard.begin(), spell_hazard.end());
        spell_rows.clear();
        spell_numeric.clear();
        spell_hazard.clear();
        ++spell_num;
        spell_period = 0;
    };

    for (int m = origin; m < cfg.horizon; ++m) {
        if (in_default) {
            if (cfg.cure_probability > 0.0 && unif(rng) < cfg.cure_probability)
                in_default = false;  // performing again from next month
            continue;
        }
        ++spell_period;

        const int lagged_delinq = delinq_state;
        if (delinq_state == 0) {
            if (unif(rng) < cfg.delinquency.p01) delinq_state = 1;
        } else {
            if (unif(rng) < cfg.delinquency.p10) delinq_state = 0;
        }

        double eta = logit(cfg.baseline_at(spell_period));
        for (int k = 0; k < nm; ++k) eta += beta_macro[k] * macro[k][m];
        eta += beta_delinq * lagged_delinq;
        const double hazard = logistic(eta);

        PanelRow row;
        row.loan_id = loan_id;
        row.loan_period = m - origin + 1;
        row.spell_num = spell_num;
        row.spell_period = spell_period;
        row.entry_time = 0;
        row.date = cfg.start_month + m;
        spell_rows.push_back(row);
        for (int k = 0; k < nm; ++k) spell_numeric.push_back(macro[k][m]);
        spell_numeric.push_back(static_cast<double>(lagged_delinq));
        spell_hazard.push_back(hazard);

        if (unif(rng) < hazard) {
            flush_spell(ResolutionType::kDefault);
            in_default = true;
            continue;
        }
        if (cfg.settlement_rate > 0.0 && unif(rng) < cfg.settlement_rate) {
            flush_spell(ResolutionType::kSettled);
            return out;  // settled loans leave the book
        }
        if (cfg.writeoff_rate > 0.0 && unif(rng) < cfg.writeoff_rate) {
            flush_spell(ResolutionType::kWriteOffOther);
            return out;
        }
    }
    flush_spell(ResolutionType::kCensored);  // window end
    return out;
}

}  // namespace

SimResult simulate(const SimConfig& config, int threads) {
    config.validate();
    const int spread =
        config.origination_spread >= 0 ? config.origination_spread : config.horizon / 3;
    if (spread >= config.horizon)
        throw InvalidConfig("origination_spread must be smaller than the horizon");

    // Shared macro paths, one AR(1) per series, sampled once up front.
    std::vector<std::vector<double>> macro(config.macro_series.size());
    {
        std::mt19937_64 rng = make_stream(config.seed, 0x6d6163726fULL);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t k = 0; k < macro.size(); ++k) {
            const Ar1Spec& s = config.macro_series[k];
            macro[k].resize(config.horizon);
            // Stationary start when the process is stationary.
            const double denom = 1.0 - s.persistence * s.persistence;
            double z = s.mean + (denom > 0.0 ? s.volatility / std::sqrt(denom) : s.volatility) *
                                    normal(rng);
            for (int m = 0; m < config.horizon; ++m) {
                macro[k][m] = z;
                z = s.mean + s.persistence * (z - s.mean) + s.volatility * normal(rng);
            }
        }
    }

    std::vector<LoanRows> per_loan(config.n_loans);
    parallel_for(config.n_loans, threads, [&](std::size_t i) {
        per_loan[i] = simulate_loan(config, static_cast<std::int64_t>(i + 1), macro, spread);
    });

    CovariateSchema schema;
    for (const Ar1Spec& s : config.macro_series)
        schema.push_back({s.name, CovariateKind::kNumeric});
    schema.push_back({"delinq", CovariateKind::kNumeric});

    PanelBuilder builder(schema);
    SimResult result;
    const std::size_t width = macro.size() + 1;
    for (const LoanRows& loan : per_loan) {
        for (std::size_t r = 0; r < loan.rows.size(); ++r)
            builder.add_row(loan.rows[r], std::span(loan.numeric).subspan(r * width, width), {});
        result.truth.hazard.insert(result.truth.hazard.end(), loan.hazard.begin(),
                                   loan.hazard.end());
    }
    result.panel = builder.build();
    result.truth.coefficients = config.true_coefficients;
    return result;
}

void write_ground_truth(const SpellPanel& panel, const GroundTruth& truth, std::ostream& out) {
    csv::Writer writer(out);
    writer.row({"LoanID", "SpellNum", "SpellPeriod", "TrueHazard"});
    const auto& rows = panel.rows();
    for (std::size_t r = 0; r < rows.size(); ++r)
        writer.row({std::to_string(rows[r].loan_id), std::to_string(rows[r].spell_num),
                    std::to_string(rows[r].spell_period), csv::format_double(truth.hazard[r])});
}

}  // namespace pdterm
