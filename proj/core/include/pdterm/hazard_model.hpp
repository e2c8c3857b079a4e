#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdterm/panel.hpp"

namespace pdterm {

// Half-open age bins partitioning [1, inf); the final bin is open-ended.
// Labels follow the "01.[1,3]", "02.(3,6]", ..., "NN.x+" convention.
class TimeBins {
  public:
    TimeBins() = default;
    explicit TimeBins(std::vector<int> upper_edges);  // ascending, all >= 1

    // The production binning: (0,3], (3,6], ..., (168,192], open tail.
    static TimeBins standard();
    // One bin per age 1..max_age with an open tail bin after max_age.
    static TimeBins singleton(int max_age);

    int bin_of(int age) const noexcept;
    const std::string& label(int bin) const { return labels_[bin]; }
    int count() const noexcept { return static_cast<int>(upper_edges_.size()) + 1; }
    const std::vector<int>& upper_edges() const noexcept { return upper_edges_; }

  private:
    std::vector<int> upper_edges_;
    std::vector<std::string> labels_;
};

constexpr int kSpellBinCount = 4;  // "1", "2", "3", "4+"
int spell_bin_of(int spell_num) noexcept;
std::string spell_bin_label(int bin);

struct DummyCovariate {
    std::string name;
    std::string reference;
};

// Model design: baseline hazard via time bins, optionally stratified by the
// spell-number bin (interaction), plus covariates. Never an intercept.
struct ModelSpec {
    TimeBins time_bins = TimeBins::standard();
    bool use_spell_bins = true;
    bool interact_time_spell = true;  // time x spell strata; otherwise additive dummies
    std::vector<std::string> numeric_covariates;
    std::vector<DummyCovariate> dummy_covariates;
    double event_weight = 10.0;

    static ModelSpec from_json_string(const std::string& text);
    std::string to_json_string() const;
};

// Row-major design with the single one-hot stratum indicator kept implicit:
// a row is (stratum index, dense extras). dense_row() materializes the full
// feature vector when a test or caller needs it.
class DesignMatrix {
  public:
    std::size_t rows() const noexcept { return stratum_.size(); }
    int width() const noexcept { return n_strata_ + n_extras_; }
    int strata() const noexcept { return n_strata_; }
    int extras() const noexcept { return n_extras_; }

    int stratum(std::size_t row) const { return stratum_[row]; }
    bool response(std::size_t row) const { return response_[row]; }
    double weight(std::size_t row) const { return weight_[row]; }
    const double* extras_row(std::size_t row) const {
        return extras_.data() + row * n_extras_;
    }
    std::vector<double> dense_row(std::size_t row) const;

    const std::vector<std::string>& stratum_labels() const noexcept { return stratum_labels_; }
    const std::vector<std::string>& extra_labels() const noexcept { return extra_labels_; }
    const std::vector<std::string>& dropped_strata() const noexcept { return dropped_; }
    const std::string& column_label(int j) const {
        return j < n_strata_ ? stratum_labels_[j] : extra_labels_[j - n_strata_];
    }
    const ModelSpec& spec() const noexcept { return spec_; }
    const std::vector<std::vector<std::string>>& dummy_levels() const noexcept {
        return dummy_levels_;
    }

  private:
    friend DesignMatrix build_design(const SpellPanel&, const ModelSpec&);

    ModelSpec spec_;
    int n_strata_ = 0;
    int n_extras_ = 0;
    std::vector<int> stratum_;
    std::vector<std::uint8_t> response_;
    std::vector<double> weight_;
    std::vector<double> extras_;
    std::vector<std::string> stratum_labels_;
    std::vector<std::string> extra_labels_;
    std::vector<std::vector<std::string>> dummy_levels_;
    std::vector<std::string> dropped_;
};

// One design row per panel row; events get weight `spec.event_weight`,
// everything else weight 1.
DesignMatrix build_design(const SpellPanel& panel, const ModelSpec& spec);

struct FitOptions {
    double tol = 1e-8;
    int max_iter = 50;
    int threads = 1;
};

struct FittedDthModel {
    ModelSpec spec;
    std::vector<std::string> stratum_labels;
    std::vector<std::string> extra_labels;
    std::vector<double> coefficients;  // strata first, then extras
    std::vector<double> std_errors;
    // Dummy level tables captured at design time so prediction rejects
    // levels never seen in training.
    std::vector<std::vector<std::string>> dummy_levels;
    bool converged = false;
    bool ridged = false;  // separation fallback engaged
    int iterations = 0;
    double deviance = 0.0;

    double coefficient(const std::string& label) const;

    std::string to_json_string() const;
    static FittedDthModel from_json_string(const std::string& text);
    static FittedDthModel from_json_file(const std::string& path);
};

// Maximizes the weighted Bernoulli log-likelihood by Newton iterations with
// step-halving; standard errors come from the final information matrix.
// Accumulations reduce in fixed block order, so results are bit-identical
// across thread counts.
FittedDthModel fit(const DesignMatrix& design, const FitOptions& options = {});

// Weighted deviance -2 sum w [y log h + (1-y) log(1-h)] at the given
// coefficients, plus the analytic gradient of the log-likelihood. Exposed for
// verification against finite differences.
double deviance_at(const DesignMatrix& design, const std::vector<double>& coef);
std::vector<double> loglik_gradient(const DesignMatrix& design, const std::vector<double>& coef);

// Per-row hazards for panel rows under a fitted model. Throws on covariate
// levels or strata unseen in training.
std::vector<double> predict_hazard(const FittedDthModel& model, const SpellPanel& panel);

struct TermStructure {
    std::vector<int> age;
    std::vector<double> hazard;    // mean hazard among spells at risk
    std::vector<double> survival;  // chained
    std::vector<double> density;   // S(prev) * h
};

struct SpellCurve {
    std::size_t spell_index = 0;
    std::vector<double> hazard;    // by age offset from entry+1
    std::vector<double> survival;
    std::vector<double> density;
};

struct TermStructurePrediction {
    TermStructure portfolio;
    std::vector<SpellCurve> spells;  // filled only when requested
};

TermStructurePrediction predict_term_structure(const FittedDthModel& model,
                                               const SpellPanel& panel, int age_cap,
                                               bool keep_spell_curves = false);

// Per-row probability of default within the next 12 months given survival to
// the row's age, rolled over the spell's own observed rows:
// 1 - prod (1 - h(q|x_q)) for q in (age, min(age+12, stop)]. The window
// truncates where observation truly ends, mirroring the worst-ever empirical
// rate it is compared against. Used for the 12-month actual-vs-expected
// calibration series.
std::vector<double> rolling_12m_default_probability(const FittedDthModel& model,
                                                    const SpellPanel& panel);

// Per-spell survival predictions S(t*) for each horizon (ascending), chaining
// observed-row hazards and freezing the final row's covariates past the
// spell's end. Result is indexed [spell][horizon position].
std::vector<std::vector<double>> survival_at_horizons(const FittedDthModel& model,
                                                      const SpellPanel& panel,
                                                      const std::vector<int>& horizons);

std::vector<double> survival_at_horizon(const FittedDthModel& model, const SpellPanel& panel,
                                        int horizon);

}  // namespace pdterm
