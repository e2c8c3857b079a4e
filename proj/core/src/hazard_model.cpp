#include "pdterm/hazard_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>
#include <json.hpp>

#include "pdterm/errors.hpp"
#include "pdterm/parallel.hpp"

namespace pdterm {

namespace {

using nlohmann::json;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double clamped_logit(double p) {
    const double eps = 1e-6;
    p = std::clamp(p, eps, 1.0 - eps);
    return std::log(p / (1.0 - p));
}

std::string two_digits(int k) {
    std::string s = std::to_string(k);
    return s.size() < 2 ? "0" + s : s;
}

}  // namespace

TimeBins::TimeBins(std::vector<int> upper_edges) : upper_edges_(std::move(upper_edges)) {
    int prev = 0;
    for (int edge : upper_edges_) {
        if (edge <= prev) throw InvalidConfig("time-bin edges must be strictly increasing and >= 1");
        prev = edge;
    }
    labels_.reserve(upper_edges_.size() + 1);
    int low = 0;
    for (std::size_t k = 0; k < upper_edges_.size(); ++k) {
        std::ostringstream label;
        label << two_digits(static_cast<int>(k) + 1) << '.';
        if (k == 0)
            label << "[1," << upper_edges_[k] << ']';
        else
            label << '(' << low << ',' << upper_edges_[k] << ']';
        labels_.push_back(label.str());
        low = upper_edges_[k];
    }
    labels_.push_back(two_digits(static_cast<int>(upper_edges_.size()) + 1) + "." +
                      std::to_string(low + 1) + "+");
}

TimeBins TimeBins::standard() {
    // 19 bins; the published scheme lists (84,96] twice, which would create a
    // duplicate indicator column, so the repeat is collapsed.
    return TimeBins({3, 6, 9, 12, 18, 24, 30, 36, 48, 60, 72, 84, 96, 108, 120, 144, 168, 192});
}

TimeBins TimeBins::singleton(int max_age) {
    std::vector<int> edges(max_age);
    for (int a = 1; a <= max_age; ++a) edges[a - 1] = a;
    return TimeBins(std::move(edges));
}

int TimeBins::bin_of(int age) const noexcept {
    const auto it = std::lower_bound(upper_edges_.begin(), upper_edges_.end(), age);
    return static_cast<int>(it - upper_edges_.begin());
}

int spell_bin_of(int spell_num) noexcept { return std::min(spell_num, kSpellBinCount) - 1; }

std::string spell_bin_label(int bin) {
    static const char* names[kSpellBinCount] = {"1", "2", "3", "4+"};
    return names[bin];
}

ModelSpec ModelSpec::from_json_string(const std::string& text) {
    json j = json::parse(text);
    ModelSpec spec;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key != "time_bins" && key != "use_spell_bins" && key != "interaction" &&
            key != "covariates" && key != "event_weight")
            throw InvalidConfig("unknown key in model spec: " + key);
    }
    if (j.contains("time_bins")) {
        if (j["time_bins"].is_string()) {
            const auto name = j["time_bins"].get<std::string>();
            if (name != "standard") throw InvalidConfig("unknown time_bins preset: " + name);
        } else {
            spec.time_bins = TimeBins(j["time_bins"].get<std::vector<int>>());
        }
    }
    spec.use_spell_bins = j.value("use_spell_bins", true);
    spec.interact_time_spell = j.value("interaction", true);
    if (j.contains("covariates")) {
        for (const json& cov : j["covariates"]) {
            const auto name = cov.at("name").get<std::string>();
            const auto encoding = cov.value("encoding", std::string("numeric"));
            if (encoding == "numeric") {
                spec.numeric_covariates.push_back(name);
            } else if (encoding == "dummy") {
                spec.dummy_covariates.push_back({name, cov.at("reference").get<std::string>()});
            } else {
                throw InvalidConfig("unknown covariate encoding: " + encoding);
            }
        }
    }
    spec.event_weight = j.value("event_weight", 10.0);
    if (spec.event_weight <= 0.0) throw InvalidConfig("event_weight must be positive");
    return spec;
}

std::string ModelSpec::to_json_string() const {
    json j;
    j["time_bins"] = time_bins.upper_edges();
    j["use_spell_bins"] = use_spell_bins;
    j["interaction"] = interact_time_spell;
    j["covariates"] = json::array();
    for (const std::string& name : numeric_covariates)
        j["covariates"].push_back({{"name", name}, {"encoding", "numeric"}});
    for (const DummyCovariate& cov : dummy_covariates)
        j["covariates"].push_back(
            {{"name", cov.name}, {"encoding", "dummy"}, {"reference", cov.reference}});
    j["event_weight"] = event_weight;
    return j.dump(2);
}

std::vector<double> DesignMatrix::dense_row(std::size_t row) const {
    std::vector<double> out(width(), 0.0);
    out[stratum_[row]] = 1.0;
    for (int j = 0; j < n_extras_; ++j) out[n_strata_ + j] = extras_[row * n_extras_ + j];
    return out;
}

DesignMatrix build_design(const SpellPanel& panel, const ModelSpec& spec) {
    if (panel.empty()) throw EmptyPanel();
    DesignMatrix design;
    design.spec_ = spec;

    const auto& rows = panel.rows();
    const std::size_t n = rows.size();
    const int n_time = spec.time_bins.count();

    // Strata: observed (time bin x spell bin) cells under interaction,
    // otherwise observed time bins alone.
    const bool interact = spec.use_spell_bins && spec.interact_time_spell;
    const int cell_count = interact ? n_time * kSpellBinCount : n_time;
    std::vector<std::size_t> cell_rows(cell_count, 0);
    auto cell_of = [&](const PanelRow& row) {
        const int tb = spec.time_bins.bin_of(row.spell_period);
        return interact ? tb * kSpellBinCount + spell_bin_of(row.spell_num) : tb;
    };
    for (const PanelRow& row : rows) ++cell_rows[cell_of(row)];

    auto cell_label = [&](int cell) {
        if (!interact) return spec.time_bins.label(cell);
        return spec.time_bins.label(cell / kSpellBinCount) + ":" +
               spell_bin_label(cell % kSpellBinCount);
    };

    std::vector<int> stratum_of_cell(cell_count, -1);
    {
        // Report empty cells of the observed Cartesian product: cells whose
        // time bin and spell bin both occur somewhere, but never together.
        std::vector<bool> time_seen(n_time, false);
        std::vector<bool> spell_seen(kSpellBinCount, false);
        for (int cell = 0; cell < cell_count; ++cell) {
            if (cell_rows[cell] == 0) continue;
            time_seen[interact ? cell / kSpellBinCount : cell] = true;
            if (interact) spell_seen[cell % kSpellBinCount] = true;
        }
        for (int cell = 0; cell < cell_count; ++cell) {
            if (cell_rows[cell] > 0) {
                stratum_of_cell[cell] = design.n_strata_++;
                design.stratum_labels_.push_back(cell_label(cell));
            } else if (interact && time_seen[cell / kSpellBinCount] &&
                       spell_seen[cell % kSpellBinCount]) {
                design.dropped_.push_back(cell_label(cell));
            }
        }
    }

    // Extras: additive spell-bin dummies first (when not interacting), then
    // numeric covariates, then dummy-encoded categoricals.
    struct SpellDummy {
        int bin;
        int column;
    };
    std::vector<SpellDummy> spell_dummies;
    if (spec.use_spell_bins && !spec.interact_time_spell) {
        std::vector<std::size_t> bin_rows(kSpellBinCount, 0);
        for (const PanelRow& row : rows) ++bin_rows[spell_bin_of(row.spell_num)];
        int reference = -1;
        for (int b = 0; b < kSpellBinCount; ++b) {
            if (bin_rows[b] == 0) continue;
            if (reference < 0) {
                reference = b;  // first observed bin anchors the baseline
                continue;
            }
            spell_dummies.push_back({b, design.n_extras_++});
            design.extra_labels_.push_back("spell:" + spell_bin_label(b));
        }
    }

    std::vector<std::size_t> numeric_slots;
    for (const std::string& name : spec.numeric_covariates) {
        const auto slot = panel.numeric_slot(name);
        if (!slot) throw ValidationError("unknown numeric covariate: " + name);
        numeric_slots.push_back(*slot);
        design.extra_labels_.push_back(name);
        ++design.n_extras_;
    }

    struct DummyPlan {
        std::size_t slot;
        std::vector<int> column_of_level;  // -1 reference or dropped
    };
    std::vector<DummyPlan> dummy_plans;
    for (const DummyCovariate& cov : spec.dummy_covariates) {
        const auto slot = panel.categorical_slot(cov.name);
        if (!slot) throw ValidationError("unknown categorical covariate: " + cov.name);
        const auto& levels = panel.levels(*slot);
        const auto ref_it = std::find(levels.begin(), levels.end(), cov.reference);
        if (ref_it == levels.end())
            throw ValidationError("reference level '" + cov.reference +
                                  "' not present for covariate " + cov.name);
        std::vector<std::size_t> level_rows(levels.size(), 0);
        for (std::size_t r = 0; r < n; ++r) ++level_rows[panel.category(r, *slot)];

        DummyPlan plan;
        plan.slot = *slot;
        plan.column_of_level.assign(levels.size(), -1);
        std::vector<std::string> kept;
        for (std::size_t lv = 0; lv < levels.size(); ++lv) {
            if (levels[lv] == cov.reference) continue;
            if (level_rows[lv] == 0) {
                design.dropped_.push_back(cov.name + "=" + levels[lv]);
                continue;
            }
            plan.column_of_level[lv] = design.n_extras_++;
            design.extra_labels_.push_back(cov.name + "=" + levels[lv]);
            kept.push_back(levels[lv]);
        }
        dummy_plans.push_back(std::move(plan));
        design.dummy_levels_.push_back(std::move(kept));
    }

    design.stratum_.resize(n);
    design.response_.resize(n);
    design.weight_.resize(n);
    design.extras_.assign(n * design.n_extras_, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const PanelRow& row = rows[r];
        design.stratum_[r] = stratum_of_cell[cell_of(row)];
        design.response_[r] = row.event ? 1 : 0;
        design.weight_[r] = row.event ? spec.event_weight : 1.0;
        double* x = design.extras_.data() + r * design.n_extras_;
        for (const SpellDummy& d : spell_dummies)
            if (spell_bin_of(row.spell_num) == d.bin) x[d.column] = 1.0;
        std::size_t col = spell_dummies.size();
        for (std::size_t k = 0; k < numeric_slots.size(); ++k)
            x[col + k] = panel.numeric(r, numeric_slots[k]);
        for (const DummyPlan& plan : dummy_plans) {
            const int column = plan.column_of_level[panel.category(r, plan.slot)];
            if (column >= 0) x[column] = 1.0;
        }
    }
    return design;
}

namespace {

// Per-block partial sums reduced in block order, so the reduction is
// identical for every thread count.
constexpr std::size_t kBlockRows = 8192;

struct FitPass {
    double deviance = 0.0;
    Eigen::VectorXd grad;        // m + p
    Eigen::VectorXd info_diag;   // m (stratum block of the information)
    Eigen::MatrixXd info_cross;  // m x p
    Eigen::MatrixXd info_dense;  // p x p
};

double block_deviance(const DesignMatrix& design, const Eigen::VectorXd& coef,
                      std::size_t begin, std::size_t end) {
    const int m = design.strata();
    const int p = design.extras();
    double dev = 0.0;
    for (std::size_t r = begin; r < end; ++r) {
        double eta = coef[design.stratum(r)];
        const double* x = design.extras_row(r);
        for (int j = 0; j < p; ++j) eta += coef[m + j] * x[j];
        dev += 2.0 * design.weight(r) * softplus(design.response(r) ? -eta : eta);
    }
    return dev;
}

double deviance_pass(const DesignMatrix& design, const Eigen::VectorXd& coef, int threads) {
    const std::size_t blocks = (design.rows() + kBlockRows - 1) / kBlockRows;
    std::vector<double> partial(blocks, 0.0);
    parallel_for(blocks, threads, [&](std::size_t b) {
        const std::size_t begin = b * kBlockRows;
        const std::size_t end = std::min(design.rows(), begin + kBlockRows);
        partial[b] = block_deviance(design, coef, begin, end);
    });
    double dev = 0.0;
    for (double d : partial) dev += d;
    return dev;
}

FitPass full_pass(const DesignMatrix& design, const Eigen::VectorXd& coef, int threads) {
    const int m = design.strata();
    const int p = design.extras();
    const std::size_t blocks = (design.rows() + kBlockRows - 1) / kBlockRows;

    std::vector<FitPass> partial(blocks);
    parallel_for(blocks, threads, [&](std::size_t b) {
        FitPass& acc = partial[b];
        acc.grad = Eigen::VectorXd::Zero(m + p);
        acc.info_diag = Eigen::VectorXd::Zero(m);
        acc.info_cross = Eigen::MatrixXd::Zero(m, p);
        acc.info_dense = Eigen::MatrixXd::Zero(p, p);
        const std::size_t begin = b * kBlockRows;
        const std::size_t end = std::min(design.rows(), begin + kBlockRows);
        for (std::size_t r = begin; r < end; ++r) {
            const int s = design.stratum(r);
            const double w = design.weight(r);
            const bool y = design.response(r);
            const double* x = design.extras_row(r);
            double eta = coef[s];
            for (int j = 0; j < p; ++j) eta += coef[m + j] * x[j];
            const double mu = logistic(eta);
            const double resid = w * ((y ? 1.0 : 0.0) - mu);
            const double fisher = w * mu * (1.0 - mu);
            acc.deviance += 2.0 * w * softplus(y ? -eta : eta);
            acc.grad[s] += resid;
            acc.info_diag[s] += fisher;
            for (int j = 0; j < p; ++j) {
                acc.grad[m + j] += resid * x[j];
                acc.info_cross(s, j) += fisher * x[j];
                for (int k = j; k < p; ++k) acc.info_dense(j, k) += fisher * x[j] * x[k];
            }
        }
    });

    FitPass total;
    total.grad = Eigen::VectorXd::Zero(m + p);
    total.info_diag = Eigen::VectorXd::Zero(m);
    total.info_cross = Eigen::MatrixXd::Zero(m, p);
    total.info_dense = Eigen::MatrixXd::Zero(p, p);
    for (const FitPass& acc : partial) {
        total.deviance += acc.deviance;
        total.grad += acc.grad;
        total.info_diag += acc.info_diag;
        total.info_cross += acc.info_cross;
        total.info_dense += acc.info_dense;
    }
    return total;
}

Eigen::MatrixXd assemble_information(const FitPass& pass, int m, int p) {
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(m + p, m + p);
    info.topLeftCorner(m, m).diagonal() = pass.info_diag;
    info.topRightCorner(m, p) = pass.info_cross;
    info.bottomLeftCorner(p, m) = pass.info_cross.transpose();
    for (int j = 0; j < p; ++j)
        for (int k = j; k < p; ++k) {
            info(m + j, m + k) = pass.info_dense(j, k);
            info(m + k, m + j) = pass.info_dense(j, k);
        }
    return info;
}

}  // namespace

double deviance_at(const DesignMatrix& design, const std::vector<double>& coef) {
    Eigen::Map<const Eigen::VectorXd> theta(coef.data(), static_cast<Eigen::Index>(coef.size()));
    return block_deviance(design, theta, 0, design.rows());
}

std::vector<double> loglik_gradient(const DesignMatrix& design, const std::vector<double>& coef) {
    const int m = design.strata();
    const int p = design.extras();
    std::vector<double> grad(m + p, 0.0);
    for (std::size_t r = 0; r < design.rows(); ++r) {
        double eta = coef[design.stratum(r)];
        const double* x = design.extras_row(r);
        for (int j = 0; j < p; ++j) eta += coef[m + j] * x[j];
        const double resid =
            design.weight(r) * ((design.response(r) ? 1.0 : 0.0) - logistic(eta));
        grad[design.stratum(r)] += resid;
        for (int j = 0; j < p; ++j) grad[m + j] += resid * x[j];
    }
    return grad;
}

FittedDthModel fit(const DesignMatrix& design, const FitOptions& options) {
    const int m = design.strata();
    const int p = design.extras();
    if (design.rows() == 0) throw EmptyPanel();
    {
        bool has_event = false, has_nonevent = false;
        for (std::size_t r = 0; r < design.rows(); ++r)
            (design.response(r) ? has_event : has_nonevent) = true;
        if (!has_event || !has_nonevent)
            throw ValidationError("fit needs at least one event and one non-event row");
    }

    // Warm start: stratum coefficients at the weighted within-stratum event
    // rate; covariate coefficients at zero.
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(m + p);
    {
        std::vector<double> events(m, 0.0), mass(m, 0.0);
        for (std::size_t r = 0; r < design.rows(); ++r) {
            const double w = design.weight(r);
            mass[design.stratum(r)] += w;
            if (design.response(r)) events[design.stratum(r)] += w;
        }
        for (int s = 0; s < m; ++s)
            coef[s] = clamped_logit(mass[s] > 0.0 ? events[s] / mass[s] : 0.5);
    }

    constexpr double kRidge = 1e-6;
    FittedDthModel model;
    model.spec = design.spec();
    model.stratum_labels = design.stratum_labels();
    model.extra_labels = design.extra_labels();
    model.dummy_levels = design.dummy_levels();

    double deviance = deviance_pass(design, coef, options.threads);
    int iter = 0;
    bool converged = false;
    bool ridged = false;
    FitPass pass;

    while (iter < options.max_iter) {
        ++iter;
        pass = full_pass(design, coef, options.threads);
        Eigen::MatrixXd info = assemble_information(pass, m, p);
        if (ridged) info.diagonal().array() += kRidge;

        Eigen::VectorXd step = info.ldlt().solve(pass.grad);
        if (!step.allFinite() || step.cwiseAbs().maxCoeff() > 1e4) {
            // Quasi-separated data leaves the information ill-conditioned;
            // retry with a ridge and flag the fit.
            ridged = true;
            info.diagonal().array() += kRidge;
            step = info.ldlt().solve(pass.grad);
            if (!step.allFinite())
                throw NumericError("singular information matrix during fit");
        }

        double scale = 1.0;
        double new_deviance = 0.0;
        for (int halving = 0; halving <= 10; ++halving) {
            new_deviance = deviance_pass(design, coef + scale * step, options.threads);
            if (new_deviance <= deviance + 1e-10) break;
            scale *= 0.5;
        }
        coef += scale * step;

        // A coefficient running off to +-inf means a separated cell (for
        // strata: no events or all events); stabilize with the ridge and flag.
        if (!ridged && coef.cwiseAbs().maxCoeff() > 30.0) ridged = true;

        const double max_delta = (scale * step).cwiseAbs().maxCoeff();
        const double rel_dev_change =
            std::abs(deviance - new_deviance) / (std::abs(deviance) + 1.0);
        deviance = new_deviance;
        if (max_delta < options.tol || rel_dev_change < options.tol * options.tol) {
            converged = true;
            break;
        }
    }

    // Standard errors from the information at the final coefficients.
    pass = full_pass(design, coef, options.threads);
    Eigen::MatrixXd info = assemble_information(pass, m, p);
    if (ridged) info.diagonal().array() += kRidge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(m + p, m + p));
    if (!cov.allFinite()) {
        if (!ridged) throw NumericError("singular information matrix for standard errors");
        cov = Eigen::MatrixXd::Constant(m + p, m + p, std::numeric_limits<double>::quiet_NaN());
    }

    model.coefficients.assign(coef.data(), coef.data() + m + p);
    model.std_errors.resize(m + p);
    for (int j = 0; j < m + p; ++j)
        model.std_errors[j] = cov(j, j) > 0.0 ? std::sqrt(cov(j, j))
                                              : std::numeric_limits<double>::quiet_NaN();
    model.converged = converged;
    model.ridged = ridged;
    model.iterations = iter;
    model.deviance = pass.deviance;
    return model;
}

double FittedDthModel::coefficient(const std::string& label) const {
    for (std::size_t j = 0; j < stratum_labels.size(); ++j)
        if (stratum_labels[j] == label) return coefficients[j];
    for (std::size_t j = 0; j < extra_labels.size(); ++j)
        if (extra_labels[j] == label) return coefficients[stratum_labels.size() + j];
    throw ValidationError("no coefficient labelled '" + label + "'");
}

std::string FittedDthModel::to_json_string() const {
    json j;
    j["spec"] = json::parse(spec.to_json_string());
    j["stratum_labels"] = stratum_labels;
    j["extra_labels"] = extra_labels;
    j["coefficients"] = coefficients;
    j["std_errors"] = std_errors;
    j["dummy_levels"] = dummy_levels;
    j["converged"] = converged;
    j["ridged"] = ridged;
    j["iterations"] = iterations;
    j["deviance"] = deviance;
    return j.dump(2);
}

FittedDthModel FittedDthModel::from_json_string(const std::string& text) {
    json j = json::parse(text);
    FittedDthModel model;
    model.spec = ModelSpec::from_json_string(j.at("spec").dump());
    model.stratum_labels = j.at("stratum_labels").get<std::vector<std::string>>();
    model.extra_labels = j.at("extra_labels").get<std::vector<std::string>>();
    model.coefficients = j.at("coefficients").get<std::vector<double>>();
    model.std_errors = j.at("std_errors").get<std::vector<double>>();
    model.dummy_levels = j.at("dummy_levels").get<std::vector<std::vector<std::string>>>();
    model.converged = j.value("converged", true);
    model.ridged = j.value("ridged", false);
    model.iterations = j.value("iterations", 0);
    model.deviance = j.value("deviance", 0.0);
    if (model.coefficients.size() != model.stratum_labels.size() + model.extra_labels.size())
        throw ValidationError("model file: coefficient count does not match labels");
    return model;
}

FittedDthModel FittedDthModel::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open model file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

namespace {

// Resolves model labels against a concrete panel once, then serves hazard
// evaluations for rows and for extrapolated ages.
class Predictor {
  public:
    Predictor(const FittedDthModel& model, const SpellPanel& panel)
        : model_(model), panel_(panel) {
        const ModelSpec& spec = model.spec;
        interact_ = spec.use_spell_bins && spec.interact_time_spell;
        n_time_ = spec.time_bins.count();

        stratum_by_cell_.assign(static_cast<std::size_t>(n_time_) *
                                    (interact_ ? kSpellBinCount : 1),
                                -1);
        std::unordered_map<std::string, int> by_label;
        for (std::size_t s = 0; s < model.stratum_labels.size(); ++s)
            by_label[model.stratum_labels[s]] = static_cast<int>(s);
        for (int tb = 0; tb < n_time_; ++tb) {
            if (interact_) {
                for (int sb = 0; sb < kSpellBinCount; ++sb) {
                    const std::string label =
                        spec.time_bins.label(tb) + ":" + spell_bin_label(sb);
                    if (auto it = by_label.find(label); it != by_label.end())
                        stratum_by_cell_[tb * kSpellBinCount + sb] = it->second;
                }
            } else if (auto it = by_label.find(spec.time_bins.label(tb)); it != by_label.end()) {
                stratum_by_cell_[tb] = it->second;
            }
        }
        max_bin_.assign(interact_ ? kSpellBinCount : 1, -1);
        for (int tb = 0; tb < n_time_; ++tb)
            for (std::size_t sb = 0; sb < max_bin_.size(); ++sb)
                if (stratum_by_cell_[interact_ ? tb * kSpellBinCount + sb : tb] >= 0)
                    max_bin_[sb] = tb;

        std::unordered_map<std::string, int> extra_by_label;
        for (std::size_t j = 0; j < model.extra_labels.size(); ++j)
            extra_by_label[model.extra_labels[j]] = static_cast<int>(j);

        if (spec.use_spell_bins && !spec.interact_time_spell) {
            spell_column_.assign(kSpellBinCount, -1);
            for (int sb = 0; sb < kSpellBinCount; ++sb) {
                const std::string label = "spell:" + spell_bin_label(sb);
                if (auto it = extra_by_label.find(label); it != extra_by_label.end())
                    spell_column_[sb] = it->second;
            }
        }

        for (const std::string& name : spec.numeric_covariates) {
            const auto slot = panel.numeric_slot(name);
            if (!slot) throw ValidationError("panel lacks numeric covariate: " + name);
            numeric_.push_back({*slot, extra_by_label.at(name)});
        }
        for (std::size_t d = 0; d < spec.dummy_covariates.size(); ++d) {
            const DummyCovariate& cov = spec.dummy_covariates[d];
            const auto slot = panel.categorical_slot(cov.name);
            if (!slot) throw ValidationError("panel lacks categorical covariate: " + cov.name);
            DummyLookup lookup;
            lookup.slot = *slot;
            lookup.name = cov.name;
            const auto& levels = panel.levels(*slot);
            lookup.column_of_level.assign(levels.size(), -2);
            for (std::size_t lv = 0; lv < levels.size(); ++lv) {
                if (levels[lv] == cov.reference) {
                    lookup.column_of_level[lv] = -1;
                } else {
                    const std::string label = cov.name + "=" + levels[lv];
                    if (auto it = extra_by_label.find(label); it != extra_by_label.end())
                        lookup.column_of_level[lv] = it->second;
                }
            }
            dummies_.push_back(std::move(lookup));
        }
    }

    // Covariate (and additive spell) part of the linear predictor.
    double extras_eta(std::size_t row) const {
        const std::size_t base = model_.stratum_labels.size();
        double eta = 0.0;
        if (!spell_column_.empty()) {
            const int col = spell_column_[spell_bin_of(panel_.rows()[row].spell_num)];
            if (col >= 0) eta += model_.coefficients[base + col];
            // first observed bin is the reference; unseen bins fall through
            // to stratum lookup failures only under interaction
        }
        for (const auto& [slot, col] : numeric_)
            eta += model_.coefficients[base + col] * panel_.numeric(row, slot);
        for (const DummyLookup& d : dummies_) {
            const int col = d.column_of_level[panel_.category(row, d.slot)];
            if (col == -2)
                throw ValidationError("level '" +
                                      panel_.levels(d.slot)[panel_.category(row, d.slot)] +
                                      "' of covariate " + d.name + " was not seen in training");
            if (col >= 0) eta += model_.coefficients[base + col];
        }
        return eta;
    }

    // Stratum coefficient for a spell age; `clamp_tail` reuses the last
    // trained bin's level past the trained range instead of failing.
    double stratum_alpha(int age, int spell_num, bool clamp_tail) const {
        const int sb = interact_ ? spell_bin_of(spell_num) : 0;
        int tb = model_.spec.time_bins.bin_of(age);
        if (clamp_tail && max_bin_[sb] >= 0 && tb > max_bin_[sb]) tb = max_bin_[sb];
        const int stratum = stratum_by_cell_[interact_ ? tb * kSpellBinCount + sb : tb];
        if (stratum < 0)
            throw ValidationError("stratum for age " + std::to_string(age) + ", spell bin " +
                                  spell_bin_label(interact_ ? sb : spell_bin_of(spell_num)) +
                                  " was not seen in training");
        return model_.coefficients[stratum];
    }

    double hazard_row(std::size_t row) const {
        const PanelRow& r = panel_.rows()[row];
        return logistic(stratum_alpha(r.spell_period, r.spell_num, false) + extras_eta(row));
    }

    double hazard_at_age(std::size_t row, int age) const {
        const PanelRow& r = panel_.rows()[row];
        return logistic(stratum_alpha(age, r.spell_num, true) + extras_eta(row));
    }

  private:
    struct DummyLookup {
        std::size_t slot = 0;
        std::string name;
        std::vector<int> column_of_level;
    };

    const FittedDthModel& model_;
    const SpellPanel& panel_;
    bool interact_ = false;
    int n_time_ = 0;
    std::vector<int> stratum_by_cell_;
    std::vector<int> max_bin_;
    std::vector<int> spell_column_;
    std::vector<std::pair<std::size_t, int>> numeric_;
    std::vector<DummyLookup> dummies_;
};

}  // namespace

std::vector<double> predict_hazard(const FittedDthModel& model, const SpellPanel& panel) {
    Predictor predictor(model, panel);
    std::vector<double> hazard(panel.rows().size());
    for (std::size_t r = 0; r < hazard.size(); ++r) hazard[r] = predictor.hazard_row(r);
    return hazard;
}

TermStructurePrediction predict_term_structure(const FittedDthModel& model,
                                               const SpellPanel& panel, int age_cap,
                                               bool keep_spell_curves) {
    if (panel.empty()) throw EmptyPanel();
    if (age_cap < 1) throw InvalidConfig("age cap must be >= 1");
    Predictor predictor(model, panel);

    TermStructurePrediction out;
    std::vector<double> hazard_sum(age_cap + 1, 0.0);
    std::vector<std::size_t> at_risk(age_cap + 1, 0);

    for (std::size_t s = 0; s < panel.spells().size(); ++s) {
        const Spell& spell = panel.spells()[s];
        SpellCurve curve;
        curve.spell_index = s;
        double survival = 1.0;
        for (std::size_t k = 0; k < spell.row_count; ++k) {
            const std::size_t row = spell.first_row + k;
            const int age = panel.rows()[row].spell_period;
            const double h = predictor.hazard_row(row);
            if (age <= age_cap) {
                hazard_sum[age] += h;
                ++at_risk[age];
            }
            if (keep_spell_curves) {
                const double prev = survival;
                survival *= 1.0 - h;
                curve.hazard.push_back(h);
                curve.survival.push_back(survival);
                curve.density.push_back(prev * h);
            }
        }
        if (keep_spell_curves) out.spells.push_back(std::move(curve));
    }

    double survival = 1.0;
    for (int age = 1; age <= age_cap; ++age) {
        if (at_risk[age] == 0) continue;
        const double h = hazard_sum[age] / static_cast<double>(at_risk[age]);
        const double prev = survival;
        survival *= 1.0 - h;
        out.portfolio.age.push_back(age);
        out.portfolio.hazard.push_back(h);
        out.portfolio.survival.push_back(survival);
        out.portfolio.density.push_back(prev * h);
    }
    return out;
}

std::vector<double> rolling_12m_default_probability(const FittedDthModel& model,
                                                    const SpellPanel& panel) {
    Predictor predictor(model, panel);
    std::vector<double> out(panel.rows().size());
    std::vector<double> hazard;
    for (const Spell& spell : panel.spells()) {
        hazard.resize(spell.row_count);
        for (std::size_t k = 0; k < spell.row_count; ++k)
            hazard[k] = predictor.hazard_row(spell.first_row + k);
        for (std::size_t k = 0; k < spell.row_count; ++k) {
            const std::size_t end = std::min(spell.row_count, k + 1 + 12);
            double survive = 1.0;
            for (std::size_t q = k + 1; q < end; ++q) survive *= 1.0 - hazard[q];
            out[spell.first_row + k] = 1.0 - survive;
        }
    }
    return out;
}

std::vector<std::vector<double>> survival_at_horizons(const FittedDthModel& model,
                                                      const SpellPanel& panel,
                                                      const std::vector<int>& horizons) {
    for (std::size_t k = 1; k < horizons.size(); ++k)
        if (horizons[k] <= horizons[k - 1])
            throw InvalidConfig("horizons must be strictly increasing");
    if (!horizons.empty() && horizons.front() < 1)
        throw InvalidConfig("horizons must be >= 1");
    Predictor predictor(model, panel);

    std::vector<std::vector<double>> out(panel.spells().size(),
                                         std::vector<double>(horizons.size(), 1.0));
    if (horizons.empty()) return out;
    const int t_max = horizons.back();

    for (std::size_t s = 0; s < panel.spells().size(); ++s) {
        const Spell& spell = panel.spells()[s];
        double survival = 1.0;
        std::size_t h_idx = 0;
        // Horizons before the spell's delayed entry stay at S = 1.
        while (h_idx < horizons.size() && horizons[h_idx] <= spell.entry_time) ++h_idx;
        for (int age = spell.entry_time + 1; age <= t_max; ++age) {
            double h;
            if (age <= spell.stop_time) {
                const std::size_t row =
                    spell.first_row + static_cast<std::size_t>(age - spell.entry_time - 1);
                h = predictor.hazard_row(row);
            } else {
                // Past the observed rows: freeze the final row's covariates.
                const std::size_t row = spell.first_row + spell.row_count - 1;
                h = predictor.hazard_at_age(row, age);
            }
            survival *= 1.0 - h;
            while (h_idx < horizons.size() && horizons[h_idx] == age) out[s][h_idx++] = survival;
        }
        while (h_idx < horizons.size()) out[s][h_idx++] = survival;
    }
    return out;
}

std::vector<double> survival_at_horizon(const FittedDthModel& model, const SpellPanel& panel,
                                        int horizon) {
    const auto curves = survival_at_horizons(model, panel, {horizon});
    std::vector<double> out(curves.size());
    for (std::size_t s = 0; s < curves.size(); ++s) out[s] = curves[s][0];
    return out;
}

}  // namespace pdterm
