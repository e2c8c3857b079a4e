#include "pdterm/panel.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <tuple>
#include <unordered_map>

#include "pdterm/csv.hpp"
#include "pdterm/errors.hpp"

namespace pdterm {

namespace {

constexpr const char* kMandatoryColumns[] = {"LoanID",    "Date",           "SpellNum",
                                             "SpellPeriod", "EntryTime",    "StopTime",
                                             "ResolutionType", "SpellAge",  "Event"};

bool is_mandatory(std::string_view name) {
    for (const char* c : kMandatoryColumns)
        if (name == c) return true;
    return name == "LoanPeriod";
}

}  // namespace

std::string_view resolution_name(ResolutionType type) {
    switch (type) {
        case ResolutionType::kDefault: return "Default";
        case ResolutionType::kSettled: return "Settled";
        case ResolutionType::kWriteOffOther: return "WriteOffOther";
        case ResolutionType::kCensored: return "Censored";
    }
    return "Unknown";
}

ResolutionType resolution_from_code(int code, std::size_t line) {
    if (code < 1 || code > 4)
        throw ParseError(line, "resolution type must be 1..4, got " + std::to_string(code));
    return static_cast<ResolutionType>(code);
}

std::optional<std::size_t> SpellPanel::numeric_slot(std::string_view name) const {
    for (std::size_t i = 0; i < numeric_names_.size(); ++i)
        if (numeric_names_[i] == name) return i;
    return std::nullopt;
}

std::optional<std::size_t> SpellPanel::categorical_slot(std::string_view name) const {
    for (std::size_t i = 0; i < categorical_names_.size(); ++i)
        if (categorical_names_[i] == name) return i;
    return std::nullopt;
}

SpellPanel SpellPanel::subset_by_loans(const std::vector<std::int64_t>& sorted_loan_ids) const {
    SpellPanel out;
    out.schema_ = schema_;
    out.numeric_names_ = numeric_names_;
    out.categorical_names_ = categorical_names_;
    out.levels_ = levels_;
    out.loan_count_ = sorted_loan_ids.size();

    const std::size_t nn = numeric_names_.size();
    const std::size_t nc = categorical_names_.size();
    bool any = false;
    for (std::size_t s = 0; s < spells_.size(); ++s) {
        const Spell& sp = spells_[s];
        if (!std::binary_search(sorted_loan_ids.begin(), sorted_loan_ids.end(), sp.loan_id))
            continue;
        Spell copy = sp;
        copy.first_row = out.rows_.size();
        for (std::size_t r = sp.first_row; r < sp.first_row + sp.row_count; ++r) {
            out.rows_.push_back(rows_[r]);
            out.row_spell_.push_back(out.spells_.size());
            out.numeric_.insert(out.numeric_.end(), numeric_.begin() + r * nn,
                                numeric_.begin() + (r + 1) * nn);
            out.categorical_.insert(out.categorical_.end(), categorical_.begin() + r * nc,
                                    categorical_.begin() + (r + 1) * nc);
            const YearMonth d = rows_[r].date;
            if (!any || d < out.first_month_) out.first_month_ = d;
            if (!any || d > out.last_month_) out.last_month_ = d;
            any = true;
        }
        out.spells_.push_back(copy);
    }
    return out;
}

PanelBuilder::PanelBuilder(CovariateSchema schema) {
    panel_.schema_ = std::move(schema);
    for (const CovariateSpec& cov : panel_.schema_) {
        if (cov.name.empty()) throw InvalidConfig("covariate with empty name");
        const bool dup = panel_.numeric_slot(cov.name).has_value() ||
                         panel_.categorical_slot(cov.name).has_value();
        if (dup) throw InvalidConfig("duplicate covariate name: " + cov.name);
        if (cov.kind == CovariateKind::kNumeric) {
            panel_.numeric_names_.push_back(cov.name);
        } else {
            panel_.categorical_names_.push_back(cov.name);
            panel_.levels_.emplace_back();
            level_ids_.emplace_back();
        }
    }
    numeric_slots_ = panel_.numeric_names_.size();
    categorical_slots_ = panel_.categorical_names_.size();
}

std::int32_t PanelBuilder::intern_level(std::size_t slot, std::string_view level) {
    auto& ids = level_ids_[slot];
    if (auto it = ids.find(level); it != ids.end()) return it->second;
    const auto id = static_cast<std::int32_t>(panel_.levels_[slot].size());
    panel_.levels_[slot].emplace_back(level);
    ids.emplace(std::string(level), id);
    return id;
}

void PanelBuilder::add_row(const PanelRow& row, std::span<const double> numeric_values,
                           std::span<const std::int32_t> categorical_values) {
    if (numeric_values.size() != numeric_slots_ || categorical_values.size() != categorical_slots_)
        throw InvalidConfig("covariate value count does not match the schema");
    panel_.rows_.push_back(row);
    panel_.numeric_.insert(panel_.numeric_.end(), numeric_values.begin(), numeric_values.end());
    panel_.categorical_.insert(panel_.categorical_.end(), categorical_values.begin(),
                               categorical_values.end());
}

SpellPanel PanelBuilder::build() {
    SpellPanel& p = panel_;
    const std::size_t n = p.rows_.size();
    const std::size_t nn = numeric_slots_;
    const std::size_t nc = categorical_slots_;

    // Sort by (loan, spell, period), permuting the column stores alongside.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const PanelRow& ra = p.rows_[a];
        const PanelRow& rb = p.rows_[b];
        return std::tie(ra.loan_id, ra.spell_num, ra.spell_period) <
               std::tie(rb.loan_id, rb.spell_num, rb.spell_period);
    });
    {
        std::vector<PanelRow> rows;
        rows.reserve(n);
        std::vector<double> num;
        num.reserve(n * nn);
        std::vector<std::int32_t> cat;
        cat.reserve(n * nc);
        for (std::size_t idx : order) {
            rows.push_back(p.rows_[idx]);
            num.insert(num.end(), p.numeric_.begin() + idx * nn,
                       p.numeric_.begin() + (idx + 1) * nn);
            cat.insert(cat.end(), p.categorical_.begin() + idx * nc,
                       p.categorical_.begin() + (idx + 1) * nc);
        }
        p.rows_ = std::move(rows);
        p.numeric_ = std::move(num);
        p.categorical_ = std::move(cat);
    }

    auto line_of = [&](const PanelRow& r) { return r.source_line ? r.source_line : 0; };

    // Group rows into spells and validate each.
    p.spells_.clear();
    p.row_spell_.assign(n, 0);
    std::size_t begin = 0;
    while (begin < n) {
        std::size_t end = begin + 1;
        while (end < n && p.rows_[end].loan_id == p.rows_[begin].loan_id &&
               p.rows_[end].spell_num == p.rows_[begin].spell_num)
            ++end;

        const PanelRow& first = p.rows_[begin];
        const PanelRow& last = p.rows_[end - 1];
        const int a = first.spell_period;
        const int b = last.spell_period;

        for (std::size_t r = begin; r < end; ++r) {
            const PanelRow& row = p.rows_[r];
            if (row.spell_period < 1)
                throw InvariantViolation(line_of(row), "spell period must be >= 1");
            if (r > begin) {
                const PanelRow& prev = p.rows_[r - 1];
                if (row.spell_period == prev.spell_period)
                    throw InvariantViolation(line_of(row),
                                             "duplicate (loan, spell, period) key");
                if (row.spell_period != prev.spell_period + 1)
                    throw InvariantViolation(line_of(row),
                                             "spell periods must be consecutive");
                if (row.date - prev.date != 1)
                    throw InvariantViolation(line_of(row),
                                             "calendar months must advance by one within a spell");
                if (row.loan_period != prev.loan_period + 1)
                    throw InvariantViolation(line_of(row),
                                             "loan periods must advance by one within a spell");
                if (row.entry_time != prev.entry_time || row.stop_time != prev.stop_time ||
                    row.spell_age != prev.spell_age || row.resolution != prev.resolution)
                    throw InvariantViolation(
                        line_of(row), "entry/stop/age/resolution must be constant within a spell");
            }
            const bool is_last = r + 1 == end;
            const bool expect_event = is_last && row.resolution == ResolutionType::kDefault;
            if (row.event != expect_event)
                throw InvariantViolation(
                    line_of(row),
                    row.event ? "event flag allowed only on the final row of a defaulted spell"
                              : "defaulted spell must flag the event on its final row");
        }

        // Accept either truncation encoding and normalize to explicit
        // entry/stop ages with periods covering (entry, stop].
        int entry = first.entry_time;
        int stop = first.stop_time;
        const int age = first.spell_age;
        if (entry == a - 1 && stop == b && age == stop - entry) {
            // already normalized
        } else if (entry == 0 && stop == age && age == b - a + 1) {
            entry = a - 1;
            stop = b;
        } else {
            throw InvariantViolation(line_of(first),
                                     "entry/stop/age inconsistent with observed spell periods");
        }
        for (std::size_t r = begin; r < end; ++r) {
            p.rows_[r].entry_time = entry;
            p.rows_[r].stop_time = stop;
            p.row_spell_[r] = p.spells_.size();
        }

        Spell spell;
        spell.loan_id = first.loan_id;
        spell.spell_num = first.spell_num;
        spell.first_row = begin;
        spell.row_count = end - begin;
        spell.entry_time = entry;
        spell.stop_time = stop;
        spell.spell_age = age;
        spell.resolution = first.resolution;
        spell.stop_month = last.date;
        p.spells_.push_back(spell);

        begin = end;
    }

    // Per-loan invariants: spell numbers 1..n_i without gaps; a censored
    // (non-resolved) spell can only be the final one; chronology advances.
    p.loan_count_ = 0;
    std::size_t s = 0;
    while (s < p.spells_.size()) {
        std::size_t t = s;
        while (t < p.spells_.size() && p.spells_[t].loan_id == p.spells_[s].loan_id) ++t;
        ++p.loan_count_;
        for (std::size_t k = s; k < t; ++k) {
            const Spell& sp = p.spells_[k];
            const std::size_t line = line_of(p.rows_[sp.first_row]);
            if (sp.spell_num != static_cast<int>(k - s) + 1)
                throw InvariantViolation(line, "spell numbers must run 1..n without gaps");
            if (sp.resolution == ResolutionType::kCensored && k + 1 != t)
                throw InvariantViolation(line, "censored spell must be the loan's last");
            if (k > s) {
                const Spell& prev = p.spells_[k - 1];
                const PanelRow& prev_last = p.rows_[prev.first_row + prev.row_count - 1];
                const PanelRow& cur_first = p.rows_[sp.first_row];
                if (cur_first.loan_period <= prev_last.loan_period)
                    throw InvariantViolation(line, "spells must not overlap in loan time");
                if (cur_first.date - prev_last.date != cur_first.loan_period - prev_last.loan_period)
                    throw InvariantViolation(line,
                                             "loan periods and calendar months must stay in step");
            }
        }
        s = t;
    }

    if (!p.rows_.empty()) {
        p.first_month_ = p.rows_.front().date;
        p.last_month_ = p.rows_.front().date;
        for (const PanelRow& r : p.rows_) {
            if (r.date < p.first_month_) p.first_month_ = r.date;
            if (r.date > p.last_month_) p.last_month_ = r.date;
        }
    }

    return std::move(panel_);
}

namespace {

struct ColumnMap {
    int loan_id, date, loan_period, spell_num, spell_period;
    int entry, stop, resolution, age, event;
    std::vector<int> numeric;      // per numeric slot
    std::vector<int> categorical;  // per categorical slot
};

ColumnMap map_columns(const csv::Reader& reader, const CovariateSchema& schema) {
    ColumnMap m;
    auto need = [&](const char* name) {
        const int idx = reader.column(name);
        if (idx < 0) throw MissingColumn(name);
        return idx;
    };
    m.loan_id = need("LoanID");
    m.date = need("Date");
    m.loan_period = reader.column("LoanPeriod");  // optional
    m.spell_num = need("SpellNum");
    m.spell_period = need("SpellPeriod");
    m.entry = need("EntryTime");
    m.stop = need("StopTime");
    m.resolution = need("ResolutionType");
    m.age = need("SpellAge");
    m.event = need("Event");
    for (const CovariateSpec& cov : schema) {
        const int idx = reader.column(cov.name);
        if (idx < 0) throw MissingColumn(cov.name);
        if (cov.kind == CovariateKind::kNumeric)
            m.numeric.push_back(idx);
        else
            m.categorical.push_back(idx);
    }
    return m;
}

}  // namespace

SpellPanel load_panel(const std::string& path, const CovariateSchema& schema) {
    csv::Reader reader(path);
    const ColumnMap cols = map_columns(reader, schema);
    PanelBuilder builder(schema);

    std::vector<std::string> numeric_names;
    for (const CovariateSpec& cov : schema)
        if (cov.kind == CovariateKind::kNumeric) numeric_names.push_back(cov.name);

    const bool derive_loan_period = cols.loan_period < 0;
    std::unordered_map<std::int64_t, int> first_date_by_loan;

    std::vector<std::string_view> fields;
    std::vector<PanelRow> rows;
    std::vector<double> numeric;
    std::vector<std::int32_t> categorical;

    while (reader.next(fields)) {
        const std::size_t line = reader.line();
        if (fields.size() < reader.header().size())
            throw ParseError(line, "expected " + std::to_string(reader.header().size()) +
                                       " fields, got " + std::to_string(fields.size()));
        PanelRow row;
        row.source_line = line;
        row.loan_id = csv::parse_int(fields[cols.loan_id], line, "LoanID");
        row.date = YearMonth::parse(std::string(fields[cols.date]));
        row.spell_num = static_cast<int>(csv::parse_int(fields[cols.spell_num], line, "SpellNum"));
        row.spell_period =
            static_cast<int>(csv::parse_int(fields[cols.spell_period], line, "SpellPeriod"));
        row.entry_time = static_cast<int>(csv::parse_int(fields[cols.entry], line, "EntryTime"));
        row.stop_time = static_cast<int>(csv::parse_int(fields[cols.stop], line, "StopTime"));
        row.resolution = resolution_from_code(
            static_cast<int>(csv::parse_int(fields[cols.resolution], line, "ResolutionType")),
            line);
        row.spell_age = static_cast<int>(csv::parse_int(fields[cols.age], line, "SpellAge"));
        const long long ev = csv::parse_int(fields[cols.event], line, "Event");
        if (ev != 0 && ev != 1) throw ParseError(line, "Event must be 0 or 1");
        row.event = ev == 1;
        if (row.spell_num < 1) throw InvariantViolation(line, "spell number must be >= 1");
        if (row.entry_time < 0) throw InvariantViolation(line, "entry time must be >= 0");
        if (row.stop_time <= row.entry_time)
            throw InvariantViolation(line, "stop time must exceed entry time");
        if (row.spell_age < 1) throw InvariantViolation(line, "spell age must be >= 1");

        if (!derive_loan_period) {
            row.loan_period =
                static_cast<int>(csv::parse_int(fields[cols.loan_period], line, "LoanPeriod"));
            if (row.loan_period < 1) throw InvariantViolation(line, "loan period must be >= 1");
        } else {
            auto [it, inserted] = first_date_by_loan.try_emplace(row.loan_id, row.date.index());
            if (!inserted && row.date.index() < it->second) it->second = row.date.index();
            row.loan_period = row.date.index();  // re-anchored below
        }

        for (std::size_t k = 0; k < cols.numeric.size(); ++k) {
            const std::string_view value = fields[cols.numeric[k]];
            if (value.empty())
                throw InvariantViolation(
                    line, "missing value for numeric covariate '" + numeric_names[k] + "'");
            numeric.push_back(csv::parse_double(value, line, "covariate"));
        }
        for (std::size_t k = 0; k < cols.categorical.size(); ++k) {
            const std::string_view value = fields[cols.categorical[k]];
            categorical.push_back(builder.intern_level(k, value.empty() ? "missing" : value));
        }
        rows.push_back(row);
    }

    const std::size_t nn = builder.numeric_slots();
    const std::size_t nc = builder.categorical_slots();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (derive_loan_period)
            rows[r].loan_period = rows[r].loan_period - first_date_by_loan[rows[r].loan_id] + 1;
        builder.add_row(rows[r], std::span(numeric).subspan(r * nn, nn),
                        std::span(categorical).subspan(r * nc, nc));
    }
    return builder.build();
}

SpellPanel load_panel(const std::string& path) {
    return load_panel(path, detect_covariate_schema(path));
}

CovariateSchema detect_covariate_schema(const std::string& path) {
    csv::Reader reader(path);
    std::vector<int> candidate_cols;
    CovariateSchema schema;
    for (std::size_t i = 0; i < reader.header().size(); ++i) {
        const std::string& name = reader.header()[i];
        if (is_mandatory(name)) continue;
        candidate_cols.push_back(static_cast<int>(i));
        schema.push_back({name, CovariateKind::kNumeric});
    }
    std::vector<bool> any_value(schema.size(), false);
    std::vector<std::string_view> fields;
    while (reader.next(fields)) {
        for (std::size_t k = 0; k < candidate_cols.size(); ++k) {
            if (schema[k].kind == CovariateKind::kCategorical) continue;
            const auto idx = static_cast<std::size_t>(candidate_cols[k]);
            if (idx >= fields.size()) continue;
            const std::string_view value = fields[idx];
            if (value.empty()) continue;  // missing: kind undecided by this row
            any_value[k] = true;
            double out = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
            if (ec != std::errc() || p != value.data() + value.size())
                schema[k].kind = CovariateKind::kCategorical;
        }
    }
    // A column of nothing but empties becomes categorical, so its blanks load
    // as an explicit "missing" level instead of rejecting every row.
    for (std::size_t k = 0; k < schema.size(); ++k)
        if (!any_value[k]) schema[k].kind = CovariateKind::kCategorical;
    return schema;
}

void write_panel(const SpellPanel& panel, std::ostream& out) {
    csv::Writer writer(out);
    std::vector<std::string> fields = {"LoanID",    "Date",     "LoanPeriod",
                                       "SpellNum",  "SpellPeriod", "EntryTime",
                                       "StopTime",  "ResolutionType", "SpellAge", "Event"};
    for (const CovariateSpec& cov : panel.schema()) fields.push_back(cov.name);
    writer.row(fields);

    const auto& rows = panel.rows();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const PanelRow& row = rows[r];
        fields.clear();
        fields.push_back(std::to_string(row.loan_id));
        fields.push_back(row.date.str());
        fields.push_back(std::to_string(row.loan_period));
        fields.push_back(std::to_string(row.spell_num));
        fields.push_back(std::to_string(row.spell_period));
        fields.push_back(std::to_string(row.entry_time));
        fields.push_back(std::to_string(row.stop_time));
        fields.push_back(std::to_string(static_cast<int>(row.resolution)));
        fields.push_back(std::to_string(row.spell_age));
        fields.push_back(row.event ? "1" : "0");
        std::size_t num = 0, cat = 0;
        for (const CovariateSpec& cov : panel.schema()) {
            if (cov.kind == CovariateKind::kNumeric)
                fields.push_back(csv::format_double12(panel.numeric(r, num++)));
            else
                fields.push_back(panel.levels(cat)[panel.category(r, cat)]), ++cat;
        }
        writer.row(fields);
    }
}

void write_panel(const SpellPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    write_panel(panel, out);
}

CensoringStudy censoring_study(const SpellPanel& panel, int age_cap) {
    if (panel.empty()) throw EmptyPanel();
    if (age_cap < 1) throw InvalidConfig("age cap must be >= 1");
    std::map<int, std::pair<std::size_t, std::size_t>> counts;  // age -> (censored, total)
    for (const Spell& spell : panel.spells()) {
        if (spell.spell_age > age_cap) continue;
        auto& [censored, total] = counts[spell.spell_age];
        ++total;
        if (spell.resolution == ResolutionType::kCensored) ++censored;
    }
    CensoringStudy study;
    study.age_cap = age_cap;
    double sum = 0.0;
    for (const auto& [age, c] : counts) {
        const double rate = static_cast<double>(c.first) / static_cast<double>(c.second);
        study.per_age[age] = rate;
        sum += rate;
    }
    study.mean_rate = counts.empty() ? 0.0 : sum / static_cast<double>(counts.size());
    return study;
}

FailureTimeHistogram failure_time_histogram(const SpellPanel& panel, ResolutionType filter,
                                            int age_cap) {
    if (panel.empty()) throw EmptyPanel();
    if (age_cap < 1) throw InvalidConfig("age cap must be >= 1");
    FailureTimeHistogram hist;
    hist.filter = filter;
    std::map<ResolutionType, std::size_t> per_type;
    for (const Spell& spell : panel.spells()) {
        if (spell.spell_age > age_cap) continue;
        ++hist.total_spells;
        ++per_type[spell.resolution];
        if (spell.resolution == filter) ++hist.counts[spell.spell_age];
    }
    for (const auto& [type, count] : per_type)
        hist.type_shares[type] =
            static_cast<double>(count) / static_cast<double>(hist.total_spells);
    return hist;
}

}  // namespace pdterm
