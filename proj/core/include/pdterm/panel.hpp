#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdterm/yearmonth.hpp"

namespace pdterm {

// Spell resolution outcomes; wire format is the integer code.
enum class ResolutionType : int {
    kDefault = 1,
    kSettled = 2,
    kWriteOffOther = 3,
    kCensored = 4,
};

constexpr std::array<ResolutionType, 4> kAllResolutions = {
    ResolutionType::kDefault, ResolutionType::kSettled, ResolutionType::kWriteOffOther,
    ResolutionType::kCensored};

std::string_view resolution_name(ResolutionType type);
ResolutionType resolution_from_code(int code, std::size_t line);

enum class CovariateKind { kNumeric, kCategorical };

struct CovariateSpec {
    std::string name;
    CovariateKind kind = CovariateKind::kNumeric;
};
using CovariateSchema = std::vector<CovariateSpec>;

// One monthly observation of one performing spell. Covariate values live in
// the owning panel's column store, not on the row.
struct PanelRow {
    std::int64_t loan_id = 0;
    int loan_period = 0;   // months since loan origination, 1-based
    int spell_num = 0;     // j, 1-based per loan
    int spell_period = 0;  // age within the spell at this row, in months
    int entry_time = 0;    // delayed-entry age; 0 when the spell is fully observed
    int stop_time = 0;     // age at which the spell stops
    int spell_age = 0;     // observed follow-up: stop_time - entry_time
    ResolutionType resolution = ResolutionType::kCensored;
    bool event = false;  // default occurred at this row
    YearMonth date;
    std::size_t source_line = 0;  // 1-based input line, 0 for generated rows
};

struct Spell {
    std::int64_t loan_id = 0;
    int spell_num = 0;
    std::size_t first_row = 0;
    std::size_t row_count = 0;
    int entry_time = 0;
    int stop_time = 0;
    int spell_age = 0;
    ResolutionType resolution = ResolutionType::kCensored;
    YearMonth stop_month;  // calendar month of the final row

    bool defaulted() const noexcept { return resolution == ResolutionType::kDefault; }
};

// Immutable, validated panel of performing spells in counting-process form.
// Rows are sorted by (loan_id, spell_num, spell_period); safe to share
// across threads once built.
class SpellPanel {
  public:
    SpellPanel() = default;

    const std::vector<PanelRow>& rows() const noexcept { return rows_; }
    const std::vector<Spell>& spells() const noexcept { return spells_; }
    const CovariateSchema& schema() const noexcept { return schema_; }

    bool empty() const noexcept { return rows_.empty(); }
    std::size_t loan_count() const noexcept { return loan_count_; }

    std::size_t numeric_count() const noexcept { return numeric_names_.size(); }
    std::size_t categorical_count() const noexcept { return categorical_names_.size(); }

    double numeric(std::size_t row, std::size_t slot) const {
        return numeric_[row * numeric_names_.size() + slot];
    }
    std::int32_t category(std::size_t row, std::size_t slot) const {
        return categorical_[row * categorical_names_.size() + slot];
    }

    // Slot lookup within the numeric/categorical column stores; nullopt when
    // no covariate of that kind has the name.
    std::optional<std::size_t> numeric_slot(std::string_view name) const;
    std::optional<std::size_t> categorical_slot(std::string_view name) const;

    const std::vector<std::string>& levels(std::size_t categorical_slot) const {
        return levels_[categorical_slot];
    }
    const std::string& numeric_name(std::size_t slot) const { return numeric_names_[slot]; }
    const std::string& categorical_name(std::size_t slot) const {
        return categorical_names_[slot];
    }

    const Spell& spell_of_row(std::size_t row) const { return spells_[row_spell_[row]]; }
    std::size_t spell_index_of_row(std::size_t row) const { return row_spell_[row]; }

    // Whole-loan subset preserving schema and level tables.
    SpellPanel subset_by_loans(const std::vector<std::int64_t>& sorted_loan_ids) const;

    YearMonth first_month() const noexcept { return first_month_; }
    YearMonth last_month() const noexcept { return last_month_; }

  private:
    friend class PanelBuilder;

    std::vector<PanelRow> rows_;
    std::vector<Spell> spells_;
    std::vector<std::size_t> row_spell_;
    CovariateSchema schema_;
    std::vector<std::string> numeric_names_;
    std::vector<std::string> categorical_names_;
    std::vector<double> numeric_;            // rows x numeric slots, row-major
    std::vector<std::int32_t> categorical_;  // rows x categorical slots
    std::vector<std::vector<std::string>> levels_;
    std::size_t loan_count_ = 0;
    YearMonth first_month_;
    YearMonth last_month_;
};

// Accumulates rows (in any order) and validates the complete panel on build().
// The builder accepts both truncation encodings and normalizes to explicit
// per-spell entry/stop ages with spell periods covering (entry, stop].
class PanelBuilder {
  public:
    explicit PanelBuilder(CovariateSchema schema);

    std::size_t numeric_slots() const noexcept { return numeric_slots_; }
    std::size_t categorical_slots() const noexcept { return categorical_slots_; }

    std::int32_t intern_level(std::size_t categorical_slot, std::string_view level);

    void add_row(const PanelRow& row, std::span<const double> numeric_values,
                 std::span<const std::int32_t> categorical_values);

    SpellPanel build();

  private:
    SpellPanel panel_;
    std::size_t numeric_slots_ = 0;
    std::size_t categorical_slots_ = 0;
    std::vector<std::map<std::string, std::int32_t, std::less<>>> level_ids_;
};

// CSV ingestion. Mandatory columns: LoanID, Date, SpellNum, SpellPeriod,
// EntryTime, StopTime, ResolutionType, SpellAge, Event. LoanPeriod is carried
// through when present and reconstructed from dates otherwise. Declared
// covariates must each have a column; unknown columns are ignored.
SpellPanel load_panel(const std::string& path, const CovariateSchema& schema);

// Convenience overload: detects covariate columns (every non-mandatory
// column) and their kinds (numeric when all non-empty values parse).
SpellPanel load_panel(const std::string& path);

CovariateSchema detect_covariate_schema(const std::string& path);

void write_panel(const SpellPanel& panel, std::ostream& out);
void write_panel(const SpellPanel& panel, const std::string& path);

struct CensoringStudy {
    std::map<int, double> per_age;  // spell age -> censored share among spells of that age
    double mean_rate = 0.0;         // unweighted mean over ages present
    int age_cap = 0;
};

CensoringStudy censoring_study(const SpellPanel& panel, int age_cap);

struct FailureTimeHistogram {
    ResolutionType filter = ResolutionType::kDefault;
    std::map<int, std::size_t> counts;              // spell age -> spells of `filter` type
    std::map<ResolutionType, double> type_shares;   // shares among spells with age <= cap
    std::size_t total_spells = 0;                   // spells with age <= cap
};

FailureTimeHistogram failure_time_histogram(const SpellPanel& panel, ResolutionType filter,
                                            int age_cap);

}  // namespace pdterm
