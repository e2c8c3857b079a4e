#pragma once

#include <filesystem>
#include <string>

#include "pdterm/panel.hpp"

namespace pdterm::testing {

// Scratch directory removed on destruction.
class TempDir {
  public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// The four-loan illustrative panel (7 spells, 25 rows) in CSV form, loan 4's
// first spell left in the alternate truncation encoding.
std::string illustrative_panel_csv();
SpellPanel illustrative_panel();

// Appends one fully-observed spell's rows to a builder (no covariates).
void add_spell(PanelBuilder& builder, std::int64_t loan, int spell_num, int age,
               ResolutionType resolution, YearMonth start, int loan_period_at_start);

// Ten single-spell loans: defaults at ages 1,1,2, one censored at 1, six
// censored at 5. Hand life table: n1=10 h1=0.2, n2=7 h2=1/7.
SpellPanel ten_loan_panel();

}  // namespace pdterm::testing
