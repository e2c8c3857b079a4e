#include "fixtures.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pdterm::testing {

TempDir::TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "pdterm_XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string illustrative_panel_csv() {
    return "LoanID,Date,LoanPeriod,SpellNum,SpellPeriod,EntryTime,StopTime,ResolutionType,"
           "SpellAge,Event\n"
           "1,2015-01,1,1,1,0,4,1,4,0\n"
           "1,2015-02,2,1,2,0,4,1,4,0\n"
           "1,2015-03,3,1,3,0,4,1,4,0\n"
           "1,2015-04,4,1,4,0,4,1,4,1\n"
           "2,2015-01,1,1,1,0,3,4,3,0\n"
           "2,2015-02,2,1,2,0,3,4,3,0\n"
           "2,2015-03,3,1,3,0,3,4,3,0\n"
           "3,2015-01,1,1,1,0,4,1,4,0\n"
           "3,2015-02,2,1,2,0,4,1,4,0\n"
           "3,2015-03,3,1,3,0,4,1,4,0\n"
           "3,2015-04,4,1,4,0,4,1,4,1\n"
           "3,2015-11,11,2,1,0,3,2,3,0\n"
           "3,2015-12,12,2,2,0,3,2,3,0\n"
           "3,2016-01,13,2,3,0,3,2,3,0\n"
           "4,2015-05,5,1,5,0,5,1,5,0\n"
           "4,2015-06,6,1,6,0,5,1,5,0\n"
           "4,2015-07,7,1,7,0,5,1,5,0\n"
           "4,2015-08,8,1,8,0,5,1,5,0\n"
           "4,2015-09,9,1,9,0,5,1,5,1\n"
           "4,2016-08,20,2,1,0,4,1,4,0\n"
           "4,2016-09,21,2,2,0,4,1,4,0\n"
           "4,2016-10,22,2,3,0,4,1,4,0\n"
           "4,2016-11,23,2,4,0,4,1,4,1\n"
           "4,2018-04,40,3,1,0,2,4,2,0\n"
           "4,2018-05,41,3,2,0,2,4,2,0\n";
}

SpellPanel illustrative_panel() {
    TempDir dir;
    const std::string path = dir.file("panel.csv");
    write_file(path, illustrative_panel_csv());
    return load_panel(path, {});
}

void add_spell(PanelBuilder& builder, std::int64_t loan, int spell_num, int age,
               ResolutionType resolution, YearMonth start, int loan_period_at_start) {
    for (int t = 1; t <= age; ++t) {
        PanelRow row;
        row.loan_id = loan;
        row.loan_period = loan_period_at_start + t - 1;
        row.spell_num = spell_num;
        row.spell_period = t;
        row.entry_time = 0;
        row.stop_time = age;
        row.spell_age = age;
        row.resolution = resolution;
        row.event = resolution == ResolutionType::kDefault && t == age;
        row.date = start + (t - 1);
        builder.add_row(row, {}, {});
    }
}

SpellPanel ten_loan_panel() {
    PanelBuilder builder({});
    const YearMonth start(2020, 1);
    add_spell(builder, 1, 1, 1, ResolutionType::kDefault, start, 1);
    add_spell(builder, 2, 1, 1, ResolutionType::kDefault, start, 1);
    add_spell(builder, 3, 1, 1, ResolutionType::kCensored, start, 1);
    add_spell(builder, 4, 1, 2, ResolutionType::kDefault, start, 1);
    for (std::int64_t loan = 5; loan <= 10; ++loan)
        add_spell(builder, loan, 1, 5, ResolutionType::kCensored, start, 1);
    return builder.build();
}

}  // namespace pdterm::testing
