#include "pdterm/yearmonth.hpp"

#include <cctype>
#include <cstdio>

#include "pdterm/errors.hpp"

namespace pdterm {

YearMonth::YearMonth(int year, int month) {
    if (month < 1 || month > 12 || year < 0)
        throw ValidationError("invalid year-month: " + std::to_string(year) + "-" +
                              std::to_string(month));
    index_ = year * 12 + (month - 1);
}

YearMonth YearMonth::from_index(int index) noexcept {
    YearMonth ym;
    ym.index_ = index;
    return ym;
}

YearMonth YearMonth::parse(const std::string& text) {
    // Strict "YYYY-MM" (4 digits, dash, 2 digits).
    if (text.size() != 7 || text[4] != '-')
        throw ValidationError("expected YYYY-MM date, got '" + text + "'");
    for (int i : {0, 1, 2, 3, 5, 6})
        if (!std::isdigit(static_cast<unsigned char>(text[i])))
            throw ValidationError("expected YYYY-MM date, got '" + text + "'");
    const int year = std::stoi(text.substr(0, 4));
    const int month = std::stoi(text.substr(5, 2));
    return YearMonth(year, month);
}

std::string YearMonth::str() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", year(), month());
    return buf;
}

}  // namespace pdterm
