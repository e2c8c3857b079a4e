#pragma once

#include <compare>
#include <string>

namespace pdterm {

// Calendar month with no intra-month resolution, serialized as "YYYY-MM".
class YearMonth {
  public:
    YearMonth() = default;
    YearMonth(int year, int month);

    // Throws ParseError-free std::invalid_argument style ValidationError on bad input.
    static YearMonth parse(const std::string& text);

    int year() const noexcept { return index_ / 12; }
    int month() const noexcept { return index_ % 12 + 1; }
    // Months since 0000-01; handy as a dense series key.
    int index() const noexcept { return index_; }
    static YearMonth from_index(int index) noexcept;

    std::string str() const;

    YearMonth operator+(int months) const noexcept { return from_index(index_ + months); }
    YearMonth operator-(int months) const noexcept { return from_index(index_ - months); }
    int operator-(YearMonth other) const noexcept { return index_ - other.index_; }
    YearMonth& operator++() noexcept {
        ++index_;
        return *this;
    }

    auto operator<=>(const YearMonth&) const = default;

  private:
    int index_ = 0;
};

}  // namespace pdterm
