#pragma once

#include <cstddef>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace pdterm::csv {

// Streaming reader for comma-separated UTF-8 files with a header row.
// Supports double-quoted fields with "" escapes; no embedded newlines.
class Reader {
  public:
    explicit Reader(const std::string& path);

    const std::vector<std::string>& header() const noexcept { return header_; }

    // Index of a header column, or -1 when absent.
    int column(std::string_view name) const noexcept;

    // Reads the next record into an internal buffer. Returns false at EOF.
    // Fields views stay valid until the next call.
    bool next(std::vector<std::string_view>& fields);

    // 1-based line number of the record returned by the last next() call.
    std::size_t line() const noexcept { return line_; }

  private:
    std::ifstream in_;
    std::string path_;
    std::string buf_;
    std::string unquoted_;
    std::vector<std::string> header_;
    std::size_t line_ = 0;

    bool read_record(std::vector<std::string_view>& fields);
};

// Minimal writer; quotes fields only when they contain separators or quotes.
class Writer {
  public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void row(const std::vector<std::string>& fields);

  private:
    std::ostream& out_;
};

std::string format_double(double value);      // shortest round-trip representation
std::string format_double12(double value);    // 12 significant digits

double parse_double(std::string_view text, std::size_t line, std::string_view column);
long long parse_int(std::string_view text, std::size_t line, std::string_view column);

}  // namespace pdterm::csv
