#include "pdterm/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "pdterm/errors.hpp"

namespace pdterm::csv {

Reader::Reader(const std::string& path) : in_(path), path_(path) {
    if (!in_) throw ValidationError("cannot open file: " + path);
    std::vector<std::string_view> fields;
    if (!read_record(fields)) throw ValidationError("empty file: " + path);
    header_.assign(fields.begin(), fields.end());
}

int Reader::column(std::string_view name) const noexcept {
    auto it = std::find(header_.begin(), header_.end(), name);
    return it == header_.end() ? -1 : static_cast<int>(it - header_.begin());
}

bool Reader::next(std::vector<std::string_view>& fields) { return read_record(fields); }

bool Reader::read_record(std::vector<std::string_view>& fields) {
    fields.clear();
    if (!std::getline(in_, buf_)) return false;
    ++line_;
    if (!buf_.empty() && buf_.back() == '\r') buf_.pop_back();

    unquoted_.clear();
    unquoted_.reserve(buf_.size());
    // Two alternating storage areas are not needed: unquoted content is copied
    // into unquoted_ and views point either into buf_ or unquoted_.
    std::size_t i = 0;
    const std::size_t n = buf_.size();
    while (true) {
        if (i < n && buf_[i] == '"') {
            const std::size_t start = unquoted_.size();
            ++i;
            while (true) {
                if (i >= n) throw ParseError(line_, "unterminated quoted field");
                if (buf_[i] == '"') {
                    if (i + 1 < n && buf_[i + 1] == '"') {
                        unquoted_.push_back('"');
                        i += 2;
                    } else {
                        ++i;
                        break;
                    }
                } else {
                    unquoted_.push_back(buf_[i++]);
                }
            }
            fields.emplace_back(unquoted_.data() + start, unquoted_.size() - start);
            if (i < n && buf_[i] != ',') throw ParseError(line_, "garbage after quoted field");
        } else {
            const std::size_t start = i;
            while (i < n && buf_[i] != ',') ++i;
            fields.emplace_back(buf_.data() + start, i - start);
        }
        if (i >= n) break;
        ++i;  // skip comma
        if (i == n) {
            fields.emplace_back();  // trailing comma: final empty field
            break;
        }
    }
    return true;
}

void Writer::row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        const std::string& f = fields[i];
        if (f.find_first_of(",\"\n") != std::string::npos) {
            out_ << '"';
            for (char c : f) {
                if (c == '"') out_ << '"';
                out_ << c;
            }
            out_ << '"';
        } else {
            out_ << f;
        }
    }
    out_ << '\n';
}

std::string format_double(double value) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, p);
}

std::string format_double12(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

double parse_double(std::string_view text, std::size_t line, std::string_view column) {
    double out = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc() || p != text.data() + text.size())
        throw ParseError(line, "cannot parse '" + std::string(text) + "' in column " +
                                   std::string(column) + " as a number");
    return out;
}

long long parse_int(std::string_view text, std::size_t line, std::string_view column) {
    long long out = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc() || p != text.data() + text.size())
        throw ParseError(line, "cannot parse '" + std::string(text) + "' in column " +
                                   std::string(column) + " as an integer");
    return out;
}

}  // namespace pdterm::csv
