#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "swapsim/error.hpp"

namespace swapsim {

namespace detail {

// Shortest decimal string that round-trips the exact double; NaN becomes an
// empty field so missing statistics stay distinguishable in CSV output.
inline std::string format_double(double x) {
    if (std::isnan(x)) return {};
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

} // namespace detail

// Minimal RFC-4180 style CSV support: comma separated, optional double-quote
// quoting with "" escapes, tolerant of \r\n line endings and a trailing
// newline. Quoted fields may contain commas and newlines.

// Reads one record; returns false on clean end of input.
inline bool csv_read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    int c = in.get();
    if (c == std::istream::traits_type::eof()) return false;

    std::string field;
    bool quoted = false;
    while (true) {
        if (quoted) {
            if (c == std::istream::traits_type::eof())
                raise(errc::bad_format, "unterminated quoted CSV field");
            if (c == '"') {
                const int next = in.get();
                if (next == '"') {
                    field.push_back('"');
                } else {
                    quoted = false;
                    c = next;
                    continue;
                }
            } else {
                field.push_back(static_cast<char>(c));
            }
        } else {
            if (c == std::istream::traits_type::eof() || c == '\n') {
                if (!field.empty() && field.back() == '\r') field.pop_back();
                fields.push_back(std::move(field));
                return true;
            }
            if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else if (c == '"' && field.empty()) {
                quoted = true;
            } else {
                field.push_back(static_cast<char>(c));
            }
        }
        c = in.get();
    }
}

inline bool csv_needs_quoting(std::string_view s) {
    return s.find_first_of(",\"\n\r") != std::string_view::npos;
}

inline void csv_write_field(std::ostream& out, std::string_view s) {
    if (!csv_needs_quoting(s)) {
        out << s;
        return;
    }
    out << '"';
    for (char c : s) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

inline void csv_write_record(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        csv_write_field(out, fields[i]);
    }
    out << '\n';
}

} // namespace swapsim
