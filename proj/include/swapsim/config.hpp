#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "swapsim/error.hpp"
#include "swapsim/microdata.hpp"
#include "swapsim/simulate.hpp"

namespace swapsim {

namespace detail {

// comma list with "" meaning the empty list (split_list would yield {""})
inline std::vector<std::string> comma_list(std::string_view s) {
    if (trim(s).empty()) return {};
    return split_list(s, ',');
}

} // namespace detail

// Flat INI-style run configuration. `[section]` headers group keys; a key is
// addressed as "section.key". `#` starts a comment, blank lines are skipped.
// Values stay strings until a typed accessor parses them, so unknown keys in
// a file are tolerated but a malformed value is reported with its key name.
class Config {
  public:
    struct Entry {
        std::string value;
        bool overridden = false; // set via an override rather than the file
    };

    Config() = default;

    static Config from_stream(std::istream& in, const std::string& origin) {
        Config cfg;
        cfg.origin_ = origin;
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string_view t = detail::trim(line);
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    raise(errc::invalid_config, origin + ":" + std::to_string(lineno) +
                                                    ": unterminated section header");
                section = std::string(detail::trim(t.substr(1, t.size() - 2)));
                if (section.empty())
                    raise(errc::invalid_config,
                          origin + ":" + std::to_string(lineno) + ": empty section name");
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string_view::npos)
                raise(errc::invalid_config, origin + ":" + std::to_string(lineno) +
                                                ": expected key = value, got '" + std::string(t) +
                                                "'");
            std::string key(detail::trim(t.substr(0, eq)));
            if (key.empty())
                raise(errc::invalid_config,
                      origin + ":" + std::to_string(lineno) + ": empty key");
            if (!section.empty()) key = section + "." + key;
            cfg.entries_[key] = Entry{std::string(detail::trim(t.substr(eq + 1))), false};
        }
        return cfg;
    }

    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) raise(errc::io_error, "cannot open config file '" + path + "'");
        return from_stream(in, path);
    }

    // "section.key=value" as given on the command line
    void apply_override(const std::string& assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos || detail::trim(assignment.substr(0, eq)).empty())
            raise(errc::invalid_config,
                  "override '" + assignment + "' is not of the form key=value");
        entries_[std::string(detail::trim(assignment.substr(0, eq)))] =
            Entry{std::string(detail::trim(assignment.substr(eq + 1))), true};
    }

    void set(const std::string& key, const std::string& value, bool overridden = true) {
        entries_[key] = Entry{value, overridden};
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    const std::string* find(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second.value;
    }

    std::string get(const std::string& key) const {
        if (const std::string* v = find(key)) return *v;
        raise(errc::invalid_config, "missing config key '" + key + "'");
    }

    std::string get_or(const std::string& key, std::string fallback) const {
        if (const std::string* v = find(key)) return *v;
        return fallback;
    }

    double get_double(const std::string& key) const { return parse_double(key, get(key)); }
    double get_double_or(const std::string& key, double fallback) const {
        const std::string* v = find(key);
        return v ? parse_double(key, *v) : fallback;
    }

    std::int64_t get_int(const std::string& key) const { return parse_int(key, get(key)); }
    std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const {
        const std::string* v = find(key);
        return v ? parse_int(key, *v) : fallback;
    }

    std::uint64_t get_uint(const std::string& key) const { return parse_uint(key, get(key)); }
    std::uint64_t get_uint_or(const std::string& key, std::uint64_t fallback) const {
        const std::string* v = find(key);
        return v ? parse_uint(key, *v) : fallback;
    }

    bool get_bool_or(const std::string& key, bool fallback) const {
        const std::string* v = find(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "yes" || *v == "1") return true;
        if (*v == "false" || *v == "no" || *v == "0") return false;
        raise(errc::invalid_config, "config key '" + key + "' wants a boolean, got '" + *v + "'");
    }

    // comma-separated list; an absent key or empty value is the empty list
    std::vector<std::string> get_list_or(const std::string& key) const {
        const std::string* v = find(key);
        if (!v) return {};
        return detail::comma_list(*v);
    }

    // either a comma list of rates or the range form lo:hi:step (inclusive)
    std::vector<double> get_rates(const std::string& key) const {
        const std::string raw = get(key);
        std::vector<double> out;
        if (raw.find(':') != std::string::npos) {
            const auto parts = detail::split_list(raw, ':');
            if (parts.size() != 3)
                raise(errc::invalid_config,
                      "config key '" + key + "' range form is lo:hi:step, got '" + raw + "'");
            const double lo = parse_double(key, parts[0]);
            const double hi = parse_double(key, parts[1]);
            const double step = parse_double(key, parts[2]);
            if (!(step > 0.0) || hi < lo)
                raise(errc::invalid_config, "config key '" + key + "' has an empty range");
            const auto count = static_cast<std::size_t>((hi - lo) / step + 1e-9);
            for (std::size_t i = 0; i <= count; ++i)
                out.push_back(lo + static_cast<double>(i) * step);
            return out;
        }
        for (const std::string& part : detail::comma_list(raw)) out.push_back(parse_double(key, part));
        return out;
    }

    // Table list: comma-separated "row:col" pairs, each axis a variable name
    // with optional bin cut points in brackets, e.g. "age[40;60]:income[10]".
    std::vector<TableSpec> get_tables(const std::string& key) const {
        std::vector<TableSpec> out;
        for (const std::string& item : get_list_or(key)) {
            const auto colon = item.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 >= item.size())
                raise(errc::invalid_config,
                      "table spec '" + item + "' in '" + key + "' is not of the form row:col");
            TableSpec spec;
            spec.row = parse_axis(key, std::string(detail::trim(item.substr(0, colon))));
            spec.col = parse_axis(key, std::string(detail::trim(item.substr(colon + 1))));
            out.push_back(std::move(spec));
        }
        return out;
    }

    const std::map<std::string, Entry>& entries() const { return entries_; }
    const std::string& origin() const { return origin_; }

    // The effective configuration, overrides folded in and marked.
    void write_resolved(std::ostream& out) const {
        std::string section;
        bool first = true;
        for (const auto& [key, entry] : entries_) {
            const auto dot = key.rfind('.');
            const std::string sec = dot == std::string::npos ? std::string() : key.substr(0, dot);
            if (sec != section || first) {
                if (!first) out << "\n";
                if (!sec.empty()) out << "[" << sec << "]\n";
                section = sec;
            }
            first = false;
            out << (dot == std::string::npos ? key : key.substr(dot + 1)) << " = " << entry.value;
            if (entry.overridden) out << "  # override";
            out << "\n";
        }
    }

  private:
    static double parse_double(const std::string& key, const std::string& value) {
        try {
            std::size_t pos = 0;
            const double x = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument(value);
            return x;
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            raise(errc::invalid_config,
                  "config key '" + key + "' wants a number, got '" + value + "'");
        }
    }

    static std::int64_t parse_int(const std::string& key, const std::string& value) {
        std::int64_t x = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
        if (ec != std::errc() || ptr != value.data() + value.size())
            raise(errc::invalid_config,
                  "config key '" + key + "' wants an integer, got '" + value + "'");
        return x;
    }

    static std::uint64_t parse_uint(const std::string& key, const std::string& value) {
        std::uint64_t x = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
        if (ec != std::errc() || ptr != value.data() + value.size())
            raise(errc::invalid_config,
                  "config key '" + key + "' wants a non-negative integer, got '" + value + "'");
        return x;
    }

    static AxisSpec parse_axis(const std::string& key, const std::string& text) {
        AxisSpec axis;
        const auto bracket = text.find('[');
        if (bracket == std::string::npos) {
            axis.variable = text;
            return axis;
        }
        if (text.back() != ']')
            raise(errc::invalid_config,
                  "axis '" + text + "' in '" + key + "' has an unterminated bin list");
        axis.variable = std::string(detail::trim(text.substr(0, bracket)));
        const std::string inner = text.substr(bracket + 1, text.size() - bracket - 2);
        for (const std::string& part : detail::split_list(inner, ';'))
            axis.boundaries.push_back(static_cast<std::size_t>(parse_uint(key, part)));
        return axis;
    }

    std::map<std::string, Entry> entries_;
    std::string origin_;
};

} // namespace swapsim
