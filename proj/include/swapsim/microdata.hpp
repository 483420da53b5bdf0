#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "swapsim/csv.hpp"
#include "swapsim/error.hpp"

namespace swapsim {

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

// A categorical variable: its name and the ordered list of level labels.
// `ordered` marks variables whose level order is meaningful (needed for
// quantile-based scoring and binning).
struct Variable {
    std::string name;
    std::vector<std::string> levels;
    bool ordered = false;

    bool operator==(const Variable&) const = default;
};

struct AttributeSchema {
    std::vector<Variable> variables;
    std::string household_column = "household";
    std::string puma_column = "puma";
    std::string tract_column = "tract";

    bool operator==(const AttributeSchema&) const = default;

    std::size_t variable_count() const { return variables.size(); }

    std::optional<std::size_t> find_variable(std::string_view name) const {
        for (std::size_t i = 0; i < variables.size(); ++i)
            if (variables[i].name == name) return i;
        return std::nullopt;
    }

    std::size_t require_variable(std::string_view name) const {
        if (auto i = find_variable(name)) return *i;
        raise(errc::missing_variable, "no variable named '" + std::string(name) + "'");
    }

    std::optional<std::int32_t> find_level(std::size_t var, std::string_view label) const {
        const auto& lv = variables[var].levels;
        for (std::size_t i = 0; i < lv.size(); ++i)
            if (lv[i] == label) return static_cast<std::int32_t>(i);
        return std::nullopt;
    }

    void validate() const {
        if (household_column.empty() || puma_column.empty() || tract_column.empty())
            raise(errc::invalid_config, "schema geography column names must be non-empty");
        if (puma_column == tract_column || puma_column == household_column ||
            tract_column == household_column)
            raise(errc::invalid_config, "schema geography column names must be distinct");
        for (const auto& v : variables) {
            if (v.name.empty()) raise(errc::invalid_config, "variable with empty name");
            if (v.name.find_first_of(",:;[]\"\n\r") != std::string::npos)
                raise(errc::invalid_config,
                      "variable name '" + v.name + "' contains a reserved character");
            if (v.name == household_column || v.name == puma_column || v.name == tract_column)
                raise(errc::invalid_config,
                      "variable '" + v.name + "' collides with a geography column");
            if (v.levels.size() < 2)
                raise(errc::invalid_config, "variable '" + v.name + "' needs at least 2 levels");
            for (const auto& l : v.levels) {
                if (l.empty())
                    raise(errc::invalid_config, "variable '" + v.name + "' has an empty level");
                if (l.find_first_of(",\"\n\r") != std::string::npos)
                    raise(errc::invalid_config, "level '" + l + "' of variable '" + v.name +
                                                    "' contains a reserved character");
            }
            for (std::size_t i = 0; i < v.levels.size(); ++i)
                for (std::size_t j = i + 1; j < v.levels.size(); ++j)
                    if (v.levels[i] == v.levels[j])
                        raise(errc::invalid_config,
                              "duplicate level '" + v.levels[i] + "' in variable '" + v.name + "'");
        }
        for (std::size_t i = 0; i < variables.size(); ++i)
            for (std::size_t j = i + 1; j < variables.size(); ++j)
                if (variables[i].name == variables[j].name)
                    raise(errc::invalid_config, "duplicate variable name '" + variables[i].name + "'");
    }
};

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

// A household is the atomic unit of swapping: members always stay together
// and only the geography (tract) is ever exchanged.
struct Household {
    std::string id;
    std::uint32_t puma = 0;
    std::uint32_t tract = 0;
    std::vector<std::uint32_t> members;

    std::uint32_t size() const { return static_cast<std::uint32_t>(members.size()); }

    bool operator==(const Household&) const = default;
};

// Immutable microdata: persons hold dense level indices against the schema;
// geography lives on households. Safe to share across threads after
// construction; "mutation" happens by building modified copies.
class Dataset {
  public:
    class Builder;

    const AttributeSchema& schema() const { return schema_; }

    std::uint32_t person_count() const { return static_cast<std::uint32_t>(person_household_.size()); }
    std::uint32_t household_count() const { return static_cast<std::uint32_t>(households_.size()); }
    std::uint32_t puma_count() const { return static_cast<std::uint32_t>(puma_ids_.size()); }
    std::uint32_t tract_count() const { return static_cast<std::uint32_t>(tract_ids_.size()); }

    std::int32_t value(std::uint32_t person, std::size_t var) const {
        return values_[static_cast<std::size_t>(person) * schema_.variable_count() + var];
    }

    std::span<const std::int32_t> person_values(std::uint32_t person) const {
        const std::size_t w = schema_.variable_count();
        return {values_.data() + static_cast<std::size_t>(person) * w, w};
    }

    std::uint32_t household_of(std::uint32_t person) const { return person_household_[person]; }

    const Household& household(std::uint32_t h) const { return households_[h]; }

    std::uint32_t tract_of_person(std::uint32_t person) const {
        return households_[person_household_[person]].tract;
    }

    const std::string& puma_id(std::uint32_t p) const { return puma_ids_[p]; }
    const std::string& tract_id(std::uint32_t t) const { return tract_ids_[t]; }
    std::uint32_t puma_of_tract(std::uint32_t t) const { return tract_puma_[t]; }

    std::optional<std::uint32_t> find_puma(std::string_view id) const {
        for (std::uint32_t i = 0; i < puma_ids_.size(); ++i)
            if (puma_ids_[i] == id) return i;
        return std::nullopt;
    }

    std::optional<std::uint32_t> find_tract(std::string_view id) const {
        for (std::uint32_t i = 0; i < tract_ids_.size(); ++i)
            if (tract_ids_[i] == id) return i;
        return std::nullopt;
    }

    std::optional<std::uint32_t> find_household(std::string_view id) const {
        auto it = household_by_id_.find(std::string(id));
        if (it == household_by_id_.end()) return std::nullopt;
        return it->second;
    }

    // Copy with households reassigned to new tracts. Each new tract must lie
    // in the household's current PUMA; swapping never moves across PUMAs.
    Dataset with_household_tracts(std::span<const std::uint32_t> tract_per_household) const {
        if (tract_per_household.size() != households_.size())
            raise(errc::invalid_config, "tract assignment size mismatch");
        Dataset out = *this;
        for (std::size_t h = 0; h < households_.size(); ++h) {
            const std::uint32_t t = tract_per_household[h];
            if (t >= tract_ids_.size())
                raise(errc::unknown_tract, "tract index out of range");
            if (tract_puma_[t] != households_[h].puma)
                raise(errc::invalid_config,
                      "household '" + households_[h].id + "' cannot move to another PUMA");
            out.households_[h].tract = t;
        }
        return out;
    }

    // Copy with one variable's schema entry and every person's value replaced.
    // Used by binning; remap[i] is the new level index of old level i.
    Dataset with_variable_recoded(std::size_t var, Variable replacement,
                                  std::span<const std::int32_t> remap) const {
        if (var >= schema_.variable_count())
            raise(errc::missing_variable, "variable index out of range");
        Dataset out = *this;
        out.schema_.variables[var] = std::move(replacement);
        out.schema_.validate();
        const std::size_t w = schema_.variable_count();
        const std::size_t levels = out.schema_.variables[var].levels.size();
        for (std::size_t p = 0; p < person_household_.size(); ++p) {
            const std::int32_t old = values_[p * w + var];
            if (old < 0 || static_cast<std::size_t>(old) >= remap.size())
                raise(errc::bad_format, "value out of range while recoding");
            const std::int32_t fresh = remap[static_cast<std::size_t>(old)];
            if (fresh < 0 || static_cast<std::size_t>(fresh) >= levels)
                raise(errc::bad_format, "recode target out of range");
            out.values_[p * w + var] = fresh;
        }
        return out;
    }

    bool operator==(const Dataset& other) const {
        return schema_ == other.schema_ && values_ == other.values_ &&
               person_household_ == other.person_household_ && households_ == other.households_ &&
               puma_ids_ == other.puma_ids_ && tract_ids_ == other.tract_ids_ &&
               tract_puma_ == other.tract_puma_;
    }

  private:
    friend class Builder;

    AttributeSchema schema_;
    std::vector<std::int32_t> values_;            // person-major, one entry per variable
    std::vector<std::uint32_t> person_household_; // person -> household index
    std::vector<Household> households_;
    std::vector<std::string> puma_ids_;
    std::vector<std::string> tract_ids_;
    std::vector<std::uint32_t> tract_puma_; // tract index -> puma index
    std::unordered_map<std::string, std::uint32_t> household_by_id_;
};

class Dataset::Builder {
  public:
    explicit Builder(AttributeSchema schema) : ds_() {
        schema.validate();
        ds_.schema_ = std::move(schema);
    }

    // Rows arrive person by person; households are assembled by grouping on
    // the household id, and geography ids are interned on first sight.
    void add_person(const std::string& household_id, const std::string& puma_id,
                    const std::string& tract_id, std::span<const std::int32_t> values) {
        const std::size_t w = ds_.schema_.variable_count();
        if (values.size() != w)
            raise(errc::bad_format, "expected " + std::to_string(w) + " attribute values, got " +
                                        std::to_string(values.size()));
        for (std::size_t v = 0; v < w; ++v) {
            if (values[v] < 0 ||
                static_cast<std::size_t>(values[v]) >= ds_.schema_.variables[v].levels.size())
                raise(errc::unknown_level, "level index out of range for variable '" +
                                               ds_.schema_.variables[v].name + "'");
        }

        const std::uint32_t puma = intern(ds_.puma_ids_, puma_index_, puma_id);
        const std::uint32_t tract = intern(ds_.tract_ids_, tract_index_, tract_id);
        if (tract >= ds_.tract_puma_.size()) {
            ds_.tract_puma_.resize(tract + 1, puma);
        } else if (ds_.tract_puma_[tract] != puma) {
            raise(errc::tract_spans_pumas, "tract '" + tract_id + "' appears in PUMA '" +
                                               ds_.puma_ids_[ds_.tract_puma_[tract]] +
                                               "' and PUMA '" + puma_id + "'");
        }

        std::uint32_t h;
        auto it = ds_.household_by_id_.find(household_id);
        if (it == ds_.household_by_id_.end()) {
            h = static_cast<std::uint32_t>(ds_.households_.size());
            ds_.household_by_id_.emplace(household_id, h);
            ds_.households_.push_back(Household{household_id, puma, tract, {}});
        } else {
            h = it->second;
            if (ds_.households_[h].tract != tract || ds_.households_[h].puma != puma)
                raise(errc::household_spans_tracts,
                      "household '" + household_id + "' appears in more than one tract");
        }

        const std::uint32_t person = static_cast<std::uint32_t>(ds_.person_household_.size());
        ds_.person_household_.push_back(h);
        ds_.households_[h].members.push_back(person);
        ds_.values_.insert(ds_.values_.end(), values.begin(), values.end());
    }

    Dataset build() {
        if (ds_.person_household_.empty()) raise(errc::empty_dataset, "no person records");
        return std::move(ds_);
    }

  private:
    static std::uint32_t intern(std::vector<std::string>& ids,
                                std::unordered_map<std::string, std::uint32_t>& index,
                                const std::string& id) {
        auto it = index.find(id);
        if (it != index.end()) return it->second;
        const std::uint32_t i = static_cast<std::uint32_t>(ids.size());
        ids.push_back(id);
        index.emplace(id, i);
        return i;
    }

    Dataset ds_;
    std::unordered_map<std::string, std::uint32_t> puma_index_;
    std::unordered_map<std::string, std::uint32_t> tract_index_;
};

// ---------------------------------------------------------------------------
// Views
// ---------------------------------------------------------------------------

// A non-owning subset of a dataset's persons (the dataset must outlive it).
struct DatasetView {
    const Dataset* dataset = nullptr;
    std::vector<std::uint32_t> persons;

    std::uint32_t size() const { return static_cast<std::uint32_t>(persons.size()); }
    const AttributeSchema& schema() const { return dataset->schema(); }
};

inline DatasetView all_persons(const Dataset& ds) {
    DatasetView v{&ds, {}};
    v.persons.resize(ds.person_count());
    for (std::uint32_t p = 0; p < ds.person_count(); ++p) v.persons[p] = p;
    return v;
}

inline DatasetView subset_by_tract(const Dataset& ds, std::string_view tract_id) {
    const auto t = ds.find_tract(tract_id);
    if (!t) raise(errc::unknown_tract, "no tract named '" + std::string(tract_id) + "'");
    DatasetView v{&ds, {}};
    for (std::uint32_t p = 0; p < ds.person_count(); ++p)
        if (ds.tract_of_person(p) == *t) v.persons.push_back(p);
    return v;
}

inline DatasetView subset_by_puma(const Dataset& ds, std::string_view puma_id) {
    const auto pu = ds.find_puma(puma_id);
    if (!pu) raise(errc::unknown_puma, "no PUMA named '" + std::string(puma_id) + "'");
    DatasetView v{&ds, {}};
    for (std::uint32_t p = 0; p < ds.person_count(); ++p)
        if (ds.household(ds.household_of(p)).puma == *pu) v.persons.push_back(p);
    return v;
}

// ---------------------------------------------------------------------------
// CSV ingestion / export
// ---------------------------------------------------------------------------

inline Dataset load_csv(std::istream& in, const AttributeSchema& schema) {
    schema.validate();
    std::vector<std::string> header;
    if (!csv_read_record(in, header)) raise(errc::empty_dataset, "input has no header row");

    auto column_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        raise(errc::missing_column, "required column '" + name + "' not in header");
    };

    const std::size_t hh_col = column_of(schema.household_column);
    const std::size_t puma_col = column_of(schema.puma_column);
    const std::size_t tract_col = column_of(schema.tract_column);
    std::vector<std::size_t> var_cols;
    var_cols.reserve(schema.variable_count());
    for (const auto& v : schema.variables) var_cols.push_back(column_of(v.name));

    // label -> level index maps, one per variable
    std::vector<std::unordered_map<std::string, std::int32_t>> level_of(schema.variable_count());
    for (std::size_t v = 0; v < schema.variable_count(); ++v)
        for (std::size_t l = 0; l < schema.variables[v].levels.size(); ++l)
            level_of[v].emplace(schema.variables[v].levels[l], static_cast<std::int32_t>(l));

    Dataset::Builder builder(schema);
    std::vector<std::string> row;
    std::vector<std::int32_t> values(schema.variable_count());
    std::size_t row_number = 1; // header was row 1
    std::size_t body_rows = 0;
    while (csv_read_record(in, row)) {
        ++row_number;
        if (row.size() == 1 && row[0].empty()) continue; // stray blank line
        if (row.size() != header.size())
            raise(errc::bad_format, "row " + std::to_string(row_number) + " has " +
                                        std::to_string(row.size()) + " fields, header has " +
                                        std::to_string(header.size()));
        for (std::size_t v = 0; v < schema.variable_count(); ++v) {
            const std::string& label = row[var_cols[v]];
            auto it = level_of[v].find(label);
            if (it == level_of[v].end())
                raise(errc::unknown_level, "row " + std::to_string(row_number) + ", column '" +
                                               schema.variables[v].name + "': unknown level '" +
                                               label + "'");
            values[v] = it->second;
        }
        builder.add_person(row[hh_col], row[puma_col], row[tract_col], values);
        ++body_rows;
    }
    if (body_rows == 0) raise(errc::empty_dataset, "CSV has a header but no data rows");
    return builder.build();
}

inline Dataset load_csv(const std::filesystem::path& path, const AttributeSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::io_error, "cannot open '" + path.string() + "'");
    return load_csv(in, schema);
}

inline void write_csv(const Dataset& ds, std::ostream& out) {
    const auto& schema = ds.schema();
    std::vector<std::string> row;
    row.push_back(schema.household_column);
    row.push_back(schema.puma_column);
    row.push_back(schema.tract_column);
    for (const auto& v : schema.variables) row.push_back(v.name);
    csv_write_record(out, row);

    for (std::uint32_t p = 0; p < ds.person_count(); ++p) {
        const Household& hh = ds.household(ds.household_of(p));
        row.clear();
        row.push_back(hh.id);
        row.push_back(ds.puma_id(hh.puma));
        row.push_back(ds.tract_id(hh.tract));
        const auto values = ds.person_values(p);
        for (std::size_t v = 0; v < schema.variable_count(); ++v)
            row.push_back(schema.variables[v].levels[static_cast<std::size_t>(values[v])]);
        csv_write_record(out, row);
    }
}

inline void write_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(errc::io_error, "cannot write '" + path.string() + "'");
    write_csv(ds, out);
}

// ---------------------------------------------------------------------------
// Schema file (key-value text)
// ---------------------------------------------------------------------------

namespace detail {
inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split_list(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}
} // namespace detail

// Format, one entry per line:
//   schema_version = 1
//   household_column = household
//   puma_column = puma
//   tract_column = tract
//   variable = <name> : <ordered|nominal> : <level>, <level>, ...
// Variable order in the file is the schema order.
inline AttributeSchema load_schema(std::istream& in) {
    AttributeSchema schema;
    schema.variables.clear();
    bool saw_household = false, saw_puma = false, saw_tract = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view stripped = detail::trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string_view::npos)
            raise(errc::bad_format, "schema line " + std::to_string(line_no) + ": expected key = value");
        const std::string key{detail::trim(stripped.substr(0, eq))};
        const std::string_view value = detail::trim(stripped.substr(eq + 1));
        if (key == "schema_version") {
            if (value != "1")
                raise(errc::bad_format, "unsupported schema_version '" + std::string(value) + "'");
        } else if (key == "household_column") {
            schema.household_column = std::string(value);
            saw_household = true;
        } else if (key == "puma_column") {
            schema.puma_column = std::string(value);
            saw_puma = true;
        } else if (key == "tract_column") {
            schema.tract_column = std::string(value);
            saw_tract = true;
        } else if (key == "variable") {
            const auto c1 = value.find(':');
            if (c1 == std::string_view::npos)
                raise(errc::bad_format,
                      "schema line " + std::to_string(line_no) + ": variable needs 'name : kind : levels'");
            const auto c2 = value.find(':', c1 + 1);
            if (c2 == std::string_view::npos)
                raise(errc::bad_format,
                      "schema line " + std::to_string(line_no) + ": variable needs 'name : kind : levels'");
            Variable var;
            var.name = std::string(detail::trim(value.substr(0, c1)));
            const std::string kind{detail::trim(value.substr(c1 + 1, c2 - c1 - 1))};
            if (kind == "ordered")
                var.ordered = true;
            else if (kind == "nominal")
                var.ordered = false;
            else
                raise(errc::bad_format, "schema line " + std::to_string(line_no) +
                                            ": variable kind must be 'ordered' or 'nominal'");
            var.levels = detail::split_list(value.substr(c2 + 1), ',');
            schema.variables.push_back(std::move(var));
        } else {
            raise(errc::bad_format, "schema line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    if (!saw_household || !saw_puma || !saw_tract)
        raise(errc::bad_format, "schema file must set household_column, puma_column and tract_column");
    schema.validate();
    return schema;
}

inline AttributeSchema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::io_error, "cannot open '" + path.string() + "'");
    return load_schema(in);
}

inline void save_schema(const AttributeSchema& schema, std::ostream& out) {
    out << "schema_version = 1\n";
    out << "household_column = " << schema.household_column << '\n';
    out << "puma_column = " << schema.puma_column << '\n';
    out << "tract_column = " << schema.tract_column << '\n';
    for (const auto& v : schema.variables) {
        out << "variable = " << v.name << " : " << (v.ordered ? "ordered" : "nominal") << " : ";
        for (std::size_t i = 0; i < v.levels.size(); ++i) {
            if (i) out << ", ";
            out << v.levels[i];
        }
        out << '\n';
    }
}

inline void save_schema(const AttributeSchema& schema, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(errc::io_error, "cannot write '" + path.string() + "'");
    save_schema(schema, out);
}

} // namespace swapsim
