#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "swapsim/csv.hpp"
#include "swapsim/error.hpp"
#include "swapsim/microdata.hpp"

namespace swapsim {

// ---------------------------------------------------------------------------
// Contingency tables
// ---------------------------------------------------------------------------

struct ContingencyTable {
    std::string row_variable;
    std::string col_variable;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::int64_t> counts; // row-major, rows() x cols()
    std::int64_t n = 0;

    std::size_t rows() const { return row_labels.size(); }
    std::size_t cols() const { return col_labels.size(); }

    std::int64_t at(std::size_t r, std::size_t c) const { return counts[r * cols() + c]; }
    std::int64_t& at(std::size_t r, std::size_t c) { return counts[r * cols() + c]; }

    bool operator==(const ContingencyTable&) const = default;
};

inline ContingencyTable cross_tab(const DatasetView& view, std::string_view row_var,
                                  std::string_view col_var) {
    const AttributeSchema& schema = view.schema();
    const std::size_t rv = schema.require_variable(row_var);
    const std::size_t cv = schema.require_variable(col_var);
    if (rv == cv) raise(errc::same_variable, "cannot cross-tabulate '" + std::string(row_var) +
                                                 "' against itself");

    ContingencyTable t;
    t.row_variable = schema.variables[rv].name;
    t.col_variable = schema.variables[cv].name;
    t.row_labels = schema.variables[rv].levels;
    t.col_labels = schema.variables[cv].levels;
    t.counts.assign(t.rows() * t.cols(), 0);
    const Dataset& ds = *view.dataset;
    for (const std::uint32_t p : view.persons) {
        const auto r = static_cast<std::size_t>(ds.value(p, rv));
        const auto c = static_cast<std::size_t>(ds.value(p, cv));
        ++t.counts[r * t.cols() + c];
    }
    t.n = static_cast<std::int64_t>(view.persons.size());
    return t;
}

// Table as CSV with level labels on the header row and first column.
inline void write_table_csv(const ContingencyTable& t, std::ostream& out) {
    std::vector<std::string> record;
    record.push_back(t.row_variable + "\\" + t.col_variable);
    for (const auto& c : t.col_labels) record.push_back(c);
    csv_write_record(out, record);
    for (std::size_t r = 0; r < t.rows(); ++r) {
        record.clear();
        record.push_back(t.row_labels[r]);
        for (std::size_t c = 0; c < t.cols(); ++c) record.push_back(std::to_string(t.at(r, c)));
        csv_write_record(out, record);
    }
}

// ---------------------------------------------------------------------------
// Chi-square and Cramér's V
// ---------------------------------------------------------------------------

// `v` is empty for degenerate tables (n == 0, or fewer than two non-empty rows
// or columns after zero-margin removal); callers exclude those rather than
// treating them as zero association.
struct AssociationResult {
    double chi_square = 0.0;
    std::optional<double> v;
    std::size_t effective_rows = 0;
    std::size_t effective_cols = 0;

    bool defined() const { return v.has_value(); }
};

// Zero-margin rows and columns are dropped before computing expected counts;
// chi_square is over the remaining cells. V = sqrt((chi^2/n)/min(k-1, r-1))
// on the effective dimensions. Takes raw row-major counts so the simulation
// harness can call it without building a ContingencyTable.
inline AssociationResult cramers_v_counts(std::span<const std::int64_t> counts, std::size_t rows,
                                          std::size_t cols) {
    AssociationResult out;
    std::vector<std::int64_t> row_sum(rows, 0), col_sum(cols, 0);
    std::int64_t total = 0;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const std::int64_t x = counts[r * cols + c];
            row_sum[r] += x;
            col_sum[c] += x;
            total += x;
        }
    if (total == 0) return out;

    std::vector<std::size_t> keep_rows, keep_cols;
    for (std::size_t r = 0; r < rows; ++r)
        if (row_sum[r] > 0) keep_rows.push_back(r);
    for (std::size_t c = 0; c < cols; ++c)
        if (col_sum[c] > 0) keep_cols.push_back(c);

    out.effective_rows = keep_rows.size();
    out.effective_cols = keep_cols.size();

    const double n = static_cast<double>(total);
    double chi = 0.0;
    for (const std::size_t r : keep_rows)
        for (const std::size_t c : keep_cols) {
            const double expected =
                static_cast<double>(row_sum[r]) * static_cast<double>(col_sum[c]) / n;
            const double diff = static_cast<double>(counts[r * cols + c]) - expected;
            chi += diff * diff / expected;
        }
    out.chi_square = chi;

    const std::size_t k = std::min(out.effective_rows, out.effective_cols);
    if (k <= 1) return out; // V undefined, chi_square still reported
    out.v = std::sqrt((chi / n) / static_cast<double>(k - 1));
    return out;
}

inline AssociationResult cramers_v(const ContingencyTable& t) {
    return cramers_v_counts(t.counts, t.rows(), t.cols());
}

// ---------------------------------------------------------------------------
// Binning
// ---------------------------------------------------------------------------

namespace detail {

// Coarsened copy of an ordered variable plus the old-level -> bin remap.
// Boundaries are level-index cut points: bin 0 covers levels [0, b1), bin 1
// covers [b1, b2), and so on. Each bin spans at least one source level,
// though it may hold zero records.
inline std::pair<Variable, std::vector<std::int32_t>> make_bins(
    const Variable& source, const std::vector<std::size_t>& boundaries) {
    if (!source.ordered)
        raise(errc::unordered_variable, "variable '" + source.name + "' has no level order to bin");
    if (boundaries.empty()) raise(errc::invalid_boundaries, "need at least one cut point");
    const std::size_t levels = source.levels.size();
    for (std::size_t i = 0; i < boundaries.size(); ++i) {
        if (boundaries[i] == 0 || boundaries[i] >= levels)
            raise(errc::invalid_boundaries, "cut point " + std::to_string(boundaries[i]) +
                                                " outside (0, " + std::to_string(levels) + ")");
        if (i > 0 && boundaries[i] <= boundaries[i - 1])
            raise(errc::invalid_boundaries, "cut points must be strictly increasing");
    }

    Variable binned;
    binned.name = source.name;
    binned.ordered = true;
    std::vector<std::int32_t> remap(levels);
    std::size_t start = 0;
    for (std::size_t bin = 0; bin <= boundaries.size(); ++bin) {
        const std::size_t end = bin < boundaries.size() ? boundaries[bin] : levels;
        const std::string label = (end - start == 1)
                                      ? source.levels[start]
                                      : source.levels[start] + ".." + source.levels[end - 1];
        binned.levels.push_back(label);
        for (std::size_t l = start; l < end; ++l) remap[l] = static_cast<std::int32_t>(bin);
        start = end;
    }
    return {std::move(binned), std::move(remap)};
}

} // namespace detail

// Replaces an ordered variable by a coarser one (see detail::make_bins for
// the boundary convention). All records are remapped.
inline Dataset bin_variable(const Dataset& ds, std::string_view var,
                            const std::vector<std::size_t>& boundaries) {
    const AttributeSchema& schema = ds.schema();
    const std::size_t vi = schema.require_variable(var);
    auto [binned, remap] = detail::make_bins(schema.variables[vi], boundaries);
    return ds.with_variable_recoded(vi, std::move(binned), remap);
}

} // namespace swapsim
