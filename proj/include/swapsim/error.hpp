#pragma once

#include <stdexcept>
#include <string>

namespace swapsim {

// Error taxonomy shared by all modules. Config-shaped problems and
// data-shaped problems are distinguished so callers (notably the CLI)
// can map them to different exit codes.
enum class errc {
    // csv / dataset construction
    missing_column,
    unknown_level,
    empty_dataset,
    tract_spans_pumas,
    household_spans_tracts,
    bad_format,
    // lookups
    unknown_tract,
    unknown_puma,
    unknown_household,
    missing_variable,
    same_variable,
    // tabulation / binning
    unordered_variable,
    invalid_boundaries,
    // risk / swap / sweep
    invalid_config,
    count_too_large,
    no_ones_in_table,
    insufficient_rates,
    // io
    io_error,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::missing_column: return "missing_column";
        case errc::unknown_level: return "unknown_level";
        case errc::empty_dataset: return "empty_dataset";
        case errc::tract_spans_pumas: return "tract_spans_pumas";
        case errc::household_spans_tracts: return "household_spans_tracts";
        case errc::bad_format: return "bad_format";
        case errc::unknown_tract: return "unknown_tract";
        case errc::unknown_puma: return "unknown_puma";
        case errc::unknown_household: return "unknown_household";
        case errc::missing_variable: return "missing_variable";
        case errc::same_variable: return "same_variable";
        case errc::unordered_variable: return "unordered_variable";
        case errc::invalid_boundaries: return "invalid_boundaries";
        case errc::invalid_config: return "invalid_config";
        case errc::count_too_large: return "count_too_large";
        case errc::no_ones_in_table: return "no_ones_in_table";
        case errc::insufficient_rates: return "insufficient_rates";
        case errc::io_error: return "io_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
  public:
    Error(errc code, std::string message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    errc code() const noexcept { return code_; }

    // true for errors caused by bad configuration rather than bad data;
    // a name that fails to resolve against the schema counts as config since
    // the name itself always comes from the caller
    bool is_config_error() const noexcept {
        return code_ == errc::invalid_config || code_ == errc::invalid_boundaries ||
               code_ == errc::insufficient_rates || code_ == errc::missing_variable ||
               code_ == errc::same_variable || code_ == errc::unordered_variable;
    }

  private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace swapsim
