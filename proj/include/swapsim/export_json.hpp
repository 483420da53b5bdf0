#pragma once

// JSON export lives in its own header so that the core stays stdlib-only;
// include this only where the (vendored) json library is acceptable.

#include <cmath>
#include <ostream>
#include <string>

#include <json.hpp>

#include "swapsim/risk.hpp"
#include "swapsim/simulate.hpp"
#include "swapsim/swap.hpp"
#include "swapsim/version.hpp"

namespace swapsim {

namespace detail {

inline nlohmann::json json_or_null(double x) {
    if (std::isnan(x)) return nullptr;
    return x;
}

inline nlohmann::json swap_config_json(const SwapConfig& cfg) {
    nlohmann::json j;
    j["mode"] = cfg.mode == SwapMode::Targeted ? "targeted" : "non_targeted";
    j["matching_variables"] = cfg.matching_variables;
    j["require_distinct_tracts"] = cfg.require_distinct_tracts;
    if (cfg.risk) {
        nlohmann::json r;
        r["scorer"] =
            cfg.risk->scorer == RiskScorer::LogFrequency ? "log_frequency" : "quantile_extremity";
        r["risk_variables"] = cfg.risk->risk_variables;
        r["q"] = cfg.risk->q;
        j["risk"] = r;
    } else {
        j["risk"] = nullptr;
    }
    return j;
}

} // namespace detail

// Full sweep output with the reproducibility metadata: configuration echo,
// master seed, and code version.
inline void write_sweep_json(const SweepResult& result, const SweepConfig& cfg,
                             std::ostream& out) {
    nlohmann::json j;
    j["version"] = version_string;
    j["master_seed"] = result.master_seed;

    // The config echo carries only result-determining parameters; the worker
    // count never changes a result, so recording it here would break the
    // byte-identical-output guarantee across worker counts.
    nlohmann::json config;
    config["rates"] = result.rates;
    config["replications"] = result.replications;
    config["swap"] = detail::swap_config_json(cfg.swap);
    config["tables"] = result.spec_labels;
    config["tracts"] = result.tract_ids;
    j["config"] = config;

    nlohmann::json baseline;
    for (std::size_t s = 0; s < result.spec_labels.size(); ++s) {
        nlohmann::json per_tract;
        for (std::size_t t = 0; t < result.tract_ids.size(); ++t)
            per_tract[result.tract_ids[t]] =
                detail::json_or_null(result.unswapped_v[s * result.tract_ids.size() + t]);
        baseline[result.spec_labels[s]] = {
            {"cross_tract_mean_v", detail::json_or_null(result.cross_tract_mean_v[s])},
            {"unswapped_v", per_tract},
        };
    }
    j["baseline"] = baseline;

    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t r = 0; r < result.rates.size(); ++r)
        for (std::size_t s = 0; s < result.spec_labels.size(); ++s)
            for (std::size_t t = 0; t < result.tract_ids.size(); ++t) {
                const CellStats& cell = result.cell(r, s, t);
                cells.push_back({
                    {"tract", result.tract_ids[t]},
                    {"rate", result.rates[r]},
                    {"spec", result.spec_labels[s]},
                    {"mean_v", detail::json_or_null(cell.mean_v)},
                    {"se_v", detail::json_or_null(cell.se_v)},
                    {"n_v", cell.n_v},
                    {"mean_ones_changed", detail::json_or_null(cell.mean_ones_changed)},
                    {"se_ones_changed", detail::json_or_null(cell.se_ones_changed)},
                    {"n_ones_changed", cell.n_ones_changed},
                });
            }
    j["cells"] = cells;

    out << j.dump(2) << '\n';
}

} // namespace swapsim
