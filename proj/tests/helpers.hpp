#pragma once

// Shared fixtures for the test suite: small hand-built datasets and a random
// dataset generator for property tests.

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "swapsim/microdata.hpp"
#include "swapsim/rng.hpp"
#include "swapsim/swap.hpp"

namespace testutil {

using namespace swapsim;

// Two nominal variables, two ordered ones; handy for most unit tests.
inline AttributeSchema small_schema() {
    AttributeSchema schema;
    schema.variables = {
        Variable{"gender", {"male", "female"}, false},
        Variable{"marital", {"never", "married", "divorced"}, false},
        Variable{"age", {"young", "mid", "old"}, true},
        Variable{"income", {"low", "mid", "high"}, true},
    };
    return schema;
}

// Uniformly random dataset: a few PUMAs, tracts dealt round-robin, household
// sizes 1..3, every attribute drawn independently. Households always land in
// a single tract by construction.
inline Dataset random_dataset(Rng& rng, std::uint32_t max_households = 40) {
    const AttributeSchema schema = small_schema();
    const std::uint32_t n_pumas = 1 + static_cast<std::uint32_t>(rng.below(3));
    const std::uint32_t tracts_per_puma = 1 + static_cast<std::uint32_t>(rng.below(4));
    const std::uint32_t households = 1 + static_cast<std::uint32_t>(rng.below(max_households));
    Dataset::Builder builder(schema);
    for (std::uint32_t h = 0; h < households; ++h) {
        const std::uint32_t puma = static_cast<std::uint32_t>(rng.below(n_pumas));
        const std::uint32_t tract = static_cast<std::uint32_t>(rng.below(tracts_per_puma));
        const std::string puma_id = "p" + std::to_string(puma);
        const std::string tract_id = puma_id + "t" + std::to_string(tract);
        const std::uint32_t size = 1 + static_cast<std::uint32_t>(rng.below(3));
        for (std::uint32_t m = 0; m < size; ++m) {
            std::vector<std::int32_t> values(schema.variables.size());
            for (std::size_t v = 0; v < values.size(); ++v)
                values[v] =
                    static_cast<std::int32_t>(rng.below(schema.variables[v].levels.size()));
            builder.add_person("h" + std::to_string(h), puma_id, tract_id, values);
        }
    }
    return builder.build();
}

// Multiset of every person's attribute tuple, optionally restricted to the
// given variable indices; the exact-conservation oracle for swap tests.
inline std::map<std::vector<std::int32_t>, std::size_t> value_multiset(
    const Dataset& ds, const std::vector<std::size_t>& vars, std::uint32_t tract = UINT32_MAX,
    std::uint32_t puma = UINT32_MAX) {
    std::map<std::vector<std::int32_t>, std::size_t> out;
    for (std::uint32_t p = 0; p < ds.person_count(); ++p) {
        if (tract != UINT32_MAX && ds.tract_of_person(p) != tract) continue;
        if (puma != UINT32_MAX && ds.puma_of_tract(ds.tract_of_person(p)) != puma) continue;
        std::vector<std::int32_t> key;
        for (const std::size_t v : vars) key.push_back(ds.value(p, v));
        ++out[key];
    }
    return out;
}

inline std::vector<std::size_t> all_variable_indices(const Dataset& ds) {
    std::vector<std::size_t> vars(ds.schema().variables.size());
    for (std::size_t i = 0; i < vars.size(); ++i) vars[i] = i;
    return vars;
}

inline std::string to_csv_string(const Dataset& ds) {
    std::ostringstream out;
    write_csv(ds, out);
    return out.str();
}

} // namespace testutil
