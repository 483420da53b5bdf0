#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "swapsim/error.hpp"
#include "swapsim/microdata.hpp"
#include "swapsim/risk.hpp"
#include "swapsim/rng.hpp"
#include "swapsim/tabulate.hpp"

namespace swapsim {

enum class SwapMode { NonTargeted, Targeted };

struct SwapConfig {
    double rate = 0.0;                             // s, fraction of persons selected
    std::vector<std::string> matching_variables;   // S; may be empty
    SwapMode mode = SwapMode::NonTargeted;
    std::optional<RiskConfig> risk;                // Targeted only
    std::uint64_t seed = 0;
    bool require_distinct_tracts = false;

    void validate(const AttributeSchema& schema) const {
        if (!(rate >= 0.0 && rate <= 1.0))
            raise(errc::invalid_config, "swap.rate must lie in [0, 1], got " + std::to_string(rate));
        for (const auto& name : matching_variables) schema.require_variable(name);
        if (mode == SwapMode::Targeted) {
            if (!risk) raise(errc::invalid_config, "targeted swapping needs a risk configuration");
            risk->validate(schema);
        }
    }
};

struct SwapOutcome {
    Dataset dataset;
    // household indices into the dataset; each household appears at most once
    std::vector<std::pair<std::uint32_t, std::uint32_t>> swapped_household_pairs;
    double achieved_rate = 0.0;     // persons living in swapped households / n
    std::uint64_t unmatched_selected = 0;
};

// ---------------------------------------------------------------------------
// Household matching
// ---------------------------------------------------------------------------

namespace detail {

struct I32VecHash {
    std::size_t operator()(const std::vector<std::int32_t>& v) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const std::int32_t x : v) {
            h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(x));
            h *= 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

// Canonical matching key of a household: PUMA, size, and the multiset of the
// members' S-value tuples (tuples sorted lexicographically). Two households
// are swap-compatible exactly when their keys are equal, which keeps every
// tract-level table over S variables invariant under the exchange.
inline std::vector<std::int32_t> household_match_key(const Dataset& ds, std::uint32_t h,
                                                     std::span<const std::size_t> s_vars) {
    const Household& hh = ds.household(h);
    std::vector<std::int32_t> key;
    key.reserve(2 + hh.members.size() * s_vars.size());
    key.push_back(static_cast<std::int32_t>(hh.puma));
    key.push_back(static_cast<std::int32_t>(hh.size()));
    if (!s_vars.empty()) {
        std::vector<std::vector<std::int32_t>> tuples;
        tuples.reserve(hh.members.size());
        for (const std::uint32_t p : hh.members) {
            std::vector<std::int32_t> tup(s_vars.size());
            for (std::size_t i = 0; i < s_vars.size(); ++i) tup[i] = ds.value(p, s_vars[i]);
            tuples.push_back(std::move(tup));
        }
        std::sort(tuples.begin(), tuples.end());
        for (const auto& tup : tuples) key.insert(key.end(), tup.begin(), tup.end());
    }
    return key;
}

inline std::vector<std::size_t> resolve_matching_variables(const AttributeSchema& schema,
                                                           const std::vector<std::string>& names) {
    std::vector<std::size_t> vars;
    vars.reserve(names.size());
    for (const auto& name : names) vars.push_back(schema.require_variable(name));
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    return vars;
}

} // namespace detail

// Households grouped into compatibility classes; households in the same class
// agree on PUMA, size and the S multiset. Built once per (dataset, S) and
// reused across replications.
class MatchIndex {
  public:
    MatchIndex(const Dataset& ds, const std::vector<std::string>& matching_variables) {
        const auto s_vars = detail::resolve_matching_variables(ds.schema(), matching_variables);
        class_of_.resize(ds.household_count());
        std::unordered_map<std::vector<std::int32_t>, std::uint32_t, detail::I32VecHash> by_key;
        for (std::uint32_t h = 0; h < ds.household_count(); ++h) {
            auto key = detail::household_match_key(ds, h, s_vars);
            auto [it, inserted] = by_key.emplace(std::move(key), static_cast<std::uint32_t>(classes_.size()));
            if (inserted) classes_.emplace_back();
            class_of_[h] = it->second;
            classes_[it->second].push_back(h);
        }
    }

    std::uint32_t class_of(std::uint32_t household) const { return class_of_[household]; }
    const std::vector<std::uint32_t>& class_members(std::uint32_t cls) const { return classes_[cls]; }
    std::size_t class_count() const { return classes_.size(); }

  private:
    std::vector<std::uint32_t> class_of_;
    std::vector<std::vector<std::uint32_t>> classes_;
};

// All unswapped households compatible with `household`: same PUMA, same size,
// equal S multiset, excluding the household itself. Ascending household index.
inline std::vector<std::uint32_t> compatible_candidates(
    const Dataset& ds, std::uint32_t household, const std::vector<std::string>& matching_variables,
    const std::unordered_set<std::uint32_t>& swapped) {
    if (household >= ds.household_count())
        raise(errc::unknown_household, "household index " + std::to_string(household) + " out of range");
    const auto s_vars = detail::resolve_matching_variables(ds.schema(), matching_variables);
    const auto key = detail::household_match_key(ds, household, s_vars);
    std::vector<std::uint32_t> out;
    for (std::uint32_t g = 0; g < ds.household_count(); ++g) {
        if (g == household || swapped.count(g)) continue;
        if (detail::household_match_key(ds, g, s_vars) == key) out.push_back(g);
    }
    return out;
}

// ---------------------------------------------------------------------------
// The swap engine
// ---------------------------------------------------------------------------

// A computed swap without the materialized dataset; the simulation harness
// consumes plans directly to avoid copying the dataset per replication.
struct SwapPlan {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    std::vector<std::uint32_t> household_tract; // post-swap tract per household
    std::uint64_t selected = 0;                 // floor(n * rate)
    std::uint64_t unmatched_selected = 0;
    std::uint64_t persons_in_swapped = 0;
};

namespace detail {

// floor(n*s) with a tiny nudge so decimal rates hit their exact product
// (0.29 * 100 must select 29, not 28).
inline std::uint64_t selection_count(std::uint64_t n, double rate) {
    const double raw = static_cast<double>(n) * rate + 1e-9;
    const auto m = static_cast<std::uint64_t>(raw);
    return std::min(m, n);
}

} // namespace detail

// One deterministic algorithm behind both swap() and the sweep harness.
// Selected persons are visited in seeded-random order; a still-unswapped
// person's household is paired with a partner drawn uniformly from its
// compatibility class (minus itself, swapped households, and same-tract
// households when require_distinct_tracts is set), and the two households
// exchange tracts wholesale. Persons whose household finds no partner are
// counted and skipped. Pure in (ds, cfg): identical inputs give identical
// plans regardless of scheduling.
inline SwapPlan plan_swap(const Dataset& ds, const SwapConfig& cfg,
                          const MatchIndex* prebuilt_index = nullptr,
                          const ScoreSet* precomputed_scores = nullptr) {
    cfg.validate(ds.schema());
    const std::uint32_t n = ds.person_count();
    const std::uint32_t n_households = ds.household_count();

    SwapPlan plan;
    plan.household_tract.resize(n_households);
    for (std::uint32_t h = 0; h < n_households; ++h) plan.household_tract[h] = ds.household(h).tract;

    const std::uint32_t m = static_cast<std::uint32_t>(detail::selection_count(n, cfg.rate));
    plan.selected = m;
    Rng rng(cfg.seed);

    std::vector<std::uint32_t> selected;
    if (cfg.mode == SwapMode::NonTargeted) {
        selected = rng.sample_indices(n, m); // uniform sample, already in random order
    } else {
        ScoreSet local;
        const ScoreSet* scores = precomputed_scores;
        if (!scores) {
            local = score_records(ds, *cfg.risk);
            scores = &local;
        }
        selected = select_top_risk(*scores, m, cfg.seed);
        rng.shuffle(selected);
    }

    std::optional<MatchIndex> local_index;
    const MatchIndex* index = prebuilt_index;
    if (!index) {
        local_index.emplace(ds, cfg.matching_variables);
        index = &*local_index;
    }

    // per-replication pool state: class member vectors shrink as households swap
    std::vector<std::vector<std::uint32_t>> pool(index->class_count());
    std::vector<std::uint32_t> pos_in_pool(n_households);
    for (std::uint32_t c = 0; c < index->class_count(); ++c) {
        pool[c] = index->class_members(c);
        for (std::uint32_t i = 0; i < pool[c].size(); ++i) pos_in_pool[pool[c][i]] = i;
    }
    std::vector<char> swapped(n_households, 0);

    auto remove_from_pool = [&](std::uint32_t household) {
        auto& members = pool[index->class_of(household)];
        const std::uint32_t pos = pos_in_pool[household];
        members[pos] = members.back();
        pos_in_pool[members[pos]] = pos;
        members.pop_back();
    };

    constexpr int kRejectionCap = 64;
    for (const std::uint32_t person : selected) {
        const std::uint32_t h = ds.household_of(person);
        if (swapped[h]) continue;

        const auto& members = pool[index->class_of(h)];
        const std::uint32_t my_tract = plan.household_tract[h];
        auto acceptable = [&](std::uint32_t cand) {
            if (cand == h) return false;
            return !cfg.require_distinct_tracts || plan.household_tract[cand] != my_tract;
        };

        std::uint32_t partner = h;
        bool found = false;
        if (members.size() > 1) {
            for (int attempt = 0; attempt < kRejectionCap && !found; ++attempt) {
                const std::uint32_t cand = members[rng.below(members.size())];
                if (acceptable(cand)) {
                    partner = cand;
                    found = true;
                }
            }
            if (!found) {
                // nearly empty or tract-dominated pool: enumerate the valid
                // candidates and draw uniformly among them
                std::vector<std::uint32_t> valid;
                for (const std::uint32_t cand : members)
                    if (acceptable(cand)) valid.push_back(cand);
                if (!valid.empty()) {
                    partner = valid[rng.below(valid.size())];
                    found = true;
                }
            }
        }
        if (!found) {
            ++plan.unmatched_selected;
            continue;
        }

        std::swap(plan.household_tract[h], plan.household_tract[partner]);
        swapped[h] = 1;
        swapped[partner] = 1;
        remove_from_pool(h);
        remove_from_pool(partner);
        plan.pairs.emplace_back(h, partner);
        plan.persons_in_swapped += ds.household(h).size() + ds.household(partner).size();
    }
    return plan;
}

inline SwapOutcome swap(const Dataset& ds, const SwapConfig& cfg,
                        const MatchIndex* prebuilt_index = nullptr,
                        const ScoreSet* precomputed_scores = nullptr) {
    SwapPlan plan = plan_swap(ds, cfg, prebuilt_index, precomputed_scores);
    SwapOutcome out{ds.with_household_tracts(plan.household_tract), std::move(plan.pairs), 0.0,
                    plan.unmatched_selected};
    out.achieved_rate =
        static_cast<double>(plan.persons_in_swapped) / static_cast<double>(ds.person_count());
    return out;
}

// ---------------------------------------------------------------------------
// Ones protection metric
// ---------------------------------------------------------------------------

// Among cells that equal 1 in the tract's pre-swap table, the fraction whose
// post-swap count differs. Undefined (error) when the pre-swap table has no
// ones at all.
inline double ones_changed_proportion(const Dataset& before, const Dataset& after,
                                      std::string_view tract_id, std::string_view row_var,
                                      std::string_view col_var) {
    const ContingencyTable t0 = cross_tab(subset_by_tract(before, tract_id), row_var, col_var);
    const ContingencyTable t1 = cross_tab(subset_by_tract(after, tract_id), row_var, col_var);
    std::size_t ones = 0, changed = 0;
    for (std::size_t r = 0; r < t0.rows(); ++r)
        for (std::size_t c = 0; c < t0.cols(); ++c)
            if (t0.at(r, c) == 1) {
                ++ones;
                if (t1.at(r, c) != 1) ++changed;
            }
    if (ones == 0)
        raise(errc::no_ones_in_table, "tract '" + std::string(tract_id) + "' table of " +
                                          std::string(row_var) + " by " + std::string(col_var) +
                                          " has no cells equal to 1");
    return static_cast<double>(changed) / static_cast<double>(ones);
}

// ---------------------------------------------------------------------------
// Synthetic tract assignment
// ---------------------------------------------------------------------------

// Public microdata carries PUMA but no tract. This utility fabricates tract
// geography: households within each PUMA are shuffled and dealt round-robin
// into `tracts_per_puma` synthetic tracts (an approximation; real tract
// boundaries are not reconstructible from public data).
inline Dataset assign_synthetic_tracts(const Dataset& ds, std::uint32_t tracts_per_puma,
                                       std::uint64_t seed) {
    if (tracts_per_puma < 1) raise(errc::invalid_config, "tracts_per_puma must be at least 1");
    Rng rng(seed);
    std::vector<std::string> tract_of_household(ds.household_count());
    for (std::uint32_t pu = 0; pu < ds.puma_count(); ++pu) {
        std::vector<std::uint32_t> households;
        for (std::uint32_t h = 0; h < ds.household_count(); ++h)
            if (ds.household(h).puma == pu) households.push_back(h);
        rng.shuffle(households);
        const std::string prefix = ds.puma_id(pu) + "-t";
        for (std::uint32_t i = 0; i < households.size(); ++i)
            tract_of_household[households[i]] = prefix + std::to_string(i % tracts_per_puma);
    }
    Dataset::Builder builder(ds.schema());
    for (std::uint32_t p = 0; p < ds.person_count(); ++p) {
        const Household& hh = ds.household(ds.household_of(p));
        const auto values = ds.person_values(p);
        builder.add_person(hh.id, ds.puma_id(hh.puma), tract_of_household[ds.household_of(p)],
                           std::vector<std::int32_t>(values.begin(), values.end()));
    }
    return builder.build();
}

// Audit trail: one row per swapped pair with the pre-swap tracts.
inline void write_pairs_csv(const Dataset& before, const SwapOutcome& outcome, std::ostream& out) {
    out << "household_a,household_b,tract_a,tract_b,size\n";
    std::vector<std::string> record;
    for (const auto& [a, b] : outcome.swapped_household_pairs) {
        record.clear();
        record.push_back(before.household(a).id);
        record.push_back(before.household(b).id);
        record.push_back(before.tract_id(before.household(a).tract));
        record.push_back(before.tract_id(before.household(b).tract));
        record.push_back(std::to_string(before.household(a).size()));
        csv_write_record(out, record);
    }
}

} // namespace swapsim
