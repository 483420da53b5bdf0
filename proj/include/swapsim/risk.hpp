#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "swapsim/csv.hpp"
#include "swapsim/error.hpp"
#include "swapsim/microdata.hpp"
#include "swapsim/rng.hpp"
#include "swapsim/tabulate.hpp"

namespace swapsim {

enum class RiskScorer { LogFrequency, QuantileExtremity };

struct RiskConfig {
    RiskScorer scorer = RiskScorer::LogFrequency;
    std::vector<std::string> risk_variables;
    double q = 0.1; // quantile threshold, QuantileExtremity only

    void validate(const AttributeSchema& schema) const {
        if (risk_variables.empty())
            raise(errc::invalid_config, "risk.variables must name at least one variable");
        for (const auto& name : risk_variables) {
            const std::size_t vi = schema.require_variable(name);
            if (scorer == RiskScorer::QuantileExtremity && !schema.variables[vi].ordered)
                raise(errc::unordered_variable,
                      "quantile extremity needs ordered levels, but '" + name + "' is nominal");
        }
        if (scorer == RiskScorer::QuantileExtremity && !(q > 0.0 && q < 0.5))
            raise(errc::invalid_config, "risk.q must lie in (0, 0.5)");
    }
};

// Per-person disclosure risk scores, indexed by person. Lower means more at
// risk for both scorers.
struct ScoreSet {
    std::vector<double> scores;

    std::uint32_t person_count() const { return static_cast<std::uint32_t>(scores.size()); }
};

struct RiskScore {
    std::uint32_t person_id = 0;
    double score = 0.0;
    std::uint32_t rank = 0; // 1-based, ascending score, person id breaks ties
};

// Sum over the risk variables of log(relative frequency of the person's
// level), frequencies taken over the whole dataset.
inline ScoreSet log_frequency_score(const Dataset& ds, const RiskConfig& cfg) {
    cfg.validate(ds.schema());
    const double n = static_cast<double>(ds.person_count());
    std::vector<std::size_t> vars;
    for (const auto& name : cfg.risk_variables) vars.push_back(ds.schema().require_variable(name));

    std::vector<std::vector<std::int64_t>> level_counts(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i)
        level_counts[i].assign(ds.schema().variables[vars[i]].levels.size(), 0);
    for (std::uint32_t p = 0; p < ds.person_count(); ++p)
        for (std::size_t i = 0; i < vars.size(); ++i)
            ++level_counts[i][static_cast<std::size_t>(ds.value(p, vars[i]))];

    ScoreSet out;
    out.scores.resize(ds.person_count());
    for (std::uint32_t p = 0; p < ds.person_count(); ++p) {
        double s = 0.0;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            const auto count = level_counts[i][static_cast<std::size_t>(ds.value(p, vars[i]))];
            s += std::log(static_cast<double>(count) / n);
        }
        out.scores[p] = s;
    }
    return out;
}

// Negated count of risk variables on which the person is extreme. A value is
// extreme when it lies strictly below the floor(q*n)+1-th order statistic or
// strictly above the (n - floor(q*n))-th, so for q below 1/n nothing is
// flagged and ties at the cut are never flagged.
inline ScoreSet quantile_extremity_score(const Dataset& ds, const RiskConfig& cfg) {
    cfg.validate(ds.schema());
    const std::uint32_t n = ds.person_count();
    const std::uint32_t tail = static_cast<std::uint32_t>(std::floor(cfg.q * static_cast<double>(n)));

    ScoreSet out;
    out.scores.assign(n, 0.0);
    std::vector<std::int32_t> sorted(n);
    for (const auto& name : cfg.risk_variables) {
        const std::size_t vi = ds.schema().require_variable(name);
        for (std::uint32_t p = 0; p < n; ++p) sorted[p] = ds.value(p, vi);
        std::sort(sorted.begin(), sorted.end());
        const std::int32_t low_cut = sorted[tail];
        const std::int32_t high_cut = sorted[n - 1 - tail];
        for (std::uint32_t p = 0; p < n; ++p) {
            const std::int32_t v = ds.value(p, vi);
            if (v < low_cut || v > high_cut) out.scores[p] -= 1.0;
        }
    }
    return out;
}

inline ScoreSet score_records(const Dataset& ds, const RiskConfig& cfg) {
    return cfg.scorer == RiskScorer::LogFrequency ? log_frequency_score(ds, cfg)
                                                  : quantile_extremity_score(ds, cfg);
}

// The m lowest-scoring persons, returned in ascending risk order. Ties are
// broken by a per-person key drawn from the seed, so repeated simulations do
// not systematically favour record order at the cutoff.
inline std::vector<std::uint32_t> select_top_risk(const ScoreSet& scores, std::uint32_t m,
                                                  std::uint64_t seed) {
    const std::uint32_t n = scores.person_count();
    if (m > n)
        raise(errc::count_too_large,
              "asked for " + std::to_string(m) + " of " + std::to_string(n) + " persons");
    std::vector<std::uint32_t> order(n);
    for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (scores.scores[a] != scores.scores[b]) return scores.scores[a] < scores.scores[b];
        const std::uint64_t ka = mix64(hash_combine(seed, a));
        const std::uint64_t kb = mix64(hash_combine(seed, b));
        if (ka != kb) return ka < kb;
        return a < b;
    });
    order.resize(m);
    return order;
}

// Scores with reporting ranks (1-based, ascending score; person id breaks ties).
inline std::vector<RiskScore> ranked_scores(const ScoreSet& scores) {
    const std::uint32_t n = scores.person_count();
    std::vector<std::uint32_t> order(n);
    for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (scores.scores[a] != scores.scores[b]) return scores.scores[a] < scores.scores[b];
        return a < b;
    });
    std::vector<RiskScore> out(n);
    for (std::uint32_t r = 0; r < n; ++r)
        out[r] = RiskScore{order[r], scores.scores[order[r]], r + 1};
    return out;
}

inline void write_scores_csv(const ScoreSet& scores, std::ostream& out) {
    out << "person_id,score,rank\n";
    for (const auto& rs : ranked_scores(scores))
        out << rs.person_id << ',' << detail::format_double(rs.score) << ',' << rs.rank << '\n';
}

// ---------------------------------------------------------------------------
// At-risk cells
// ---------------------------------------------------------------------------

struct AtRiskCell {
    std::size_t row = 0;
    std::size_t col = 0;
    std::int64_t count = 0;

    bool operator==(const AtRiskCell&) const = default;
};

// Cells whose count falls in `thresholds` (the ones and twos of a published
// table), scanned row-major.
inline std::vector<AtRiskCell> find_at_risk_cells(const ContingencyTable& t,
                                                  const std::set<std::int64_t>& thresholds = {1, 2}) {
    std::vector<AtRiskCell> out;
    for (std::size_t r = 0; r < t.rows(); ++r)
        for (std::size_t c = 0; c < t.cols(); ++c)
            if (thresholds.count(t.at(r, c))) out.push_back(AtRiskCell{r, c, t.at(r, c)});
    return out;
}

} // namespace swapsim
