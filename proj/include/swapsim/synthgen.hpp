#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "swapsim/error.hpp"
#include "swapsim/microdata.hpp"
#include "swapsim/rng.hpp"
#include "swapsim/tabulate.hpp"

namespace swapsim {

// Dummy microdata with a geography-dependent age-income relationship: per
// tract a slope b is drawn once and each person gets
//   income = round(b * age) + PoissonNoise.
// Binary poor/young variables are then cut at dataset-wide empirical
// quantiles. Defaults are calibrated so that most tracts show a weaker
// poor-by-young association than the combined table; the share sits near 0.55
// (see combined_vs_tract_v_share). The calibration wants the poor cut inside
// the young age range for every slope, which caps the slope ratio near 1.8
// and favors small noise.
struct DummyConfig {
    std::uint32_t n_tracts = 50;
    std::uint32_t persons_per_tract = 200;
    double slope_low = 1.0;  // b ~ Uniform(slope_low, slope_high), per tract
    double slope_high = 1.8;
    std::int32_t age_min = 0; // age ~ discrete Uniform{age_min..age_max}
    std::int32_t age_max = 79;
    double noise_mean = 2.0;     // Poisson mean of the income noise
    double poor_quantile = 0.235;
    double young_quantile = 0.327;
    std::uint64_t seed = 1729;

    void validate() const {
        if (n_tracts < 1) raise(errc::invalid_config, "generate.n_tracts must be at least 1");
        if (persons_per_tract < 1)
            raise(errc::invalid_config, "generate.persons_per_tract must be at least 1");
        if (!(slope_low < slope_high))
            raise(errc::invalid_config, "generate.slope_low must be below generate.slope_high");
        if (age_min < 0) raise(errc::invalid_config, "generate.age_min must not be negative");
        if (age_min >= age_max)
            raise(errc::invalid_config, "generate.age_min must be below generate.age_max");
        if (!(noise_mean > 0.0)) raise(errc::invalid_config, "generate.noise_mean must be positive");
        if (!(poor_quantile > 0.0 && poor_quantile < 1.0))
            raise(errc::invalid_config, "generate.poor_quantile must lie in (0, 1)");
        if (!(young_quantile > 0.0 && young_quantile < 1.0))
            raise(errc::invalid_config, "generate.young_quantile must lie in (0, 1)");
    }
};

namespace detail {

// Value-based quantile cut: the predicate (x < t) or (x <= t), whichever lands
// the below-fraction closer to q. Being a pure function of the value multiset
// keeps the derived variable reproducible from the data alone.
struct QuantileCut {
    std::int64_t threshold = 0;
    bool include_equal = false;

    bool below(std::int64_t x) const { return include_equal ? x <= threshold : x < threshold; }
};

inline QuantileCut quantile_cut(std::vector<std::int64_t> values, double q) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    std::size_t k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    if (k < 1) k = 1;
    if (k > n) k = n;
    const std::int64_t t = values[k - 1];

    const auto lo = std::lower_bound(values.begin(), values.end(), t) - values.begin();
    const auto hi = std::upper_bound(values.begin(), values.end(), t) - values.begin();
    const double frac_lt = static_cast<double>(lo) / static_cast<double>(n);
    const double frac_le = static_cast<double>(hi) / static_cast<double>(n);
    QuantileCut cut;
    cut.threshold = t;
    cut.include_equal = std::abs(frac_le - q) < std::abs(frac_lt - q);
    return cut;
}

} // namespace detail

inline Dataset generate_dummy(const DummyConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);

    const std::uint64_t n =
        static_cast<std::uint64_t>(cfg.n_tracts) * static_cast<std::uint64_t>(cfg.persons_per_tract);
    std::vector<std::int32_t> ages(n);
    std::vector<std::int64_t> incomes(n);
    const std::uint64_t age_span = static_cast<std::uint64_t>(cfg.age_max - cfg.age_min) + 1;
    std::size_t person = 0;
    for (std::uint32_t t = 0; t < cfg.n_tracts; ++t) {
        const double slope = cfg.slope_low + (cfg.slope_high - cfg.slope_low) * rng.uniform01();
        for (std::uint32_t i = 0; i < cfg.persons_per_tract; ++i, ++person) {
            const std::int32_t age = cfg.age_min + static_cast<std::int32_t>(rng.below(age_span));
            const std::int64_t noise = static_cast<std::int64_t>(rng.poisson(cfg.noise_mean));
            ages[person] = age;
            incomes[person] = std::llround(slope * static_cast<double>(age)) + noise;
        }
    }

    const auto poor_cut = detail::quantile_cut(incomes, cfg.poor_quantile);
    std::vector<std::int64_t> age_values(ages.begin(), ages.end());
    const auto young_cut = detail::quantile_cut(age_values, cfg.young_quantile);

    // schema: age levels span the configured range; income levels are the
    // observed distinct values, ascending
    AttributeSchema schema;
    Variable age_var{"age", {}, true};
    for (std::int32_t a = cfg.age_min; a <= cfg.age_max; ++a)
        age_var.levels.push_back(std::to_string(a));
    std::vector<std::int64_t> income_levels(incomes);
    std::sort(income_levels.begin(), income_levels.end());
    income_levels.erase(std::unique(income_levels.begin(), income_levels.end()),
                        income_levels.end());
    Variable income_var{"income", {}, true};
    for (const std::int64_t v : income_levels) income_var.levels.push_back(std::to_string(v));
    schema.variables = {age_var, income_var, Variable{"poor", {"0", "1"}, true},
                        Variable{"young", {"0", "1"}, true}};

    std::vector<std::int32_t> income_code(n);
    for (std::size_t p = 0; p < n; ++p) {
        const auto it = std::lower_bound(income_levels.begin(), income_levels.end(), incomes[p]);
        income_code[p] = static_cast<std::int32_t>(it - income_levels.begin());
    }

    const int tract_digits = static_cast<int>(std::to_string(cfg.n_tracts - 1).size());
    const int hh_digits = static_cast<int>(std::to_string(n - 1).size());
    auto padded = [](std::uint64_t v, int width) {
        std::string s = std::to_string(v);
        while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
        return s;
    };

    // every person is their own single-member household, all in one PUMA
    Dataset::Builder builder(schema);
    person = 0;
    for (std::uint32_t t = 0; t < cfg.n_tracts; ++t) {
        const std::string tract = "tract" + padded(t, tract_digits);
        for (std::uint32_t i = 0; i < cfg.persons_per_tract; ++i, ++person) {
            const std::int32_t values[4] = {
                ages[person] - cfg.age_min,
                income_code[person],
                poor_cut.below(incomes[person]) ? 1 : 0,
                young_cut.below(ages[person]) ? 1 : 0,
            };
            builder.add_person("h" + padded(person, hh_digits), "puma0", tract, values);
        }
    }
    return builder.build();
}

// Fraction of tracts whose poor-by-young Cramér's V lies strictly below the
// V of the combined (all-tracts) table. Tracts with undefined V are counted
// in the denominator but can never be "below"; a hair of tolerance guards
// against last-ulp noise when tract and combined tables are proportional.
inline double combined_vs_tract_v_share(const Dataset& ds) {
    const auto combined = cramers_v(cross_tab(all_persons(ds), "poor", "young"));
    if (!combined.defined()) return 0.0;
    std::size_t below = 0;
    for (std::uint32_t t = 0; t < ds.tract_count(); ++t) {
        const auto r = cramers_v(cross_tab(subset_by_tract(ds, ds.tract_id(t)), "poor", "young"));
        if (r.defined() && *r.v < *combined.v - 1e-12) ++below;
    }
    return static_cast<double>(below) / static_cast<double>(ds.tract_count());
}

} // namespace swapsim
