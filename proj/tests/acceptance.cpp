// Acceptance gate: one self-contained check per release criterion, one
// PASS/FAIL line each. Run with no argument for the whole gate or with a
// criterion number (1..9) for a single check; the exit code is the number of
// failures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "swapsim/swapsim.hpp"

using namespace swapsim;

namespace {

namespace fs = std::filesystem;

std::string fmt(double x) {
    std::ostringstream out;
    out.precision(6);
    out << x;
    return out.str();
}

// ---------------------------------------------------------------------------
// criterion 1: risk-score oracle
// ---------------------------------------------------------------------------

bool criterion_1(std::string& detail) {
    // 50 singles: 10 married, 25 male, person 0 a married male. The expected
    // score is the closed form log(10/50) + log(25/50).
    AttributeSchema schema;
    schema.variables = {
        Variable{"marital", {"never", "married"}, false},
        Variable{"gender", {"male", "female"}, false},
    };
    Dataset::Builder b(schema);
    for (int i = 0; i < 50; ++i) {
        const std::int32_t married = i < 10 ? 1 : 0;
        const std::int32_t male = i < 25 ? 0 : 1;
        b.add_person("h" + std::to_string(i), "p1", "t1",
                     std::vector<std::int32_t>{married, male});
    }
    const Dataset ds = b.build();

    RiskConfig cfg;
    cfg.scorer = RiskScorer::LogFrequency;
    cfg.risk_variables = {"marital", "gender"};
    const ScoreSet scores = score_records(ds, cfg);

    const double expected = std::log(0.2) + std::log(0.5); // = -2.302585092994046
    const double got = scores.scores[0];
    detail = "score " + fmt(got) + " vs " + fmt(expected);
    return std::abs(got - expected) <= 1e-9;
}

// ---------------------------------------------------------------------------
// criterion 2: Cramér's V unit suite
// ---------------------------------------------------------------------------

double abs_phi(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
    const double num = static_cast<double>(a) * static_cast<double>(d) -
                       static_cast<double>(b) * static_cast<double>(c);
    const double den = std::sqrt(static_cast<double>(a + b) * static_cast<double>(c + d) *
                                 static_cast<double>(a + c) * static_cast<double>(b + d));
    return std::abs(num) / den;
}

bool criterion_2(std::string& detail) {
    const auto perfect = cramers_v_counts(std::vector<std::int64_t>{5, 0, 0, 7}, 2, 2);
    if (!perfect.defined() || std::abs(*perfect.v - 1.0) > 1e-12) {
        detail = "perfect association did not give V = 1";
        return false;
    }
    const auto indep = cramers_v_counts(std::vector<std::int64_t>{10, 20, 20, 40}, 2, 2);
    if (!indep.defined() || std::abs(*indep.v) > 1e-12) {
        detail = "exact independence did not give V = 0";
        return false;
    }

    // reference table [[10,20],[30,40]]: phi closed form as the oracle
    const auto ref = cramers_v_counts(std::vector<std::int64_t>{10, 20, 30, 40}, 2, 2);
    const double oracle = 200.0 / std::sqrt(30.0 * 70.0 * 40.0 * 60.0); // 0.0890871...
    if (!ref.defined() || std::abs(*ref.v - oracle) > 1e-6) {
        detail = "reference table gave " + (ref.defined() ? fmt(*ref.v) : "undefined") +
                 ", oracle " + fmt(oracle);
        return false;
    }

    Rng rng(271828);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::int64_t a = 1 + static_cast<std::int64_t>(rng.below(60));
        const std::int64_t b = 1 + static_cast<std::int64_t>(rng.below(60));
        const std::int64_t c = 1 + static_cast<std::int64_t>(rng.below(60));
        const std::int64_t d = 1 + static_cast<std::int64_t>(rng.below(60));
        const auto r = cramers_v_counts(std::vector<std::int64_t>{a, b, c, d}, 2, 2);
        if (!r.defined() || std::abs(*r.v - abs_phi(a, b, c, d)) > 1e-12) {
            detail = "V != |phi| on random table " + std::to_string(trial);
            return false;
        }
    }
    detail = "V=1, V=0, reference " + fmt(*ref.v) + ", 1000 random 2x2 tables match |phi|";
    return true;
}

// ---------------------------------------------------------------------------
// criterion 3: exact invariance suite
// ---------------------------------------------------------------------------

SwapConfig random_swap_config(Rng& rng) {
    SwapConfig cfg;
    cfg.rate = static_cast<double>(rng.below(101)) / 100.0;
    const std::vector<std::vector<std::string>> s_choices{
        {}, {"gender"}, {"gender", "age"}, {"marital"}};
    cfg.matching_variables = s_choices[rng.below(s_choices.size())];
    cfg.seed = rng.next_u64();
    cfg.require_distinct_tracts = rng.below(2) == 0;
    if (rng.below(3) == 0) {
        cfg.mode = SwapMode::Targeted;
        RiskConfig risk;
        risk.scorer = RiskScorer::LogFrequency;
        risk.risk_variables = {"age", "income"};
        cfg.risk = risk;
    }
    return cfg;
}

bool criterion_3(std::string& detail) {
    Rng rng(1618);
    for (int trial = 0; trial < 200; ++trial) {
        const Dataset ds = testutil::random_dataset(rng, 40);
        const SwapConfig cfg = random_swap_config(rng);
        const SwapOutcome out = swap(ds, cfg);
        const auto vars = testutil::all_variable_indices(ds);

        // (c) attribute multiset conserved
        if (testutil::value_multiset(out.dataset, vars) != testutil::value_multiset(ds, vars)) {
            detail = "attribute multiset changed in trial " + std::to_string(trial);
            return false;
        }
        // (a) PUMA-level tables unchanged (per-PUMA joint multisets)
        for (std::uint32_t pu = 0; pu < ds.puma_count(); ++pu)
            if (testutil::value_multiset(out.dataset, vars, UINT32_MAX, pu) !=
                testutil::value_multiset(ds, vars, UINT32_MAX, pu)) {
                detail = "PUMA table changed in trial " + std::to_string(trial);
                return false;
            }
        // (b) tract-level tables over S unchanged (per-tract S multisets)
        std::vector<std::size_t> s_vars;
        for (const auto& name : cfg.matching_variables)
            s_vars.push_back(ds.schema().require_variable(name));
        for (std::uint32_t t = 0; t < ds.tract_count(); ++t)
            if (testutil::value_multiset(out.dataset, s_vars, t) !=
                testutil::value_multiset(ds, s_vars, t)) {
                detail = "tract S-table changed in trial " + std::to_string(trial);
                return false;
            }
        // (d) rate 0 identity
        SwapConfig zero = cfg;
        zero.rate = 0.0;
        if (!(swap(ds, zero).dataset == ds)) {
            detail = "rate-0 swap was not the identity in trial " + std::to_string(trial);
            return false;
        }
    }
    detail = "200 random datasets, all four invariants exact";
    return true;
}

// ---------------------------------------------------------------------------
// criteria 4, 5, 7, 8: convergence sweeps on the default dummy data
// ---------------------------------------------------------------------------

SweepConfig convergence_config() {
    SweepConfig cfg;
    for (int i = 0; i <= 20; ++i) cfg.rates.push_back(static_cast<double>(i) * 0.01);
    cfg.replications = 150;
    cfg.swap.matching_variables = {};
    cfg.swap.mode = SwapMode::NonTargeted;
    cfg.swap.require_distinct_tracts = true;
    cfg.tables = {TableSpec{AxisSpec{"poor", {}}, AxisSpec{"young", {}}}};
    cfg.master_seed = 2024;
    cfg.workers = 1;
    return cfg;
}

bool criterion_4(std::string& detail) {
    const Dataset ds = generate_dummy(DummyConfig{});
    const SweepResult result = run_sweep(ds, convergence_config());
    const auto summary = convergence_summary(result);
    const SpecConvergence& spec = summary.at(0);

    // split the converged share by starting side for reporting
    std::size_t below = 0, below_conv = 0, above = 0, above_conv = 0;
    for (std::size_t t = 0; t < spec.tracts.size(); ++t) {
        const double v0 = result.unswapped_v[t];
        if (std::isnan(v0)) continue;
        if (v0 < spec.target_v) {
            ++below;
            below_conv += spec.tracts[t].converged ? 1 : 0;
        } else {
            ++above;
            above_conv += spec.tracts[t].converged ? 1 : 0;
        }
    }
    detail = "converged share " + fmt(spec.converged_share) + " (below mean: " +
             std::to_string(below_conv) + "/" + std::to_string(below) + ", above: " +
             std::to_string(above_conv) + "/" + std::to_string(above) + "), gate 0.80";
    return spec.converged_share >= 0.80;
}

bool criterion_5(std::string& detail) {
    const Dataset ds = generate_dummy(DummyConfig{});
    SweepConfig cfg = convergence_config();
    cfg.rates = {0.0, 0.25, 0.5, 0.75, 1.0};
    cfg.replications = 50;
    const SweepResult result = run_sweep(ds, cfg);

    auto sd_at = [&](std::size_t rate_index) {
        std::vector<double> means;
        for (std::size_t t = 0; t < result.tract_ids.size(); ++t) {
            const double m = result.cell(rate_index, 0, t).mean_v;
            if (!std::isnan(m)) means.push_back(m);
        }
        double mean = 0.0;
        for (const double m : means) mean += m;
        mean /= static_cast<double>(means.size());
        double ss = 0.0;
        for (const double m : means) ss += (m - mean) * (m - mean);
        return std::sqrt(ss / static_cast<double>(means.size() - 1));
    };
    const double sd0 = sd_at(0);
    const double sd1 = sd_at(4);
    detail = "sd at rate 1.0 = " + fmt(sd1) + ", at rate 0 = " + fmt(sd0) + ", ratio " +
             fmt(sd1 / sd0) + ", gate 0.30";
    return sd1 < 0.30 * sd0;
}

// ---------------------------------------------------------------------------
// criterion 6: targeting effectiveness on a PUMS-like dataset
// ---------------------------------------------------------------------------

Dataset pums_like_fixture() {
    AttributeSchema schema;
    schema.variables = {
        Variable{"gender", {"male", "female"}, false},
        Variable{"age_group",
                 {"a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7"}, true},
        Variable{"marital", {"never", "married", "divorced", "widowed", "separated"}, false},
        Variable{"income_band", {"b0", "b1", "b2", "b3", "b4", "b5"}, true},
    };

    Rng rng(424242);
    auto draw = [&](const std::vector<double>& weights) {
        double total = 0.0;
        for (const double w : weights) total += w;
        double u = rng.uniform01() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return static_cast<std::int32_t>(i);
        }
        return static_cast<std::int32_t>(weights.size() - 1);
    };
    const std::vector<double> w_gender{52, 48};
    const std::vector<double> w_age{22, 18, 15, 12, 10, 9, 8, 6};
    const std::vector<double> w_marital{30, 45, 12, 8, 5};
    const std::vector<double> w_income{25, 25, 20, 15, 10, 5};
    const std::vector<double> w_size{40, 30, 20, 10}; // household sizes 1..4

    Dataset::Builder b(schema);
    int household = 0;
    for (int puma = 0; puma < 2; ++puma) {
        const std::string puma_id = "puma" + std::to_string(puma);
        for (int i = 0; i < 550; ++i, ++household) {
            const int size = 1 + draw(w_size);
            for (int m = 0; m < size; ++m)
                b.add_person("h" + std::to_string(household), puma_id, puma_id + "-stage",
                             std::vector<std::int32_t>{draw(w_gender), draw(w_age),
                                                       draw(w_marital), draw(w_income)});
        }
    }
    // public-style microdata has no tract: fabricate six per PUMA
    return assign_synthetic_tracts(b.build(), 6, 777);
}

bool criterion_6(std::string& detail) {
    const Dataset ds = pums_like_fixture();

    SweepConfig base;
    base.rates = {0.05, 0.10, 0.15};
    base.replications = 200;
    base.swap.matching_variables = {"gender"};
    base.tables = {TableSpec{AxisSpec{"age_group", {}}, AxisSpec{"marital", {}}}};
    base.master_seed = 2025;
    base.workers = 1;

    SweepConfig targeted = base;
    targeted.swap.mode = SwapMode::Targeted;
    RiskConfig risk;
    risk.scorer = RiskScorer::LogFrequency;
    risk.risk_variables = {"age_group", "marital"};
    targeted.swap.risk = risk;

    const SweepResult nt = run_sweep(ds, base);
    const SweepResult tg = run_sweep(ds, targeted);

    auto pooled_mean = [](const SweepResult& r, std::size_t rate_index) {
        double weighted = 0.0;
        double weight = 0.0;
        for (std::size_t t = 0; t < r.tract_ids.size(); ++t) {
            const CellStats& cell = r.cell(rate_index, 0, t);
            if (cell.n_ones_changed == 0) continue;
            weighted += cell.mean_ones_changed * cell.n_ones_changed;
            weight += cell.n_ones_changed;
        }
        return weight > 0.0 ? weighted / weight : std::numeric_limits<double>::quiet_NaN();
    };

    bool ok = true;
    std::ostringstream report;
    for (std::size_t r = 0; r < base.rates.size(); ++r) {
        const double m_nt = pooled_mean(nt, r);
        const double m_tg = pooled_mean(tg, r);
        if (r) report << ", ";
        report << "rate " << fmt(base.rates[r]) << ": targeted " << fmt(m_tg)
               << " vs non-targeted " << fmt(m_nt);
        if (!(m_tg > m_nt)) ok = false;
    }
    detail = report.str();
    return ok;
}

// ---------------------------------------------------------------------------
// criterion 7: targeted-instability property (emission, no assertion)
// ---------------------------------------------------------------------------

bool criterion_7(std::string& detail) {
    // Per-tract trajectories under targeted swapping are not required to
    // converge, so no convergence gate is asserted here; this check only
    // emits matching targeted and non-targeted sweeps for visual comparison.
    const Dataset ds = generate_dummy(DummyConfig{});

    SweepConfig cfg = convergence_config();
    for (auto& rate : cfg.rates) rate *= 2.0; // 0..0.40 in 21 steps
    cfg.replications = 40;

    SweepConfig targeted = cfg;
    targeted.swap.mode = SwapMode::Targeted;
    RiskConfig risk;
    risk.scorer = RiskScorer::LogFrequency;
    risk.risk_variables = {"age", "income"};
    targeted.swap.risk = risk;

    const SweepResult nt = run_sweep(ds, cfg);
    const SweepResult tg = run_sweep(ds, targeted);

    const fs::path dir = "acceptance_out";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "non_targeted_sweep.csv", std::ios::binary);
        write_sweep_csv(nt, out);
        if (!out) return false;
    }
    {
        std::ofstream out(dir / "targeted_sweep.csv", std::ios::binary);
        write_sweep_csv(tg, out);
        if (!out) return false;
    }

    const double nt_share = convergence_summary(nt).at(0).converged_share;
    const double tg_share = convergence_summary(tg).at(0).converged_share;
    detail = "emitted acceptance_out/{non_targeted,targeted}_sweep.csv; converged share " +
             fmt(nt_share) + " non-targeted vs " + fmt(tg_share) +
             " targeted (reported, not asserted)";
    return true;
}

// ---------------------------------------------------------------------------
// criterion 8: worker-count determinism of the criterion-4 sweep
// ---------------------------------------------------------------------------

bool criterion_8(std::string& detail) {
    const Dataset ds = generate_dummy(DummyConfig{});
    SweepConfig cfg = convergence_config();

    auto sorted_log_bytes = [&](std::uint32_t workers) {
        cfg.workers = workers;
        const RawLog log = raw_replication_log(ds, cfg);
        std::ostringstream out;
        write_raw_log_csv(log, out);
        return out.str();
    };
    const std::string serial = sorted_log_bytes(1);
    const std::string threaded = sorted_log_bytes(3);
    detail = "sorted raw logs of " + std::to_string(serial.size()) + " bytes, 1 vs 3 workers " +
             (serial == threaded ? "identical" : "DIFFER");
    return !serial.empty() && serial == threaded;
}

// ---------------------------------------------------------------------------
// criterion 9: calibration of the default dummy configuration
// ---------------------------------------------------------------------------

bool criterion_9(std::string& detail) {
    const Dataset ds = generate_dummy(DummyConfig{});
    const double share = combined_vs_tract_v_share(ds);
    detail = "combined_vs_tract_v_share " + fmt(share) + ", gate [0.45, 0.75]";
    return share >= 0.45 && share <= 0.75;
}

struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> catalog = {
        {1, "risk-score oracle", criterion_1},
        {2, "association statistic unit suite", criterion_2},
        {3, "exact invariance suite", criterion_3},
        {4, "dummy convergence reproduction", criterion_4},
        {5, "full-range convergence", criterion_5},
        {6, "targeting effectiveness", criterion_6},
        {7, "targeted-instability emission", criterion_7},
        {8, "worker-count determinism", criterion_8},
        {9, "default-config calibration", criterion_9},
    };

    int selected = 0;
    if (argc > 1) {
        selected = std::atoi(argv[1]);
        if (selected < 1 || selected > static_cast<int>(catalog.size())) {
            std::cerr << "usage: acceptance [1.." << catalog.size() << "]\n";
            return 2;
        }
    }

    int failures = 0;
    for (const Criterion& c : catalog) {
        if (selected != 0 && c.id != selected) continue;
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
            ok = false;
        }
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << ")";
        if (!detail.empty()) std::cout << ": " << detail;
        std::cout << std::endl;
        if (!ok) ++failures;
    }
    return failures;
}
