#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "swapsim/csv.hpp"
#include "swapsim/error.hpp"
#include "swapsim/microdata.hpp"
#include "swapsim/rng.hpp"
#include "swapsim/swap.hpp"
#include "swapsim/tabulate.hpp"

namespace swapsim {

// ---------------------------------------------------------------------------
// Sweep configuration
// ---------------------------------------------------------------------------

// One axis of a monitored table: a variable, optionally coarsened by bin
// boundaries (level-index cut points, see detail::make_bins).
struct AxisSpec {
    std::string variable;
    std::vector<std::size_t> boundaries;

    std::string label() const {
        if (boundaries.empty()) return variable;
        std::string out = variable + "[";
        for (std::size_t i = 0; i < boundaries.size(); ++i) {
            if (i > 0) out += ';';
            out += std::to_string(boundaries[i]);
        }
        out += ']';
        return out;
    }
};

struct TableSpec {
    AxisSpec row;
    AxisSpec col;

    std::string label() const { return row.label() + ":" + col.label(); }
};

struct SweepConfig {
    std::vector<double> rates;          // strictly increasing, each in [0, 1]
    std::uint32_t replications = 1;     // per rate
    SwapConfig swap;                    // rate and seed fields are set per cell
    std::vector<TableSpec> tables;
    std::vector<std::string> tracts;    // monitored tracts; empty = all
    std::uint64_t master_seed = 0;
    std::uint32_t workers = 1;          // 0 = one per hardware thread

    void validate(const Dataset& ds) const {
        if (rates.empty()) raise(errc::invalid_config, "sweep.rates must not be empty");
        for (std::size_t i = 0; i < rates.size(); ++i) {
            if (!(rates[i] >= 0.0 && rates[i] <= 1.0))
                raise(errc::invalid_config, "sweep rates must lie in [0, 1]");
            if (i > 0 && rates[i] <= rates[i - 1])
                raise(errc::invalid_config, "sweep.rates must be strictly increasing");
        }
        if (replications < 1) raise(errc::invalid_config, "sweep.replications must be at least 1");
        if (tables.empty()) raise(errc::invalid_config, "sweep needs at least one table spec");
        for (const auto& t : tables) {
            ds.schema().require_variable(t.row.variable);
            ds.schema().require_variable(t.col.variable);
            if (t.row.variable == t.col.variable)
                raise(errc::same_variable, "table " + t.label() + " crosses a variable with itself");
        }
        for (std::size_t i = 0; i < tracts.size(); ++i) {
            if (!ds.find_tract(tracts[i]))
                raise(errc::unknown_tract, "no tract '" + tracts[i] + "' in the data");
            for (std::size_t j = 0; j < i; ++j)
                if (tracts[j] == tracts[i])
                    raise(errc::invalid_config, "tract '" + tracts[i] + "' listed twice");
        }
        SwapConfig probe = swap;
        probe.rate = 0.0;
        probe.validate(ds.schema());
    }
};

// ---------------------------------------------------------------------------
// Raw replication log
// ---------------------------------------------------------------------------

struct RawRecord {
    std::uint32_t tract_index = 0; // into RawLog::tract_ids
    std::uint32_t rate_index = 0;
    std::uint32_t spec_index = 0;
    std::uint32_t replication = 0;
    double v = std::numeric_limits<double>::quiet_NaN();
    double ones_changed = std::numeric_limits<double>::quiet_NaN();
    bool v_defined = false;
    bool ones_defined = false; // false when the unswapped table has no ones
};

// Every (tract, rate, spec, replication) observation, plus the unswapped
// baselines the observations are compared against. Record order is fixed by
// the grid, never by scheduling: index = ((rate*reps + rep)*specs + spec)*T + tract.
struct RawLog {
    std::vector<double> rates;
    std::vector<std::string> tract_ids;
    std::vector<std::string> spec_labels;
    std::uint32_t replications = 0;
    std::uint64_t master_seed = 0;
    std::vector<double> unswapped_v;        // [spec][tract], NaN when undefined
    std::vector<double> cross_tract_mean_v; // [spec], over tracts with defined V
    std::vector<RawRecord> records;
};

// Per-cell aggregate over replications. Means and standard errors are over
// the replications where the statistic is defined; se is the sample standard
// deviation (n-1) divided by sqrt(n), zero when n == 1, NaN when n == 0.
struct CellStats {
    double mean_v = std::numeric_limits<double>::quiet_NaN();
    double se_v = std::numeric_limits<double>::quiet_NaN();
    std::uint32_t n_v = 0;
    double mean_ones_changed = std::numeric_limits<double>::quiet_NaN();
    double se_ones_changed = std::numeric_limits<double>::quiet_NaN();
    std::uint32_t n_ones_changed = 0;
};

struct SweepResult {
    std::vector<double> rates;
    std::vector<std::string> tract_ids;
    std::vector<std::string> spec_labels;
    std::uint32_t replications = 0;
    std::uint64_t master_seed = 0;
    std::vector<double> unswapped_v;
    std::vector<double> cross_tract_mean_v;
    std::vector<CellStats> cells; // [rate][spec][tract]

    const CellStats& cell(std::size_t rate, std::size_t spec, std::size_t tract) const {
        return cells[(rate * spec_labels.size() + spec) * tract_ids.size() + tract];
    }
};

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace detail {

// Post-bin cell codes of every person for one table spec.
struct SpecCodes {
    std::vector<std::int32_t> row_code;
    std::vector<std::int32_t> col_code;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t cell_count() const { return rows * cols; }
    std::size_t cell_of(std::uint32_t person) const {
        return static_cast<std::size_t>(row_code[person]) * cols +
               static_cast<std::size_t>(col_code[person]);
    }
};

inline SpecCodes spec_codes(const Dataset& ds, const TableSpec& spec) {
    SpecCodes out;
    const std::uint32_t n = ds.person_count();
    auto one_axis = [&](const AxisSpec& axis, std::vector<std::int32_t>& code) -> std::size_t {
        const std::size_t vi = ds.schema().require_variable(axis.variable);
        code.resize(n);
        if (axis.boundaries.empty()) {
            for (std::uint32_t p = 0; p < n; ++p) code[p] = ds.value(p, vi);
            return ds.schema().variables[vi].levels.size();
        }
        auto [binned, remap] = make_bins(ds.schema().variables[vi], axis.boundaries);
        for (std::uint32_t p = 0; p < n; ++p)
            code[p] = remap[static_cast<std::size_t>(ds.value(p, vi))];
        return binned.levels.size();
    };
    out.rows = one_axis(spec.row, out.row_code);
    out.cols = one_axis(spec.col, out.col_code);
    return out;
}

} // namespace detail

// Runs the full (rate x replication) grid and logs one record per monitored
// (tract, table spec) pair. Replication seeds come from derive_seed, shared
// state (dataset, match index, risk scores, baselines) is read-only, and each
// record has a preassigned slot, so the log is identical for any worker count.
inline RawLog raw_replication_log(const Dataset& ds, const SweepConfig& cfg) {
    cfg.validate(ds);
    const std::uint32_t n = ds.person_count();
    const std::size_t n_specs = cfg.tables.size();

    RawLog log;
    log.rates = cfg.rates;
    log.replications = cfg.replications;
    log.master_seed = cfg.master_seed;

    // monitored tracts, in dataset order when the scope is implicit
    std::vector<std::uint32_t> scope;
    if (cfg.tracts.empty()) {
        scope.resize(ds.tract_count());
        std::iota(scope.begin(), scope.end(), 0u);
    } else {
        for (const auto& id : cfg.tracts) scope.push_back(*ds.find_tract(id));
    }
    const std::size_t n_tracts = scope.size();
    std::vector<std::int32_t> tract_slot(ds.tract_count(), -1);
    for (std::size_t i = 0; i < n_tracts; ++i) tract_slot[scope[i]] = static_cast<std::int32_t>(i);
    for (const std::uint32_t t : scope) log.tract_ids.push_back(ds.tract_id(t));

    std::vector<detail::SpecCodes> codes;
    codes.reserve(n_specs);
    for (const auto& spec : cfg.tables) {
        codes.push_back(detail::spec_codes(ds, spec));
        log.spec_labels.push_back(spec.label());
    }

    // unswapped baselines: per-tract V and the positions of one-count cells
    const double nan = std::numeric_limits<double>::quiet_NaN();
    log.unswapped_v.assign(n_specs * n_tracts, nan);
    log.cross_tract_mean_v.assign(n_specs, nan);
    std::vector<std::vector<std::uint32_t>> one_cells(n_specs * n_tracts);
    {
        std::vector<std::int64_t> counts;
        for (std::size_t s = 0; s < n_specs; ++s) {
            const std::size_t n_cells = codes[s].cell_count();
            counts.assign(n_tracts * n_cells, 0);
            for (std::uint32_t p = 0; p < n; ++p) {
                const std::int32_t slot = tract_slot[ds.tract_of_person(p)];
                if (slot >= 0)
                    ++counts[static_cast<std::size_t>(slot) * n_cells + codes[s].cell_of(p)];
            }
            double sum = 0.0;
            std::size_t defined = 0;
            for (std::size_t t = 0; t < n_tracts; ++t) {
                const std::span<const std::int64_t> cell(counts.data() + t * n_cells, n_cells);
                const auto res = cramers_v_counts(cell, codes[s].rows, codes[s].cols);
                if (res.defined()) {
                    log.unswapped_v[s * n_tracts + t] = *res.v;
                    sum += *res.v;
                    ++defined;
                }
                for (std::uint32_t i = 0; i < n_cells; ++i)
                    if (cell[i] == 1) one_cells[s * n_tracts + t].push_back(i);
            }
            if (defined > 0)
                log.cross_tract_mean_v[s] = sum / static_cast<double>(defined);
        }
    }

    // shared read-only swap inputs
    const MatchIndex index(ds, cfg.swap.matching_variables);
    std::optional<ScoreSet> scores;
    if (cfg.swap.mode == SwapMode::Targeted) scores = score_records(ds, *cfg.swap.risk);

    const std::size_t tasks = cfg.rates.size() * cfg.replications;
    log.records.resize(tasks * n_specs * n_tracts);

    std::atomic<std::size_t> next_task{0};
    std::atomic<bool> failed{false};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        std::vector<std::int64_t> counts;
        try {
            for (;;) {
                const std::size_t task = next_task.fetch_add(1, std::memory_order_relaxed);
                if (task >= tasks || failed.load(std::memory_order_relaxed)) return;
                const auto rate_index = static_cast<std::uint32_t>(task / cfg.replications);
                const auto replication = static_cast<std::uint32_t>(task % cfg.replications);

                SwapConfig sc = cfg.swap;
                sc.rate = cfg.rates[rate_index];
                sc.seed = derive_seed(cfg.master_seed, rate_index, replication);
                const SwapPlan plan = plan_swap(ds, sc, &index, scores ? &*scores : nullptr);

                for (std::size_t s = 0; s < n_specs; ++s) {
                    const std::size_t n_cells = codes[s].cell_count();
                    counts.assign(n_tracts * n_cells, 0);
                    for (std::uint32_t p = 0; p < n; ++p) {
                        const std::int32_t slot =
                            tract_slot[plan.household_tract[ds.household_of(p)]];
                        if (slot >= 0)
                            ++counts[static_cast<std::size_t>(slot) * n_cells + codes[s].cell_of(p)];
                    }
                    const std::size_t base = (task * n_specs + s) * n_tracts;
                    for (std::size_t t = 0; t < n_tracts; ++t) {
                        const std::span<const std::int64_t> cell(counts.data() + t * n_cells,
                                                                 n_cells);
                        const auto res = cramers_v_counts(cell, codes[s].rows, codes[s].cols);
                        RawRecord& rec = log.records[base + t];
                        rec.tract_index = static_cast<std::uint32_t>(t);
                        rec.rate_index = rate_index;
                        rec.spec_index = static_cast<std::uint32_t>(s);
                        rec.replication = replication;
                        rec.v_defined = res.defined();
                        if (res.defined()) rec.v = *res.v;
                        const auto& ones = one_cells[s * n_tracts + t];
                        rec.ones_defined = !ones.empty();
                        if (!ones.empty()) {
                            std::size_t changed = 0;
                            for (const std::uint32_t i : ones)
                                if (cell[i] != 1) ++changed;
                            rec.ones_changed =
                                static_cast<double>(changed) / static_cast<double>(ones.size());
                        }
                    }
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            failed.store(true, std::memory_order_relaxed);
        }
    };

    std::size_t n_workers = cfg.workers;
    if (n_workers == 0) n_workers = std::max(1u, std::thread::hardware_concurrency());
    n_workers = std::min(n_workers, tasks);
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_workers);
        for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return log;
}

// Collapses the log over replications. Per-cell sums run in ascending
// replication order, so the aggregate inherits the log's independence from
// worker count bit for bit.
inline SweepResult aggregate_log(const RawLog& log) {
    SweepResult out;
    out.rates = log.rates;
    out.tract_ids = log.tract_ids;
    out.spec_labels = log.spec_labels;
    out.replications = log.replications;
    out.master_seed = log.master_seed;
    out.unswapped_v = log.unswapped_v;
    out.cross_tract_mean_v = log.cross_tract_mean_v;

    const std::size_t n_specs = log.spec_labels.size();
    const std::size_t n_tracts = log.tract_ids.size();
    const std::size_t reps = log.replications;
    out.cells.resize(log.rates.size() * n_specs * n_tracts);

    auto record_at = [&](std::size_t rate, std::size_t rep, std::size_t spec, std::size_t tract)
        -> const RawRecord& {
        return log.records[((rate * reps + rep) * n_specs + spec) * n_tracts + tract];
    };

    for (std::size_t r = 0; r < log.rates.size(); ++r)
        for (std::size_t s = 0; s < n_specs; ++s)
            for (std::size_t t = 0; t < n_tracts; ++t) {
                CellStats& cell = out.cells[(r * n_specs + s) * n_tracts + t];
                // Welford, so a constant sequence (rate 0) aggregates to the
                // baseline value bitwise with a standard error of exactly 0.
                auto reduce = [&](auto value_of, auto defined_of, double& mean, double& se,
                                  std::uint32_t& count) {
                    double running = 0.0;
                    double m2 = 0.0;
                    std::size_t k = 0;
                    for (std::size_t rep = 0; rep < reps; ++rep) {
                        const RawRecord& rec = record_at(r, rep, s, t);
                        if (!defined_of(rec)) continue;
                        const double x = value_of(rec);
                        ++k;
                        const double delta = x - running;
                        running += delta / static_cast<double>(k);
                        m2 += delta * (x - running);
                    }
                    count = static_cast<std::uint32_t>(k);
                    if (k == 0) return;
                    mean = running;
                    se = k > 1 ? std::sqrt(m2 / static_cast<double>(k - 1)) /
                                     std::sqrt(static_cast<double>(k))
                               : 0.0;
                };
                reduce([](const RawRecord& x) { return x.v; },
                       [](const RawRecord& x) { return x.v_defined; }, cell.mean_v, cell.se_v,
                       cell.n_v);
                reduce([](const RawRecord& x) { return x.ones_changed; },
                       [](const RawRecord& x) { return x.ones_defined; }, cell.mean_ones_changed,
                       cell.se_ones_changed, cell.n_ones_changed);
            }
    return out;
}

inline SweepResult run_sweep(const Dataset& ds, const SweepConfig& cfg) {
    return aggregate_log(raw_replication_log(ds, cfg));
}

// ---------------------------------------------------------------------------
// Convergence toward the cross-tract mean
// ---------------------------------------------------------------------------

struct TractConvergence {
    std::string tract_id;
    double initial_gap = std::numeric_limits<double>::quiet_NaN();
    double final_gap = std::numeric_limits<double>::quiet_NaN();
    bool converged = false; // final_gap strictly below initial_gap
};

struct SpecConvergence {
    std::string spec_label;
    double target_v = std::numeric_limits<double>::quiet_NaN();
    std::vector<TractConvergence> tracts;
    double converged_share = 0.0;
};

// Distance of each tract's mean V from the unswapped cross-tract mean, at the
// lowest and highest swept rates. A tract converged when the distance shrank.
inline std::vector<SpecConvergence> convergence_summary(const SweepResult& result) {
    if (result.rates.size() < 2)
        raise(errc::insufficient_rates, "convergence needs at least two swap rates");
    const std::size_t last = result.rates.size() - 1;
    const std::size_t n_tracts = result.tract_ids.size();

    std::vector<SpecConvergence> out;
    for (std::size_t s = 0; s < result.spec_labels.size(); ++s) {
        SpecConvergence spec;
        spec.spec_label = result.spec_labels[s];
        spec.target_v = result.cross_tract_mean_v[s];
        std::size_t converged = 0;
        for (std::size_t t = 0; t < n_tracts; ++t) {
            TractConvergence tc;
            tc.tract_id = result.tract_ids[t];
            const double first = result.cell(0, s, t).mean_v;
            const double final_v = result.cell(last, s, t).mean_v;
            tc.initial_gap = std::abs(first - spec.target_v);
            tc.final_gap = std::abs(final_v - spec.target_v);
            tc.converged = tc.final_gap < tc.initial_gap; // NaN compares false
            if (tc.converged) ++converged;
            spec.tracts.push_back(std::move(tc));
        }
        spec.converged_share =
            n_tracts > 0 ? static_cast<double>(converged) / static_cast<double>(n_tracts) : 0.0;
        out.push_back(std::move(spec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV export
// ---------------------------------------------------------------------------

// One row per observation, sorted by tract, rate, spec, replication.
inline void write_raw_log_csv(const RawLog& log, std::ostream& out) {
    std::vector<std::size_t> order(log.records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const RawRecord& x = log.records[a];
        const RawRecord& y = log.records[b];
        if (x.tract_index != y.tract_index) return x.tract_index < y.tract_index;
        if (x.rate_index != y.rate_index) return x.rate_index < y.rate_index;
        if (x.spec_index != y.spec_index) return x.spec_index < y.spec_index;
        return x.replication < y.replication;
    });

    out << "tract,rate,spec,replication,v,ones_changed\n";
    std::vector<std::string> record(6);
    for (const std::size_t i : order) {
        const RawRecord& rec = log.records[i];
        record[0] = log.tract_ids[rec.tract_index];
        record[1] = detail::format_double(log.rates[rec.rate_index]);
        record[2] = log.spec_labels[rec.spec_index];
        record[3] = std::to_string(rec.replication);
        record[4] = detail::format_double(rec.v);
        record[5] = detail::format_double(rec.ones_changed);
        csv_write_record(out, record);
    }
}

// Long format: one row per (tract, rate, spec, statistic).
inline void write_sweep_csv(const SweepResult& result, std::ostream& out) {
    out << "tract,rate,spec,statistic,value\n";
    std::vector<std::string> record(5);
    auto emit = [&](std::size_t t, std::size_t r, std::size_t s, const char* statistic,
                    std::string value) {
        record[0] = result.tract_ids[t];
        record[1] = detail::format_double(result.rates[r]);
        record[2] = result.spec_labels[s];
        record[3] = statistic;
        record[4] = std::move(value);
        csv_write_record(out, record);
    };
    for (std::size_t t = 0; t < result.tract_ids.size(); ++t)
        for (std::size_t r = 0; r < result.rates.size(); ++r)
            for (std::size_t s = 0; s < result.spec_labels.size(); ++s) {
                const CellStats& cell = result.cell(r, s, t);
                emit(t, r, s, "mean_v", detail::format_double(cell.mean_v));
                emit(t, r, s, "se_v", detail::format_double(cell.se_v));
                emit(t, r, s, "n_v", std::to_string(cell.n_v));
                emit(t, r, s, "mean_ones_changed",
                     detail::format_double(cell.mean_ones_changed));
                emit(t, r, s, "se_ones_changed", detail::format_double(cell.se_ones_changed));
                emit(t, r, s, "n_ones_changed", std::to_string(cell.n_ones_changed));
            }
}

} // namespace swapsim
