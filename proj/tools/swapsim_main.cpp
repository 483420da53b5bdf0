// Command-line front end: wires config files and overrides into the
// generate / score / swap / tabulate / sweep pipeline. Every run writes a
// manifest.json and the resolved config beside its outputs so results are
// reproducible from the output directory alone.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "swapsim/config.hpp"
#include "swapsim/export_json.hpp"
#include "swapsim/swapsim.hpp"

namespace fs = std::filesystem;
using swapsim::Config;
using swapsim::errc;
using swapsim::raise;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides; // section.key=value
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file");
    cmd->add_option("--out", args.out_dir,
                    "output directory (default: $SWAPSIM_OUT, else the working directory)");
    cmd->add_option("overrides", args.overrides, "config overrides as section.key=value");
}

Config assemble_config(const CommonArgs& args) {
    Config cfg;
    if (!args.config_path.empty()) {
        try {
            cfg = Config::from_file(args.config_path);
        } catch (const swapsim::Error& e) {
            // an unreadable config file is a configuration problem, not a
            // data problem; remap so the exit code says so
            if (e.code() == errc::io_error)
                raise(errc::invalid_config,
                      "cannot open config file '" + args.config_path + "'");
            throw;
        }
    }
    for (const std::string& o : args.overrides) cfg.apply_override(o);
    return cfg;
}

fs::path resolve_out_dir(const CommonArgs& args) {
    std::string dir = args.out_dir;
    if (dir.empty())
        if (const char* env = std::getenv("SWAPSIM_OUT")) dir = env;
    if (dir.empty()) dir = ".";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) raise(errc::io_error, "cannot create output directory '" + dir + "'");
    return dir;
}

template <typename WriteFn>
void write_file(const fs::path& path, WriteFn&& fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(errc::io_error, "cannot write '" + path.string() + "'");
    fn(out);
    if (!out) raise(errc::io_error, "failed while writing '" + path.string() + "'");
    std::cout << "wrote " << path.string() << "\n";
}

void write_run_records(const fs::path& dir, const std::string& subcommand, const CommonArgs& args,
                       const Config& cfg, const std::vector<std::string>& outputs) {
    write_file(dir / "resolved.cfg", [&](std::ostream& out) { cfg.write_resolved(out); });
    nlohmann::json manifest;
    manifest["subcommand"] = subcommand;
    manifest["version"] = swapsim::version_string;
    manifest["config_path"] = args.config_path;
    nlohmann::json overrides = nlohmann::json::object();
    for (const auto& [key, entry] : cfg.entries())
        if (entry.overridden) overrides[key] = entry.value;
    manifest["overrides"] = overrides;
    manifest["outputs"] = outputs;
    write_file(dir / "manifest.json",
               [&](std::ostream& out) { out << manifest.dump(2) << "\n"; });
}

swapsim::DummyConfig dummy_config_from(const Config& cfg) {
    swapsim::DummyConfig out;
    out.n_tracts = static_cast<std::uint32_t>(cfg.get_uint_or("generate.n_tracts", out.n_tracts));
    out.persons_per_tract = static_cast<std::uint32_t>(
        cfg.get_uint_or("generate.persons_per_tract", out.persons_per_tract));
    out.slope_low = cfg.get_double_or("generate.slope_low", out.slope_low);
    out.slope_high = cfg.get_double_or("generate.slope_high", out.slope_high);
    out.age_min = static_cast<std::int32_t>(cfg.get_int_or("generate.age_min", out.age_min));
    out.age_max = static_cast<std::int32_t>(cfg.get_int_or("generate.age_max", out.age_max));
    out.noise_mean = cfg.get_double_or("generate.noise_mean", out.noise_mean);
    out.poor_quantile = cfg.get_double_or("generate.poor_quantile", out.poor_quantile);
    out.young_quantile = cfg.get_double_or("generate.young_quantile", out.young_quantile);
    out.seed = cfg.get_uint_or("generate.seed", out.seed);
    return out;
}

// Data comes from [data] csv/schema paths when present, otherwise from the
// dummy generator configured by [generate] (which has full defaults).
swapsim::Dataset resolve_data(const Config& cfg) {
    if (cfg.has("data.csv")) {
        const auto schema = swapsim::load_schema(fs::path(cfg.get("data.schema")));
        return swapsim::load_csv(fs::path(cfg.get("data.csv")), schema);
    }
    return swapsim::generate_dummy(dummy_config_from(cfg));
}

swapsim::RiskConfig risk_config_from(const Config& cfg) {
    swapsim::RiskConfig out;
    const std::string scorer = cfg.get_or("risk.scorer", "log_frequency");
    if (scorer == "log_frequency")
        out.scorer = swapsim::RiskScorer::LogFrequency;
    else if (scorer == "quantile_extremity")
        out.scorer = swapsim::RiskScorer::QuantileExtremity;
    else
        raise(errc::invalid_config,
              "risk.scorer must be log_frequency or quantile_extremity, got '" + scorer + "'");
    out.risk_variables = cfg.get_list_or("risk.variables");
    out.q = cfg.get_double_or("risk.q", out.q);
    return out;
}

swapsim::SwapConfig swap_config_from(const Config& cfg, bool need_rate) {
    swapsim::SwapConfig out;
    if (need_rate)
        out.rate = cfg.get_double("swap.rate");
    else
        out.rate = cfg.get_double_or("swap.rate", 0.0);
    out.matching_variables = cfg.get_list_or("swap.matching_variables");
    const std::string mode = cfg.get_or("swap.mode", "non_targeted");
    if (mode == "non_targeted")
        out.mode = swapsim::SwapMode::NonTargeted;
    else if (mode == "targeted")
        out.mode = swapsim::SwapMode::Targeted;
    else
        raise(errc::invalid_config,
              "swap.mode must be non_targeted or targeted, got '" + mode + "'");
    if (out.mode == swapsim::SwapMode::Targeted) out.risk = risk_config_from(cfg);
    out.seed = cfg.get_uint_or("swap.seed", 0);
    out.require_distinct_tracts = cfg.get_bool_or("swap.require_distinct_tracts", false);
    return out;
}

swapsim::SweepConfig sweep_config_from(const Config& cfg) {
    swapsim::SweepConfig out;
    out.rates = cfg.get_rates("sweep.rates");
    out.replications =
        static_cast<std::uint32_t>(cfg.get_uint_or("sweep.replications", 1));
    out.swap = swap_config_from(cfg, /*need_rate=*/false);
    out.tables = cfg.get_tables("sweep.tables");
    out.tracts = cfg.get_list_or("sweep.tracts");
    out.master_seed = cfg.get_uint_or("sweep.master_seed", 0);
    out.workers = static_cast<std::uint32_t>(cfg.get_uint_or("sweep.workers", 1));
    return out;
}

int run_generate(const CommonArgs& args) {
    const Config cfg = assemble_config(args);
    const fs::path dir = resolve_out_dir(args);
    const swapsim::Dataset ds = swapsim::generate_dummy(dummy_config_from(cfg));
    write_file(dir / "data.csv", [&](std::ostream& out) { swapsim::write_csv(ds, out); });
    write_file(dir / "data.schema",
               [&](std::ostream& out) { swapsim::save_schema(ds.schema(), out); });
    write_run_records(dir, "generate", args, cfg, {"data.csv", "data.schema"});
    return 0;
}

int run_score(const CommonArgs& args) {
    const Config cfg = assemble_config(args);
    const fs::path dir = resolve_out_dir(args);
    const swapsim::Dataset ds = resolve_data(cfg);
    const swapsim::RiskConfig rc = risk_config_from(cfg);
    rc.validate(ds.schema());
    const swapsim::ScoreSet scores = swapsim::score_records(ds, rc);
    write_file(dir / "scores.csv",
               [&](std::ostream& out) { swapsim::write_scores_csv(scores, out); });
    write_run_records(dir, "score", args, cfg, {"scores.csv"});
    return 0;
}

int run_swap(const CommonArgs& args) {
    const Config cfg = assemble_config(args);
    const fs::path dir = resolve_out_dir(args);
    // parse the swap parameters before the (possibly expensive) data load
    const swapsim::SwapConfig sc = swap_config_from(cfg, /*need_rate=*/true);
    const swapsim::Dataset ds = resolve_data(cfg);
    const swapsim::SwapOutcome outcome = swapsim::swap(ds, sc);
    write_file(dir / "swapped.csv",
               [&](std::ostream& out) { swapsim::write_csv(outcome.dataset, out); });
    write_file(dir / "swapped.schema",
               [&](std::ostream& out) { swapsim::save_schema(ds.schema(), out); });
    write_file(dir / "pairs.csv",
               [&](std::ostream& out) { swapsim::write_pairs_csv(ds, outcome, out); });
    write_run_records(dir, "swap", args, cfg, {"swapped.csv", "swapped.schema", "pairs.csv"});
    std::cout << "swapped_pairs=" << outcome.swapped_household_pairs.size()
              << " achieved_rate=" << outcome.achieved_rate
              << " unmatched_selected=" << outcome.unmatched_selected << "\n";
    return 0;
}

int run_tabulate(const CommonArgs& args) {
    const Config cfg = assemble_config(args);
    const fs::path dir = resolve_out_dir(args);
    swapsim::Dataset ds = resolve_data(cfg);

    const auto tables = cfg.get_tables("tabulate.table");
    if (tables.size() != 1)
        raise(errc::invalid_config, "tabulate.table wants exactly one row:col spec");
    const swapsim::TableSpec& spec = tables.front();
    if (!spec.row.boundaries.empty())
        ds = swapsim::bin_variable(ds, spec.row.variable, spec.row.boundaries);
    if (!spec.col.boundaries.empty())
        ds = swapsim::bin_variable(ds, spec.col.variable, spec.col.boundaries);

    const std::string tract = cfg.get_or("tabulate.tract", "");
    const swapsim::DatasetView view =
        tract.empty() ? swapsim::all_persons(ds) : swapsim::subset_by_tract(ds, tract);
    const swapsim::ContingencyTable table =
        swapsim::cross_tab(view, spec.row.variable, spec.col.variable);
    const swapsim::AssociationResult assoc = swapsim::cramers_v(table);

    write_file(dir / "table.csv", [&](std::ostream& out) { swapsim::write_table_csv(table, out); });
    write_file(dir / "association.csv", [&](std::ostream& out) {
        out << "chi_square,v,effective_rows,effective_cols,n\n";
        out << swapsim::detail::format_double(assoc.chi_square) << ','
            << (assoc.defined() ? swapsim::detail::format_double(*assoc.v) : std::string()) << ','
            << assoc.effective_rows << ',' << assoc.effective_cols << ',' << table.n << "\n";
    });
    write_run_records(dir, "tabulate", args, cfg, {"table.csv", "association.csv"});
    if (assoc.defined())
        std::cout << "cramers_v=" << *assoc.v << "\n";
    else
        std::cout << "cramers_v undefined for this table\n";
    return 0;
}

int run_sweep(const CommonArgs& args) {
    const Config cfg = assemble_config(args);
    const fs::path dir = resolve_out_dir(args);
    // parse the grid before the (possibly expensive) data load
    const swapsim::SweepConfig scfg = sweep_config_from(cfg);
    const swapsim::Dataset ds = resolve_data(cfg);
    const swapsim::RawLog log = swapsim::raw_replication_log(ds, scfg);
    const swapsim::SweepResult result = swapsim::aggregate_log(log);
    write_file(dir / "sweep.csv",
               [&](std::ostream& out) { swapsim::write_sweep_csv(result, out); });
    write_file(dir / "raw_log.csv",
               [&](std::ostream& out) { swapsim::write_raw_log_csv(log, out); });
    write_file(dir / "sweep.json",
               [&](std::ostream& out) { swapsim::write_sweep_json(result, scfg, out); });
    write_run_records(dir, "sweep", args, cfg, {"sweep.csv", "raw_log.csv", "sweep.json"});
    std::cout << "swept " << result.rates.size() << " rates x " << result.replications
              << " replications over " << result.tract_ids.size() << " tracts\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"household data swapping and disclosure-risk simulation"};
    app.require_subcommand(1);

    CommonArgs gen_args, score_args, swap_args, tab_args, sweep_args;
    std::optional<std::uint64_t> seed;
    std::optional<double> rate;
    std::optional<std::uint64_t> workers;
    std::optional<std::string> table, tract;

    CLI::App* gen = app.add_subcommand("generate", "write dummy microdata");
    add_common(gen, gen_args);
    gen->add_option("--seed", seed, "generator seed (generate.seed)");

    CLI::App* score = app.add_subcommand("score", "write per-person disclosure risk scores");
    add_common(score, score_args);

    CLI::App* swp = app.add_subcommand("swap", "run one household swap");
    add_common(swp, swap_args);
    swp->add_option("--rate", rate, "swap rate (swap.rate)");
    swp->add_option("--seed", seed, "swap seed (swap.seed)");

    CLI::App* tab = app.add_subcommand("tabulate", "write one contingency table and its V");
    add_common(tab, tab_args);
    tab->add_option("--table", table, "row:col spec (tabulate.table)");
    tab->add_option("--tract", tract, "restrict to one tract (tabulate.tract)");

    CLI::App* sweep = app.add_subcommand("sweep", "run a full replication sweep");
    add_common(sweep, sweep_args);
    sweep->add_option("--seed", seed, "master seed (sweep.master_seed)");
    sweep->add_option("--workers", workers, "worker thread count (sweep.workers)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help and friends
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    // dedicated flags win over file values and positional overrides
    if (gen->parsed() && seed) gen_args.overrides.push_back("generate.seed=" + std::to_string(*seed));
    if (swp->parsed()) {
        if (rate) swap_args.overrides.push_back("swap.rate=" + std::to_string(*rate));
        if (seed) swap_args.overrides.push_back("swap.seed=" + std::to_string(*seed));
    }
    if (tab->parsed()) {
        if (table) tab_args.overrides.push_back("tabulate.table=" + *table);
        if (tract) tab_args.overrides.push_back("tabulate.tract=" + *tract);
    }
    if (sweep->parsed()) {
        if (seed) sweep_args.overrides.push_back("sweep.master_seed=" + std::to_string(*seed));
        if (workers)
            sweep_args.overrides.push_back("sweep.workers=" + std::to_string(*workers));
    }

    try {
        if (gen->parsed()) return run_generate(gen_args);
        if (score->parsed()) return run_score(score_args);
        if (swp->parsed()) return run_swap(swap_args);
        if (tab->parsed()) return run_tabulate(tab_args);
        if (sweep->parsed()) return run_sweep(sweep_args);
        std::cerr << "usage error: no subcommand\n";
        return 2;
    } catch (const swapsim::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.is_config_error() ? 3 : 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
