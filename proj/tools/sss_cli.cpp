// Command-line front end: `search`, `benchmark` and `convert`.

#include <sss/dataset.hpp>
#include <sss/graph.hpp>
#include <sss/report.hpp>
#include <sss/stability.hpp>
#include <sss/synthbench.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>

namespace fs = std::filesystem;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitQuality = 3;

struct RunConfig {
    std::string data;
    std::string constraints;
    int subsets = 100;
    int generations = 20;
    int population = 100;
    double crossover_rate = 0.85;
    double mutation_rate = 0.075;
    double pi_sel = 0.6;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    int workers = 1;
    // benchmark only
    std::string truth;
    int reps = 10;
    long samples = 400;
    // convert only
    std::string input;
};

void add_search_flags(CLI::App& cmd, RunConfig& cfg) {
    cmd.add_option("--constraints", cfg.constraints, "Background knowledge file (`A -/-> B` per line)");
    cmd.add_option("--subsets", cfg.subsets, "Number of half-size subsamples")->check(CLI::PositiveNumber);
    cmd.add_option("--generations", cfg.generations, "NSGA-II generations per subsample")->check(CLI::PositiveNumber);
    cmd.add_option("--population", cfg.population, "NSGA-II population size")->check(CLI::PositiveNumber);
    cmd.add_option("--crossover-rate", cfg.crossover_rate, "One-point crossover probability")
        ->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--mutation-rate", cfg.mutation_rate, "Per-bit flip probability")->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--pi-sel", cfg.pi_sel, "Selection-probability threshold in (0,1)");
    cmd.add_option("--seed", cfg.seed, "64-bit seed; drawn from system entropy when absent");
    cmd.add_option("--out", cfg.out, "Output directory");
    cmd.add_option("--workers", cfg.workers, "Worker threads (does not affect results)")->check(CLI::PositiveNumber);
}

sss::StabilityParams stability_params(const RunConfig& cfg) {
    sss::StabilityParams p;
    p.subsets = cfg.subsets;
    p.workers = cfg.workers;
    p.search.generations = cfg.generations;
    p.search.population = cfg.population;
    p.search.crossover_rate = cfg.crossover_rate;
    p.search.mutation_rate = cfg.mutation_rate;
    p.search.validate();
    if (!(cfg.pi_sel > 0.0 && cfg.pi_sel < 1.0)) {
        throw sss::ConfigError("--pi-sel must lie strictly between 0 and 1");
    }
    return p;
}

std::uint64_t resolve_seed(const RunConfig& cfg) {
    if (cfg.seed) {
        return *cfg.seed;
    }
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw sss::InputError("cannot write '" + path.string() + "'");
    }
    out << content;
}

nlohmann::json parameters_json(const RunConfig& cfg) {
    return {{"subsets", cfg.subsets},
            {"generations", cfg.generations},
            {"population", cfg.population},
            {"crossover_rate", cfg.crossover_rate},
            {"mutation_rate", cfg.mutation_rate},
            {"pi_sel", cfg.pi_sel}};
}

std::string auc_cell(const std::optional<sss::RocCurve>& c) {
    return c ? fmt::format("{:.3f}", c->auc) : std::string("n/a");
}

int cmd_search(const RunConfig& cfg) {
    const auto params = stability_params(cfg);
    const sss::Dataset data = sss::read_csv(cfg.data);
    const sss::ConstraintSet constraints =
        cfg.constraints.empty() ? sss::ConstraintSet{} : sss::read_constraints(cfg.constraints, data.names());
    const std::uint64_t seed = resolve_seed(cfg);

    const auto result = sss::run_search(data, constraints, params, seed);
    sss::Thresholds thr{cfg.pi_sel, sss::pick_pi_bic(result.bic)};
    const auto model = sss::infer_model(result.edges, result.paths, constraints, thr, data.names());
    const auto rel_edges = sss::relevant_relations(result.edges, thr);
    const auto rel_paths = sss::relevant_relations(result.paths, thr);

    fs::create_directories(cfg.out);
    const fs::path out(cfg.out);
    write_file(out / "edge_stability.csv", sss::stability_csv(result.edges, data.names()));
    write_file(out / "path_stability.csv", sss::stability_csv(result.paths, data.names()));
    write_file(out / "bic_curve.csv", sss::bic_csv(result.bic));
    write_file(out / "model.dot", sss::model_dot(model));

    nlohmann::json summary;
    summary["seed"] = seed;
    summary["variables"] = data.names();
    summary["rows"] = data.rows();
    summary["parameters"] = parameters_json(cfg);
    summary["thresholds"] = {{"pi_sel", thr.pi_sel}, {"pi_bic", thr.pi_bic}};
    summary["relevant_edges"] = sss::relations_json(rel_edges, data.names());
    summary["relevant_paths"] = sss::relations_json(rel_paths, data.names());
    summary["subsets"] = result.subsets;
    summary["failed_subsets"] = result.failed_subsets;
    write_file(out / "summary.json", summary.dump(2) + "\n");

    const auto& names = data.names();
    fmt::print("pi_bic = {} (pi_sel = {})\n", thr.pi_bic, thr.pi_sel);
    fmt::print("relevant edges ({}):\n", rel_edges.size());
    for (const auto& r : rel_edges) {
        fmt::print("  {} - {}  {:.3f}\n", names[r.a], names[r.b], r.score);
    }
    fmt::print("relevant causal paths ({}):\n", rel_paths.size());
    for (const auto& r : rel_paths) {
        fmt::print("  {} ~> {}  {:.3f}\n", names[r.a], names[r.b], r.score);
    }
    if (result.failed_subsets > 0) {
        fmt::print("{} of {} subsets failed to fit\n", result.failed_subsets, result.subsets);
    }
    return 0;
}

int cmd_benchmark(const RunConfig& cfg) {
    sss::BenchmarkParams params;
    params.stability = stability_params(cfg);
    params.reps = cfg.reps;
    params.samples = cfg.samples;
    if (cfg.reps < 1 || cfg.samples < 1) {
        throw sss::ConfigError("--reps and --samples must be positive");
    }
    const std::uint64_t seed = resolve_seed(cfg);
    sss::Rng truth_rng = sss::derive_stream(seed, 0, 2);
    const sss::GroundTruth gt = sss::parse_ground_truth(sss::detail::read_file(cfg.truth), truth_rng);

    const auto report = sss::run_benchmark(gt, params, seed);
    fs::create_directories(cfg.out);
    const fs::path out(cfg.out);
    nlohmann::json j = sss::benchmark_json(report);
    j["seed"] = seed;
    j["samples"] = cfg.samples;
    j["reps"] = cfg.reps;
    j["parameters"] = parameters_json(cfg);
    write_file(out / "benchmark_report.json", j.dump(2) + "\n");
    write_file(out / "roc_edge.csv", sss::roc_csv(report, false));
    write_file(out / "roc_path.csv", sss::roc_csv(report, true));

    fmt::print("{:<12}{:>6}{:>10}{:>10}\n", "scheme", "rep", "AUC_edge", "AUC_path");
    fmt::print("{:<12}{:>6}{:>10}{:>10}\n", "averaging", "-", auc_cell(report.averaging.edge),
               auc_cell(report.averaging.path));
    for (std::size_t k = 0; k < report.individual.size(); ++k) {
        fmt::print("{:<12}{:>6}{:>10}{:>10}\n", "individual", k, auc_cell(report.individual[k].edge),
                   auc_cell(report.individual[k].path));
    }
    return 0;
}

int cmd_convert(const RunConfig& cfg) {
    const auto list = sss::parse_arc_list(sss::detail::read_file(cfg.input));
    const int n = static_cast<int>(list.names.size());
    const sss::ConstraintSet constraints =
        cfg.constraints.empty() ? sss::ConstraintSet{} : sss::read_constraints(cfg.constraints, list.names);
    sss::Dag dag;
    try {
        dag = sss::Dag::from_arcs(n, list.arcs, constraints);
    } catch (const sss::ContractError& e) {
        throw sss::InputError(std::string("input graph is not a valid DAG: ") + e.what());
    }
    const std::string dot = sss::cpdag_dot(sss::cons_dag2cpdag(dag, constraints), list.names);
    if (cfg.out.empty() || cfg.out == "-") {
        std::cout << dot;
    } else {
        write_file(cfg.out, dot);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stable specification search: robust causal structure discovery over linear-Gaussian SEMs"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto* search = app.add_subcommand("search", "Run the subsampled multi-objective search on a CSV dataset");
    search->add_option("--data", cfg.data, "CSV file with a header row")->required();
    add_search_flags(*search, cfg);

    auto* bench = app.add_subcommand("benchmark", "Structure-recovery benchmark against a ground-truth SEM");
    bench->add_option("--truth", cfg.truth, "Ground-truth JSON")->required();
    bench->add_option("--reps", cfg.reps, "Repetitions (fresh data set each)");
    bench->add_option("--samples", cfg.samples, "Rows per generated data set");
    bench->add_option("--data", cfg.data, "Unused; accepted for flag compatibility");
    add_search_flags(*bench, cfg);

    auto* convert = app.add_subcommand("convert", "Convert a DAG (edge list or DOT) into its constrained CPDAG");
    convert->add_option("--input", cfg.input, "Edge list or DOT digraph")->required();
    convert->add_option("--constraints", cfg.constraints, "Background knowledge file");
    convert->add_option("--out", cfg.out, "Output DOT file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }
    if (convert->parsed() && convert->count("--out") == 0) {
        cfg.out.clear();
    }

    try {
        if (search->parsed()) {
            return cmd_search(cfg);
        }
        if (bench->parsed()) {
            return cmd_benchmark(cfg);
        }
        return cmd_convert(cfg);
    } catch (const sss::RunQualityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitQuality;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
}
