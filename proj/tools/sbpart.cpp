#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "sbp/comm.hpp"
#include "sbp/dcsbp.hpp"
#include "sbp/edist.hpp"
#include "sbp/generator.hpp"
#include "sbp/graph.hpp"
#include "sbp/inference.hpp"
#include "sbp/metrics.hpp"

namespace {

constexpr const char* kCsvSchema =
    "preset,algo,ranks,seed,nmi,dl_norm,island_fraction,seconds,final_C,status";

std::string fmt(double value, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
    return buf;
}

std::string join_command(int argc, char** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i) out += ' ';
        out += argv[i];
    }
    return out;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(csv);
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

struct GenerateArgs {
    std::string preset_name;
    std::string params_file;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    std::int64_t vertices = 0;
    std::int64_t communities = 0;
    bool truncate_min = false;
    bool truncate_max = false;
    bool duplicate = false;
    std::int64_t d_min = 0;
    std::int64_t d_max = 0;
    double exponent = 0.0;
    double intra_ratio = 0.0;
    double dirichlet_alpha = 0.0;
    std::int64_t target_edges = 0;
};

struct RunArgs {
    std::string graph_path;
    std::string truth_path;
    std::string algo = "serial";
    std::string backend = "inprocess";
    int ranks = 1;
    int workers = 1;
    int base_index = 0;
    std::uint64_t seed = 0;
    std::string out_path;
    std::string trace_path;
};

struct BenchArgs {
    std::string preset_list = "tiny-TTT150,tiny-FFT150";
    std::string algos = "serial,dcsbp,edist";
    std::string ranks_list = "1,2,4";
    int seeds = 1;
    int workers = 1;
    std::uint64_t seed = 0;  // base; cell s uses seed + s
    std::string csv_path;
};

void add_config_flags(CLI::App* cmd, sbp::SbpConfig& cfg) {
    cmd->add_option("--merge-proposals", cfg.merge_proposals_per_community,
                    "Merge proposals drawn per community and phase");
    cmd->add_option("--max-sweeps", cfg.max_mcmc_sweeps, "Sweep cap per refinement phase");
    cmd->add_option("--threshold", cfg.convergence_threshold,
                    "Convergence threshold on smoothed DL improvement");
    cmd->add_option("--beta", cfg.beta, "Inverse temperature for move acceptance");
    cmd->add_option("--reduction-rate", cfg.community_reduction_rate,
                    "Fraction of communities merged away per agglomeration phase");
    cmd->add_option("--high-degree-fraction", cfg.high_degree_fraction,
                    "Fraction of vertices updated sequentially each sweep");
    cmd->add_flag("--verify-replicas", cfg.verify_replicas,
                  "Cross-check replica checksums at every synchronization point");
    cmd->add_option("--combine-threshold", cfg.combine_threshold,
                    "Stop pairwise combination once this many partials remain");
}

int run_generate(const GenerateArgs& args, const CLI::App& cmd, const std::string& command) {
    sbp::GeneratorParams params;
    if (!args.preset_name.empty()) params = sbp::preset(args.preset_name);
    if (!args.params_file.empty()) {
        std::ifstream in(args.params_file);
        if (!in) throw std::runtime_error("cannot read " + args.params_file);
        sbp::apply_params_file(params, in);
    }
    if (cmd.count("--vertices")) params.num_vertices = args.vertices;
    if (cmd.count("--communities")) params.num_communities = args.communities;
    if (cmd.count("--truncate-min")) params.truncate_min_degree = args.truncate_min;
    if (cmd.count("--truncate-max")) params.truncate_max_degree = args.truncate_max;
    if (cmd.count("--duplicate")) params.duplicate_degree_sequence = args.duplicate;
    if (cmd.count("--min-degree")) params.d_min = args.d_min;
    if (cmd.count("--max-degree")) params.d_max = args.d_max;
    if (cmd.count("--exponent")) params.powerlaw_exponent = args.exponent;
    if (cmd.count("--intra-ratio")) params.intra_ratio = args.intra_ratio;
    if (cmd.count("--dirichlet-alpha")) params.dirichlet_alpha = args.dirichlet_alpha;
    if (cmd.count("--target-edges")) params.target_edges = args.target_edges;
    if (cmd.count("--seed")) params.seed = args.seed;

    const sbp::GeneratedGraph gen = sbp::generate(params);
    std::filesystem::create_directories(args.out_dir);
    const std::filesystem::path dir(args.out_dir);
    {
        auto out = open_output((dir / "graph.edges").string());
        sbp::write_edge_list(gen.graph, out);
    }
    {
        auto out = open_output((dir / "graph.truth").string());
        sbp::write_assignment(gen.truth, out);
    }
    {
        auto out = open_output((dir / "graph.manifest").string());
        sbp::write_manifest(gen.params, gen.graph, out);
    }
    std::cout << "generated vertices=" << gen.graph.num_vertices
              << " edges=" << gen.graph.num_edges << " communities=" << params.num_communities
              << " seed=" << params.seed << " out=" << args.out_dir << " command=\"" << command
              << "\"\n";
    return 0;
}

struct RunOutcome {
    sbp::SbpResult result;
    double island_fraction = 0.0;
    double seconds = 0.0;
};

RunOutcome execute_algorithm(const sbp::Graph& g, const sbp::SbpConfig& cfg,
                             const std::string& algo, const std::string& backend, int ranks,
                             int workers) {
    RunOutcome outcome;
    const auto t0 = std::chrono::steady_clock::now();
    if (algo == "serial") {
        outcome.result = sbp::sbp(g, cfg, workers);
    } else {
        std::optional<sbp::SbpResult> root_result;
        sbp::DcsbpStats stats;
        std::mutex mutex;
        auto body = [&](sbp::Communicator& comm) {
            if (algo == "edist") {
                sbp::SbpResult r = sbp::edist_run(g, cfg, comm, workers);
                if (comm.rank() == 0) {
                    std::lock_guard<std::mutex> lock(mutex);
                    root_result = std::move(r);
                }
            } else {
                sbp::DcsbpStats local_stats;
                auto r = sbp::dcsbp_run(g, cfg, comm, workers, &local_stats);
                if (comm.rank() == 0) {
                    std::lock_guard<std::mutex> lock(mutex);
                    root_result = std::move(*r);
                    stats = local_stats;
                }
            }
        };
        if (backend == "inprocess") {
            sbp::run_in_process(ranks, body, std::chrono::milliseconds(600000));
        } else {
            const std::string socket_path =
                "/tmp/sbpart-" + std::to_string(::getpid()) + ".sock";
            sbp::run_multi_process(ranks, socket_path, body);
        }
        if (!root_result) throw std::runtime_error("root rank produced no result");
        outcome.result = std::move(*root_result);
        if (algo == "dcsbp") outcome.island_fraction = stats.island_fraction;
    }
    outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return outcome;
}

void write_trace(const std::string& path, const std::vector<sbp::PhaseTraceRow>& rows) {
    auto out = open_output(path);
    out << "kind,phase,communities,dl,accepted,seconds\n";
    for (const auto& row : rows)
        out << row.kind << ',' << row.phase_index << ',' << row.communities << ','
            << fmt(row.dl) << ',' << row.accepted << ',' << fmt(row.seconds, 3) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    const std::string command = join_command(argc, argv);
    CLI::App app{"Degree-corrected blockmodel community detection"};
    app.require_subcommand(1);

    GenerateArgs gen_args;
    CLI::App* gen_cmd = app.add_subcommand("generate", "Write a synthetic benchmark graph");
    gen_cmd->add_option("--preset", gen_args.preset_name, "Named parameter row");
    gen_cmd->add_option("--params", gen_args.params_file, "key=value parameter file");
    gen_cmd->add_option("--out", gen_args.out_dir, "Output directory")->required();
    gen_cmd->add_option("--seed", gen_args.seed, "RNG seed")->envname("SBPART_SEED");
    gen_cmd->add_option("--vertices", gen_args.vertices, "Vertex count");
    gen_cmd->add_option("--communities", gen_args.communities, "Planted community count");
    gen_cmd->add_option("--truncate-min", gen_args.truncate_min, "Clamp minimum degree to 10");
    gen_cmd->add_option("--truncate-max", gen_args.truncate_max, "Clamp maximum degree to 100");
    gen_cmd->add_option("--duplicate", gen_args.duplicate,
                        "Reuse one drawn sequence for in- and out-degrees");
    gen_cmd->add_option("--min-degree", gen_args.d_min, "Explicit minimum degree");
    gen_cmd->add_option("--max-degree", gen_args.d_max, "Explicit maximum degree");
    gen_cmd->add_option("--exponent", gen_args.exponent, "Power-law exponent");
    gen_cmd->add_option("--intra-ratio", gen_args.intra_ratio,
                        "Odds of a stub staying inside its community");
    gen_cmd->add_option("--dirichlet-alpha", gen_args.dirichlet_alpha,
                        "Community size concentration");
    gen_cmd->add_option("--target-edges", gen_args.target_edges,
                        "Calibrate the exponent toward this edge count");

    RunArgs run_args;
    sbp::SbpConfig run_cfg;
    CLI::App* run_cmd = app.add_subcommand("run", "Infer a partition for one graph");
    run_cmd->add_option("--graph", run_args.graph_path, "Edge list file")->required();
    run_cmd->add_option("--truth", run_args.truth_path, "Ground-truth partition file");
    run_cmd->add_option("--algo", run_args.algo, "serial | dcsbp | edist")
        ->check(CLI::IsMember({"serial", "dcsbp", "edist"}));
    run_cmd->add_option("--ranks", run_args.ranks, "Logical rank count")
        ->check(CLI::PositiveNumber);
    run_cmd->add_option("--backend", run_args.backend, "inprocess | multiprocess")
        ->check(CLI::IsMember({"inprocess", "multiprocess"}));
    run_cmd->add_option("--workers", run_args.workers, "Sweep worker threads per rank")
        ->check(CLI::PositiveNumber);
    run_cmd->add_option("--base-index", run_args.base_index, "First vertex id in input files")
        ->check(CLI::Range(0, 1));
    run_cmd->add_option("--seed", run_args.seed, "RNG seed")->envname("SBPART_SEED");
    run_cmd->add_option("--out", run_args.out_path, "Partition output file");
    run_cmd->add_option("--trace", run_args.trace_path, "Per-phase trace CSV");
    add_config_flags(run_cmd, run_cfg);

    BenchArgs bench_args;
    sbp::SbpConfig bench_cfg;
    CLI::App* bench_cmd = app.add_subcommand(
        "bench", std::string("Sweep presets × algorithms × ranks × seeds into a CSV. Columns: ") +
                     kCsvSchema + ". status is ok, skipped, or error:<reason>.");
    bench_cmd->add_option("--preset-list", bench_args.preset_list, "Comma-separated preset names");
    bench_cmd->add_option("--algos", bench_args.algos, "Comma-separated algorithms");
    bench_cmd->add_option("--ranks-list", bench_args.ranks_list, "Comma-separated rank counts");
    bench_cmd->add_option("--seeds", bench_args.seeds, "Seeds per cell (base seed + 0..K-1)")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--seed", bench_args.seed, "Base seed")->envname("SBPART_SEED");
    bench_cmd->add_option("--workers", bench_args.workers, "Sweep worker threads per rank")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--csv", bench_args.csv_path, "Output CSV path")->required();
    add_config_flags(bench_cmd, bench_cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (gen_cmd->parsed()) return run_generate(gen_args, *gen_cmd, command);

        if (run_cmd->parsed()) {
            if (run_args.algo == "serial" && run_args.ranks != 1) {
                std::cerr << "usage error: --algo serial requires --ranks 1\n";
                return 1;
            }
            run_cfg.seed = run_args.seed;
            // A truth file names every vertex, including trailing isolated
            // ones an edge list cannot represent.
            std::int64_t min_vertices = 0;
            if (!run_args.truth_path.empty()) {
                std::ifstream in(run_args.truth_path);
                if (!in) throw std::runtime_error("cannot read " + run_args.truth_path);
                std::string line;
                std::int64_t v, c;
                while (std::getline(in, line)) {
                    std::istringstream fields(line);
                    if (fields >> v >> c)
                        min_vertices = std::max(min_vertices, v - run_args.base_index + 1);
                }
            }
            const sbp::Graph g = sbp::load_edge_list_file(run_args.graph_path,
                                                          run_args.base_index, min_vertices);
            if (run_args.ranks > g.num_vertices) {
                std::cerr << "usage error: --ranks exceeds the vertex count\n";
                return 1;
            }
            std::vector<std::int64_t> truth;
            if (!run_args.truth_path.empty()) {
                std::ifstream in(run_args.truth_path);
                if (!in) throw std::runtime_error("cannot read " + run_args.truth_path);
                truth = sbp::load_assignment(in, run_args.base_index, g.num_vertices);
            }
            const RunOutcome outcome = execute_algorithm(g, run_cfg, run_args.algo,
                                                         run_args.backend, run_args.ranks,
                                                         run_args.workers);
            if (!run_args.out_path.empty()) {
                auto out = open_output(run_args.out_path);
                sbp::write_assignment(outcome.result.partition, out);
            }
            if (!run_args.trace_path.empty()) write_trace(run_args.trace_path, outcome.result.trace);
            std::cout << "summary algo=" << run_args.algo << " ranks=" << run_args.ranks
                      << " C=" << outcome.result.community_count << " dl="
                      << fmt(outcome.result.dl) << " dl_norm="
                      << fmt(sbp::normalized_dl(outcome.result.dl, g.num_vertices, g.num_edges));
            if (!truth.empty())
                std::cout << " nmi=" << fmt(sbp::nmi(outcome.result.partition, truth));
            std::cout << " seconds=" << fmt(outcome.seconds, 3) << " seed=" << run_args.seed
                      << " command=\"" << command << "\"\n";
            return 0;
        }

        // bench
        auto csv = open_output(bench_args.csv_path);
        csv << kCsvSchema << "\n";
        const auto presets = split_list(bench_args.preset_list);
        const auto algos = split_list(bench_args.algos);
        const auto ranks_list = split_list(bench_args.ranks_list);
        if (presets.empty() || algos.empty() || ranks_list.empty()) {
            std::cerr << "usage error: empty sweep axis\n";
            return 1;
        }
        for (const auto& preset_name : presets) {
            for (int s = 0; s < bench_args.seeds; ++s) {
                const std::uint64_t seed = bench_args.seed + static_cast<std::uint64_t>(s);
                sbp::GeneratorParams params = sbp::preset(preset_name);
                params.seed = seed;
                const sbp::GeneratedGraph gen = sbp::generate(params);
                for (const auto& algo : algos) {
                    for (const auto& ranks_str : ranks_list) {
                        const int ranks = std::stoi(ranks_str);
                        const std::string prefix = preset_name + "," + algo + "," +
                                                   std::to_string(ranks) + "," +
                                                   std::to_string(seed) + ",";
                        if (algo == "serial" && ranks != 1) {
                            csv << prefix << ",,,,,skipped\n";
                            csv.flush();
                            continue;
                        }
                        try {
                            sbp::SbpConfig cfg = bench_cfg;
                            cfg.seed = seed;
                            const RunOutcome outcome = execute_algorithm(
                                gen.graph, cfg, algo, "inprocess", ranks, bench_args.workers);
                            const double quality = sbp::nmi(outcome.result.partition, gen.truth);
                            const double dl_norm = sbp::normalized_dl(
                                outcome.result.dl, gen.graph.num_vertices, gen.graph.num_edges);
                            csv << prefix << fmt(quality) << ',' << fmt(dl_norm) << ','
                                << fmt(outcome.island_fraction) << ',' << fmt(outcome.seconds, 3)
                                << ',' << outcome.result.community_count << ",ok\n";
                        } catch (const std::exception& e) {
                            std::string why = e.what();
                            for (auto& c : why)
                                if (c == ',' || c == '\n') c = ';';
                            csv << prefix << ",,,,,error:" << why << "\n";
                        }
                        csv.flush();
                    }
                }
            }
        }
        std::cout << "bench wrote " << bench_args.csv_path << " seed=" << bench_args.seed
                  << " command=\"" << command << "\"\n";
        return 0;
    } catch (const sbp::CommError& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 3;
    } catch (const std::logic_error& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
