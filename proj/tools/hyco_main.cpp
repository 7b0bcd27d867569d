// hyco: command-line driver for scoring, accelerator search and co-search.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include "hyco/config.hpp"
#include "hyco/cosearch.hpp"
#include "hyco/io.hpp"
#include "hyco/tables.hpp"
#include "hyco/workloads.hpp"

namespace {

using namespace hyco;

enum Exit : int {
  kOk = 0,
  kChecksFailed = 1,
  kUsage = 2,
  kInfeasible = 3,
  kEmptyPopulation = 4,
  kGridTooLarge = 5,
  kRuntime = 6,
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string output;
  bool json = false;
  bool force = false;
  bool dry_run = false;
};

RunConfig resolve(const Globals& g) {
  json merged = to_json(RunConfig{});
  if (!g.config.empty()) merge_json(merged, read_json_file(g.config));
  merge_json(merged, env_overrides(current_environment()));
  RunConfig cfg;
  from_json_into(merged, cfg);
  if (g.seed) cfg.params.seed = *g.seed;
  if (!g.output.empty()) cfg.output_dir = g.output;
  if (cfg.energy_source == "paper-fit") {
    std::vector<EnergyRow> rows;
    for (const auto& r : load_paper_data(default_paper_data_path()).op_rows) {
      if (r.family == "mult_based" || r.family == "mult_free") rows.push_back({r.ops, r.energy_mj});
    }
    cfg.coeffs = fit_energy_coeffs(rows);
  }
  return cfg;
}

void emit(const Globals& g, const std::string& name, const std::string& text) {
  if (g.output.empty()) {
    std::cout << text;
    return;
  }
  const auto dir = prepare_output_dir(g.output, g.force);
  write_text(dir / name, text);
  std::cerr << fmt::format("wrote {}\n", (dir / name).string());
}

std::vector<SubNetwork> read_genomes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path));
  std::vector<SubNetwork> out;
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    out.push_back(parse_genome(line, no));
  }
  if (out.empty()) throw ParseError(fmt::format("'{}' holds no genomes", path));
  return out;
}

int cmd_score(const Globals& g, const std::string& genome_file, int random) {
  const auto cfg = resolve(g);
  std::vector<SubNetwork> nets;
  if (!genome_file.empty()) {
    nets = read_genomes(genome_file);
  } else {
    if (random < 1) throw ParseError("score needs --genome-file or --random N (N >= 1)");
    Rng rng(cfg.params.seed);
    for (int i = 0; i < random; ++i) nets.push_back(sample_random(cfg.space, rng));
  }
  for (std::size_t i = 0; i < nets.size(); ++i) {
    if (auto v = validate(cfg.space, nets[i])) throw ParseError(fmt::format("genome {}: {}", i + 1, v->message()));
  }
  const auto rows = score_networks(cfg.space, nets, cfg.params.seed, cfg.zen);
  if (g.json) {
    json out = json::array();
    for (const auto& r : rows) {
      out.push_back({{"genome", r.genome}, {"nn_degree", r.nn_degree}, {"zen_score", r.zen_score},
                     {"combined_rank", r.combined_rank}});
    }
    emit(g, "scores.json", out.dump(2) + "\n");
  } else {
    emit(g, "scores.csv", score_csv(rows));
  }
  return kOk;
}

int cmd_kendall(const Globals& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path));
  std::vector<double> xs, ys;
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream cells(line);
    std::string a, b;
    std::getline(cells, a, ',');
    std::getline(cells, b, ',');
    try {
      std::size_t ua = 0, ub = 0;
      const double x = std::stod(a, &ua);
      const double y = std::stod(b, &ub);
      xs.push_back(x);
      ys.push_back(y);
    } catch (const std::exception&) {
      if (no == 1) continue;  // header
      throw ParseError(fmt::format("{}: line {} is not two numbers", path, no));
    }
  }
  const double tau = kendall_tau(xs, ys);
  if (g.json) {
    std::cout << json{{"n", xs.size()}, {"tau", tau}}.dump() << "\n";
  } else {
    std::cout << fmt6(tau) << "\n";
  }
  return kOk;
}

int cmd_search_accel(const Globals& g, const std::string& genome, const std::string& genome_file) {
  const auto cfg = resolve(g);
  SubNetwork net;
  if (!genome.empty()) {
    net = parse_genome(genome);
  } else if (!genome_file.empty()) {
    net = read_genomes(genome_file).front();
  } else {
    Rng rng(cfg.params.seed);
    net = sample_random(cfg.space, rng);
  }
  if (auto v = validate(cfg.space, net)) throw ParseError(v->message());
  const auto r = search_accelerator(net, cfg.space, cfg.budget, cfg.coeffs);
  const json config = {{"genome", genome_string(net)}, {"accelerator", to_json(r.config)}, {"perf", to_json(r.report)},
                       {"nodes", r.nodes}};
  const std::string perf = csv_line(kPerfColumns) + csv_line(perf_cells(genome_string(net), r.report));
  if (g.output.empty()) {
    std::cout << (g.json ? config.dump(2) + "\n" : perf);
    return kOk;
  }
  const auto dir = prepare_output_dir(g.output, g.force);
  write_text(dir / "accelerator.json", config.dump(2) + "\n");
  write_text(dir / "perf.csv", perf);
  std::cerr << fmt::format("wrote {}\n", dir.string());
  return kOk;
}

int cmd_cosearch(const Globals& g) {
  const auto cfg = resolve(g);
  if (g.dry_run) {
    std::cout << to_json(cfg).dump(2) << "\n";
    return kOk;
  }
  const auto result = cosearch(cfg.space, cfg.budget, cfg.constraint, cfg.params, cfg.coeffs, cfg.zen);
  const auto dir = prepare_output_dir(cfg.output_dir, g.force);
  write_cosearch_outputs(dir, result, cfg);
  if (cfg.verbosity > 0) {
    for (const auto& c : result.top) {
      std::cerr << fmt::format("rank {:>3}  {:>8.1f} GOPS  zen {:>9.3f}  nn {:>8.2f}  {}\n", c.combined_rank,
                               c.report.throughput_gops, c.zen_score, c.nn_degree, genome_string(c.net));
    }
    std::cerr << fmt::format("wrote {}\n", dir.string());
  }
  return kOk;
}

int cmd_reproduce(const Globals& g, const std::string& data) {
  const auto d = load_paper_data(data.empty() ? default_paper_data_path() : std::filesystem::path(data));
  const auto checks = reproduce_tables(d);
  bool ok = true;
  for (const auto& c : checks) ok = ok && (!c.counted || c.pass);
  if (g.json) {
    json out = json::array();
    for (const auto& c : checks) out.push_back(to_json(c));
    std::cout << json{{"pass", ok}, {"checks", out}}.dump(2) << "\n";
  } else {
    for (const auto& c : checks) {
      const char* tag = !c.counted ? (c.pass ? "info" : "INFO") : (c.pass ? "PASS" : "FAIL");
      std::cout << fmt::format("{:<4}  {:<44} value {:>10} expected {:>10} residual {:>10}  {}\n", tag, c.id,
                               fmt6(c.value), fmt6(c.expected), fmt6(c.residual), c.detail);
    }
    int failed = 0;
    for (const auto& c : checks) failed += c.counted && !c.pass;
    std::cout << fmt::format("{} checks, {} failed\n", checks.size(), failed);
  }
  return ok ? kOk : kChecksFailed;
}

int cmd_oracle_compare(const Globals& g, const std::string& workloads, int count) {
  const auto cfg = resolve(g);
  const auto suite = workloads.empty() ? desk_suite(cfg.params.seed, count) : suite_from_json(read_json_file(workloads));
  bool ok = true;
  json rows = json::array();
  if (!g.json) {
    std::cout << fmt::format("{:<12} {:>10} {:>10} {:>7} {:>11} {:>9} {:>8} {:>10} {:>10}\n", "workload",
                             "search", "oracle", "ratio", "nodes-srch", "nodes-orc", "n-ratio", "fine-only",
                             "coarse-only");
  }
  for (const auto& w : suite.workloads) {
    const auto c = compare_workload(w, suite.budget, suite.grid, cfg.coeffs);
    const bool ratio_ok = c.throughput_ratio >= 0.95;
    const bool nodes_ok = c.chunks_used < 3 || c.node_ratio >= 10;
    ok = ok && ratio_ok && nodes_ok;
    if (g.json) {
      rows.push_back({{"workload", c.name},
                      {"search_gops", c.searched.report.throughput_gops},
                      {"oracle_gops", c.oracle.report.throughput_gops},
                      {"ratio", c.throughput_ratio},
                      {"search_nodes", c.searched.nodes},
                      {"oracle_nodes", c.oracle.nodes},
                      {"node_ratio", c.node_ratio},
                      {"fine_only_gops", c.fine_only_gops},
                      {"coarse_only_gops", c.coarse_only_gops},
                      {"chunks", c.chunks_used}});
    } else {
      std::cout << fmt::format("{:<12} {:>10} {:>10} {:>7} {:>11} {:>9} {:>8} {:>10} {:>10}\n", c.name,
                               fmt6(c.searched.report.throughput_gops), fmt6(c.oracle.report.throughput_gops),
                               fmt6(c.throughput_ratio), c.searched.nodes, c.oracle.nodes, fmt6(c.node_ratio),
                               fmt6(c.fine_only_gops), fmt6(c.coarse_only_gops));
    }
  }
  if (g.json) std::cout << json{{"pass", ok}, {"workloads", rows}}.dump(2) << "\n";
  return ok ? kOk : kChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid conv/shift/adder network and accelerator co-search"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides params.seed)");
  app.add_option("--threads", g.threads, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);
  app.add_option("--output", g.output, "Output directory");
  app.add_flag("--json", g.json, "Machine-readable output");
  app.add_flag("--force", g.force, "Write into an existing output directory");
  app.add_flag("--dry-run", g.dry_run, "Print the resolved configuration and exit");

  std::string genome_file;
  int random = 0;
  auto* score = app.add_subcommand("score", "Zero-shot scores of genomes");
  score->add_option("--genome-file", genome_file, "One genome per line")->check(CLI::ExistingFile);
  score->add_option("--random", random, "Score N random genomes");

  std::string pairs;
  auto* kendall = app.add_subcommand("kendall", "Kendall tau-b of a two-column CSV");
  kendall->add_option("input", pairs, "CSV file")->required()->check(CLI::ExistingFile);

  std::string genome;
  auto* accel = app.add_subcommand("search-accel", "Coarse-to-fine accelerator search for one genome");
  accel->add_option("--genome", genome, "Genome record, '-'-separated");
  accel->add_option("--genome-file", genome_file, "File whose first genome is used")->check(CLI::ExistingFile);

  auto* co = app.add_subcommand("cosearch", "Evolutionary network/accelerator co-search");

  std::string data;
  auto* repro = app.add_subcommand("reproduce-tables", "Check table arithmetic against the bundled data");
  repro->add_option("--data", data, "Table data file (JSON)")->check(CLI::ExistingFile);

  std::string workloads;
  int count = 5;
  auto* oracle = app.add_subcommand("oracle-compare", "Coarse-to-fine search against the exhaustive oracle");
  oracle->add_option("--workloads", workloads, "Workload suite JSON (default: generated desk suite)")
      ->check(CLI::ExistingFile);
  oracle->add_option("--count", count, "Random workloads in the generated suite")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed;
  if (g.threads > 0) omp_set_num_threads(g.threads);

  try {
    if (*score) return cmd_score(g, genome_file, random);
    if (*kendall) return cmd_kendall(g, pairs);
    if (*accel) return cmd_search_accel(g, genome, genome_file);
    if (*co) return cmd_cosearch(g);
    if (*repro) return cmd_reproduce(g, data);
    if (*oracle) return cmd_oracle_compare(g, workloads, count);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const MembershipError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InfeasibleBudget& e) {
    std::cerr << "infeasible budget: " << e.what() << "\n";
    return kInfeasible;
  } catch (const EmptyPopulation& e) {
    std::cerr << "empty population: " << e.what() << "\n";
    return kEmptyPopulation;
  } catch (const GridTooLarge& e) {
    std::cerr << "grid too large: " << e.what() << "\n";
    return kGridTooLarge;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
