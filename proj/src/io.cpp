#include "hyco/io.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>

#include <fmt/format.h>

namespace hyco {

const std::vector<std::string> kPerfColumns{"genome",        "klut",          "dsp",       "bram_blocks",
                                            "latency_ms",    "gops",          "gops_per_klut", "gops_per_dsp",
                                            "fps",           "energy_mj",     "mults_m",   "shifts_m",
                                            "adds_m"};
const std::vector<std::string> kScoreColumns{"genome", "nn_degree", "zen_score", "combined_rank"};
const std::vector<std::string> kLogColumns{"iteration",         "population", "offspring",  "new_evaluations",
                                           "feasible_offspring", "best_reference_rank", "best_zen", "mean_zen",
                                           "best_gops"};
const std::vector<std::string> kParetoColumns{"genome", "gops", "latency_ms", "reference_rank", "zen_score",
                                              "nn_degree"};

std::string csv_line(const std::vector<std::string>& cells) { return fmt::format("{}\n", fmt::join(cells, ",")); }

std::vector<std::string> perf_cells(const std::string& genome, const PerfReport& r) {
  return {genome,
          fmt6(static_cast<double>(r.resources.lut) / 1000.0),
          fmt6(r.resources.dsp),
          fmt6(r.resources.bram_blocks),
          fmt6(r.latency_s * 1e3),
          fmt6(r.throughput_gops),
          fmt6(r.gops_per_klut),
          fmt6(r.gops_per_dsp),
          fmt6(r.fps),
          fmt6(r.energy_mj),
          fmt6(r.ops.mults),
          fmt6(r.ops.shifts),
          fmt6(r.ops.adds)};
}

std::vector<ScoreRow> score_networks(const SearchSpace& space, const std::vector<SubNetwork>& nets,
                                     std::uint64_t seed, const ZenParams& zen) {
  std::vector<ScoreRow> rows(nets.size());
  std::vector<ScorePair> pairs(nets.size());
  for (std::size_t i = 0; i < nets.size(); ++i) {
    ensure_valid(space, nets[i]);
    rows[i].genome = genome_string(nets[i]);
    rows[i].nn_degree = nn_degree(space, nets[i]);
    try {
      const auto h = instantiate(space, nets[i], candidate_seed(seed, nets[i]));
      rows[i].zen_score = zen_score(h, zen, candidate_seed(seed ^ 0x5a5a5a5aULL, nets[i]));
    } catch (const NonFiniteScore&) {
      rows[i].zen_score = std::numeric_limits<double>::quiet_NaN();
    }
    pairs[i] = {rows[i].nn_degree, rows[i].zen_score};
  }
  const auto ranks = combined_scores(pairs);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].combined_rank = ranks[i];
  return rows;
}

std::string score_csv(const std::vector<ScoreRow>& rows) {
  std::string out = csv_line(kScoreColumns);
  for (const auto& r : rows) {
    out += csv_line({r.genome, fmt6(r.nn_degree), fmt6(r.zen_score), std::to_string(r.combined_rank)});
  }
  return out;
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json result_json(const CoSearchResult& r) {
  json top = json::array();
  for (const auto& c : r.top) {
    top.push_back({{"network", to_json(c.net)},
                   {"accelerator", to_json(c.config)},
                   {"perf", to_json(c.report)},
                   {"nn_degree", c.nn_degree},
                   {"zen_score", number_or_null(c.zen_score)},
                   {"combined_rank", c.combined_rank}});
  }
  return {{"top", top}, {"evaluated_feasible", r.evaluated.size()}, {"iterations", r.log.size() - 1}};
}

std::string log_csv(const CoSearchResult& r) {
  std::string out = csv_line(kLogColumns);
  for (const auto& l : r.log) {
    out += csv_line({std::to_string(l.iteration), std::to_string(l.population), std::to_string(l.offspring),
                     std::to_string(l.new_evaluations), std::to_string(l.feasible_offspring),
                     std::to_string(l.best_reference_rank), fmt6(l.best_zen), fmt6(l.mean_zen), fmt6(l.best_gops)});
  }
  return out;
}

std::string pareto_csv(const CoSearchResult& r) {
  std::vector<std::pair<double, int>> pts;
  for (std::size_t i = 0; i < r.evaluated.size(); ++i) {
    pts.emplace_back(r.evaluated[i].report.throughput_gops, r.evaluated_reference_rank[i]);
  }
  std::string out = csv_line(kParetoColumns);
  for (auto i : pareto_front(pts)) {
    const auto& c = r.evaluated[i];
    out += csv_line({genome_string(c.net), fmt6(c.report.throughput_gops), fmt6(c.report.latency_s * 1e3),
                     std::to_string(r.evaluated_reference_rank[i]), fmt6(c.zen_score), fmt6(c.nn_degree)});
  }
  return out;
}

std::filesystem::path prepare_output_dir(const std::filesystem::path& base, bool force) {
  namespace fs = std::filesystem;
  if (!fs::exists(base) || force || fs::is_empty(base)) {
    fs::create_directories(base);
    return base;
  }
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  fs::path dir = base / stamp;
  for (int i = 1; fs::exists(dir); ++i) dir = base / fmt::format("{}-{}", stamp, i);
  fs::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", p.string()));
  out << text;
}

void write_cosearch_outputs(const std::filesystem::path& dir, const CoSearchResult& r, const RunConfig& cfg) {
  write_text(dir / "result.json", result_json(r).dump(2) + "\n");
  write_text(dir / "log.csv", log_csv(r));
  write_text(dir / "pareto.csv", pareto_csv(r));
  write_text(dir / "resolved_config.json", to_json(cfg).dump(2) + "\n");
}

}  // namespace hyco
