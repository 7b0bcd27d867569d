#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hyco/config.hpp"
#include "hyco/cosearch.hpp"

namespace hyco {

// Column order of every CSV the tools emit; mirrored in data/csv_schema.json.
extern const std::vector<std::string> kPerfColumns;
extern const std::vector<std::string> kScoreColumns;
extern const std::vector<std::string> kLogColumns;
extern const std::vector<std::string> kParetoColumns;

std::string csv_line(const std::vector<std::string>& cells);
std::vector<std::string> perf_cells(const std::string& genome, const PerfReport& r);

struct ScoreRow {
  std::string genome;
  double nn_degree = 0;
  double zen_score = 0;
  int combined_rank = 0;
};

/// Scores each net (zen seed derived from `seed` and the genome) and ranks
/// them within the list.
std::vector<ScoreRow> score_networks(const SearchSpace& space, const std::vector<SubNetwork>& nets,
                                     std::uint64_t seed, const ZenParams& zen);
std::string score_csv(const std::vector<ScoreRow>& rows);

json result_json(const CoSearchResult& r);
std::string log_csv(const CoSearchResult& r);
std::string pareto_csv(const CoSearchResult& r);

/// `base` itself when it is missing or empty (created), or when `force` is
/// set; otherwise a fresh timestamped subdirectory of it.
std::filesystem::path prepare_output_dir(const std::filesystem::path& base, bool force);

void write_text(const std::filesystem::path& p, const std::string& text);

/// result.json, log.csv, pareto.csv and resolved_config.json.
void write_cosearch_outputs(const std::filesystem::path& dir, const CoSearchResult& r, const RunConfig& cfg);

}  // namespace hyco
