#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyco/accel.hpp"
#include "hyco/dataflow_search.hpp"
#include "hyco/search_space.hpp"
#include "hyco/zeroshot.hpp"

namespace hyco {

class InfeasibleBudget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyPopulation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Accelerator search

struct CoarseResult {
  ChunkConfig chunk{ChunkKind::C};
  std::int64_t cycles = 0;
  std::int64_t gb_bytes = 0;  // provisional: the full buffer
  std::int64_t nodes = 0;
  bool has_conv = true;  // false: no conv layers, minimal chunk returned
};

/// Chunk-C at the largest PE count the DSP share allows, with the best
/// dataflow over the full buffer.
CoarseResult coarse_search(std::span<const LayerDescriptor> layers, const HardwareBudget& budget,
                           bool parallel = true);

struct PeInit {
  double shift_exact = 0;  // pe_C * shift MACs / conv MACs
  double adder_exact = 0;
  int shift = 1;           // rounded, clamped to >= 1 and to the LUT budget
  int adder = 1;
  int shift_unclamped = 0;
  int adder_unclamped = 0;
};

/// Proportional PE split on a MAC basis: pe_S / pe_C = shift MACs / conv MACs,
/// likewise for adders. Throws InfeasibleBudget if Chunk-C plus one PE each
/// for S and A already exceeds the LUT budget.
PeInit proportional_init(const MacCounts& macs, int pe_c, const HardwareBudget& budget);

inline constexpr std::array<double, 5> kFineSteps{0.5, 0.75, 1.0, 1.5, 2.0};

struct FineResult {
  AcceleratorConfig config;
  PeInit init;
  std::int64_t interval_cycles = 0;
  std::int64_t nodes = 0;
};

FineResult fine_search(std::span<const LayerDescriptor> layers, const HardwareBudget& budget,
                       const CoarseResult& coarse, bool parallel = true);

enum class SearchMode { CoarseFine, CoarseOnly, FineOnly };

const char* search_mode_name(SearchMode m);

struct AccelResult {
  AcceleratorConfig config;
  PerfReport report;
  std::int64_t nodes = 0;
};

/// Fixed-rule chunk used by the ablation modes in place of a searched one.
Dataflow manual_dataflow(std::span<const LayerDescriptor> chunk_layers);

AccelResult search_layers(std::span<const LayerDescriptor> layers, const HardwareBudget& budget,
                          const EnergyCoeffs& coeffs, SearchMode mode = SearchMode::CoarseFine,
                          bool parallel = true);
AccelResult search_accelerator(const SubNetwork& net, const SearchSpace& space, const HardwareBudget& budget,
                               const EnergyCoeffs& coeffs, bool parallel = true);

struct OracleGrid {
  std::vector<int> pe_c;
  std::vector<int> pe_s;
  std::vector<int> pe_a;
  std::int64_t node_cap = 200'000'000;
};

/// Node estimate of the joint enumeration; compared against the cap.
std::int64_t oracle_node_estimate(std::span<const LayerDescriptor> layers, const HardwareBudget& budget,
                                  const OracleGrid& grid);

/// Joint enumeration of PE triples on the grid and all 64 loop-order
/// combinations; inside each joint point every chunk's tilings are scanned.
/// Same objective as fine_search: smallest interval, then fewest LUTs.
AccelResult exhaustive_oracle(std::span<const LayerDescriptor> layers, const HardwareBudget& budget,
                              const EnergyCoeffs& coeffs, const OracleGrid& grid);

// ---------------------------------------------------------------------------
// Co-search

enum class Objective { MaximizeThroughput, MinimizeLatency };

struct Constraint {
  std::optional<double> max_dsp{};
  std::optional<std::int64_t> max_lut{};
  std::optional<double> max_latency_s{};
  std::optional<double> min_gops{};
  Objective objective = Objective::MaximizeThroughput;

  void check() const;  // at least one resource bound
  bool satisfied_by(const PerfReport& r) const;
};

struct SearchParams {
  int population = 100;
  int expand_size = 50;
  double mutate_prob = 0.2;
  double crossover_prob = 0.2;
  int iterations = 15;
  int top_k = 3;
  std::uint64_t seed = 0;

  void check() const;
};

struct Candidate {
  SubNetwork net;
  AcceleratorConfig config;
  PerfReport report;
  double nn_degree = 0;
  double zen_score = 0;  // NaN when the score was not finite
  int combined_rank = 0;
};

struct IterationLog {
  int iteration = 0;
  int population = 0;
  int offspring = 0;
  int new_evaluations = 0;
  int feasible_offspring = 0;
  int best_reference_rank = 0;  // best combined rank against the initial population
  double best_zen = 0;
  double mean_zen = 0;
  double best_gops = 0;
};

struct CoSearchResult {
  std::vector<Candidate> top;             // sorted by combined rank
  std::vector<IterationLog> log;
  std::vector<Candidate> evaluated;       // every feasible candidate, in evaluation order
  std::vector<int> evaluated_reference_rank;
};

std::uint64_t candidate_seed(std::uint64_t master, const SubNetwork& net);

CoSearchResult cosearch(const SearchSpace& space, const HardwareBudget& budget, const Constraint& constraint,
                        const SearchParams& params, const EnergyCoeffs& coeffs, const ZenParams& zen = {});

/// Indices of `points` (throughput, rank) on the frontier: no other point has
/// throughput >= and rank <= with one strict. Sorted by throughput descending.
std::vector<std::size_t> pareto_front(std::span<const std::pair<double, int>> points);

}  // namespace hyco
