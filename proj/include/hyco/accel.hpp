#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyco/search_space.hpp"

namespace hyco {

enum class ChunkKind : int { C = 0, S = 1, A = 2 };
inline constexpr std::array<ChunkKind, 3> kChunkKinds{ChunkKind::C, ChunkKind::S, ChunkKind::A};

ChunkKind chunk_for(LayerType t);
const char* chunk_name(ChunkKind k);

enum class LoopOrder : int { WS = 0, OS = 1, IS = 2, RS = 3 };
inline constexpr std::array<LoopOrder, 4> kLoopOrders{LoopOrder::WS, LoopOrder::OS, LoopOrder::IS, LoopOrder::RS};

const char* loop_order_name(LoopOrder o);
LoopOrder loop_order_from_name(const std::string& s);

enum class TilingLadder { PowerOfTwo, Divisors };

struct HardwareBudget {
  std::int64_t dsp_total = 1248;
  std::int64_t lut_total = 117000;
  std::int64_t bram_bits_total = 288LL * 36864;  // 288 blocks of 36 Kb
  double dsp_chunk_fraction = 0.437;             // share of DSPs granted to Chunk-C
  double dram_bytes_per_cycle = 8.0;
  double frequency_hz = 200e6;
  std::int64_t lut_overhead = 12000;  // control and interconnect, independent of PEs
  int activation_bits = 8;
  int conv_weight_bits = 8;
  int shift_weight_bits = 4;
  int adder_weight_bits = 8;
  int conv_output_bits = 15;
  int shift_output_bits = 15;
  int adder_output_bits = 9;
  TilingLadder ladder = TilingLadder::PowerOfTwo;
  std::vector<int> pe_grid;  // PE counts the template can build; empty means any

  std::int64_t gb_bytes_max() const { return bram_bits_total / 8; }
  std::int64_t dsp_for_chunks() const;
  int weight_bits(ChunkKind k) const;
  int output_bits(ChunkKind k) const;
  void check() const;  // throws std::invalid_argument

  /// Nearest grid value (the smaller one on ties); `pe` itself without a grid.
  int snap_pe(int pe) const;
  /// Largest grid value not above `pe`, or the smallest grid value when none is.
  int floor_pe(int pe) const;
};

/// Kria KV260 at 200 MHz.
HardwareBudget kv260_budget();

struct Tiling {
  int n = 1;
  int cin = 1;
  int cout = 1;
  int h = 1;
  int w = 1;

  auto operator<=>(const Tiling&) const = default;
};

struct Dataflow {
  LoopOrder order = LoopOrder::WS;
  Tiling tiling{};

  bool operator==(const Dataflow&) const = default;
};

struct ChunkConfig {
  ChunkKind kind = ChunkKind::C;
  int pe_count = 1;
  Dataflow dataflow{};

  bool operator==(const ChunkConfig&) const = default;
};

struct AcceleratorConfig {
  ChunkConfig chunk_c{ChunkKind::C};
  ChunkConfig chunk_s{ChunkKind::S};
  ChunkConfig chunk_a{ChunkKind::A};
  std::int64_t gb_bytes = 0;

  const ChunkConfig& chunk(ChunkKind k) const;
  ChunkConfig& chunk(ChunkKind k);
  bool operator==(const AcceleratorConfig&) const = default;
};

struct ResourceUsage {
  double dsp = 0;
  std::int64_t lut = 0;
  double bram_blocks = 0;
};

inline constexpr int kLutPerConvPe = 37;
inline constexpr int kLutPerShiftPe = 34;
inline constexpr int kLutPerAdderPe = 29;
inline constexpr double kDspPerConvPe = 0.5;  // two 8-bit multiplies packed per DSP
inline constexpr double kBramBlockBits = 36864.0;

ResourceUsage resource_usage(const AcceleratorConfig& cfg, std::int64_t lut_overhead = 0);
double bram_blocks(std::int64_t gb_bytes);

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws BudgetExceeded when the config's resources (with the budget's LUT
/// overhead) do not fit. Returns the usage otherwise.
ResourceUsage check_fits(const AcceleratorConfig& cfg, const HardwareBudget& budget);

class TileExceedsBuffer : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyFeasibleSet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LayerCost {
  std::int64_t compute_cycles = 0;
  std::int64_t memory_cycles = 0;
  std::int64_t traffic_bytes = 0;
  std::int64_t working_set_bytes = 0;

  std::int64_t cycles() const { return std::max(compute_cycles, memory_cycles); }
};

/// Double-buffered bytes of all live operand tiles for `layer` under `df`.
std::int64_t working_set_bytes(const LayerDescriptor& layer, ChunkKind kind, const Dataflow& df,
                               const HardwareBudget& budget);

/// Tiled-loop cost of one layer on one chunk. Compute: tile count times
/// ceil(tile MACs / PEs). Memory: DRAM bytes under the loop order's reuse
/// rule divided by bandwidth. Double buffering overlaps the two.
LayerCost layer_cost(const LayerDescriptor& layer, const ChunkConfig& chunk, std::int64_t gb_bytes,
                     const HardwareBudget& budget);
std::int64_t layer_latency(const LayerDescriptor& layer, const ChunkConfig& chunk, std::int64_t gb_bytes,
                           const HardwareBudget& budget);

struct EnergyCoeffs {
  double e_mult = 5.28e-3;  // mJ per million ops
  double e_shift = 7.2e-4;
  double e_add = 7.2e-4;

  double energy_mj(const OpCounts& ops) const { return e_mult * ops.mults + e_shift * ops.shifts + e_add * ops.adds; }
  void check() const;  // positive, e_mult > e_add
};

struct EnergyRow {
  OpCounts ops;
  double energy_mj = 0;
};

class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares fit of energy = e_mult*mults + e_shift*shifts + e_add*adds.
EnergyCoeffs fit_energy_coeffs(std::span<const EnergyRow> rows);

struct PerfReport {
  double latency_s = 0;
  double throughput_gops = 0;
  double fps = 0;
  double gops_per_klut = 0;
  double gops_per_dsp = 0;  // 0 when no DSPs are used
  double energy_mj = 0;
  ResourceUsage resources{};
  std::array<double, 3> per_chunk_time_s{};
  std::array<std::int64_t, 3> per_chunk_cycles{};
  OpCounts ops{};
  std::int64_t interval_cycles = 0;
};

/// Derives a report from per-chunk times: the pipeline interval is the
/// slowest chunk, FPS its inverse, throughput the op count over the interval.
PerfReport summarize_pipeline(const std::array<double, 3>& per_chunk_time_s, const OpCounts& ops,
                              const ResourceUsage& resources, const EnergyCoeffs& coeffs);

/// Every layer runs on the chunk matching its type.
PerfReport pipeline_perf(std::span<const LayerDescriptor> layers, const AcceleratorConfig& cfg,
                         const HardwareBudget& budget, const EnergyCoeffs& coeffs);
/// Same, with an explicit layer-to-chunk assignment that must agree with layer types.
PerfReport pipeline_perf(std::span<const LayerDescriptor> layers, std::span<const ChunkKind> assignment,
                         const AcceleratorConfig& cfg, const HardwareBudget& budget, const EnergyCoeffs& coeffs);

std::vector<LayerDescriptor> layers_for(ChunkKind kind, std::span<const LayerDescriptor> layers);

/// Sum of layer latencies of one chunk, in cycles.
std::int64_t chunk_cycles(std::span<const LayerDescriptor> chunk_layers, const ChunkConfig& chunk,
                          std::int64_t gb_bytes, const HardwareBudget& budget);

std::vector<int> tile_candidates(int max_dim, TilingLadder ladder);
Tiling max_dims(std::span<const LayerDescriptor> chunk_layers);

/// All (loop order, tiling) pairs whose working set fits `gb_bytes` on every
/// layer of the chunk. Throws EmptyFeasibleSet when none does.
std::vector<Dataflow> enumerate_dataflows(ChunkKind kind, std::span<const LayerDescriptor> chunk_layers,
                                          int pe_count, std::int64_t gb_bytes, const HardwareBudget& budget);

/// Smallest buffer that lets every assigned layer run under its chunk's dataflow.
std::int64_t min_gb_size(const AcceleratorConfig& cfg, std::span<const LayerDescriptor> layers,
                         const HardwareBudget& budget);

}  // namespace hyco
