#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "hyco/accel.hpp"

namespace hyco {

struct ChunkChoice {
  Dataflow dataflow{};
  std::int64_t cycles = 0;      // summed latency of the chunk's layers
  std::int64_t min_gb = 0;      // largest working set among the chunk's layers
  std::int64_t evaluated = 0;   // dataflows costed
};

/// Lexicographic order used everywhere a dataflow is picked: cycles, then
/// buffer need, then loop order, then tiling.
bool better_choice(const ChunkChoice& a, const ChunkChoice& b);

/// Latency and buffer need of one dataflow on a chunk; nullopt when a layer's
/// tile does not fit `gb_bytes`.
std::optional<ChunkChoice> evaluate_dataflow(ChunkKind kind, std::span<const LayerDescriptor> chunk_layers,
                                             int pe_count, const Dataflow& df, std::int64_t gb_bytes,
                                             const HardwareBudget& budget);

/// Best dataflow for one chunk at a fixed PE count. A chunk without layers
/// gets the all-ones WS dataflow at zero cycles. Throws EmptyFeasibleSet.
namespace serial {
ChunkChoice best_dataflow(ChunkKind kind, std::span<const LayerDescriptor> chunk_layers, int pe_count,
                          std::int64_t gb_bytes, const HardwareBudget& budget);
}
namespace omp {
ChunkChoice best_dataflow(ChunkKind kind, std::span<const LayerDescriptor> chunk_layers, int pe_count,
                          std::int64_t gb_bytes, const HardwareBudget& budget);
}

inline ChunkChoice best_dataflow(ChunkKind kind, std::span<const LayerDescriptor> chunk_layers, int pe_count,
                                 std::int64_t gb_bytes, const HardwareBudget& budget, bool parallel) {
  return parallel ? omp::best_dataflow(kind, chunk_layers, pe_count, gb_bytes, budget)
                  : serial::best_dataflow(kind, chunk_layers, pe_count, gb_bytes, budget);
}

}  // namespace hyco
