#include "hyco/dataflow_search.hpp"

#include <tuple>
#include <vector>

#include <fmt/format.h>

namespace hyco {

bool better_choice(const ChunkChoice& a, const ChunkChoice& b) {
  return std::tuple(a.cycles, a.min_gb, static_cast<int>(a.dataflow.order), a.dataflow.tiling) <
         std::tuple(b.cycles, b.min_gb, static_cast<int>(b.dataflow.order), b.dataflow.tiling);
}

std::optional<ChunkChoice> evaluate_dataflow(ChunkKind kind, std::span<const LayerDescriptor> chunk_layers,
                                             int pe_count, const Dataflow& df, std::int64_t gb_bytes,
                                             const HardwareBudget& budget) {
  ChunkChoice c;
  c.dataflow = df;
  c.evaluated = 1;
  const ChunkConfig chunk{kind, pe_count, df};
  for (const auto& l : chunk_layers) {
    const auto ws = working_set_bytes(l, kind, df, budget);
    if (ws > gb_bytes) return std::nullopt;
    c.min_gb = std::max(c.min_gb, ws);
    c.cycles += layer_cost(l, chunk, gb_bytes, budget).cycles();
  }
  return c;
}

namespace {

std::vector<Dataflow> candidates(std::span<const LayerDescriptor> chunk_layers, const HardwareBudget& budget) {
  const auto m = max_dims(chunk_layers);
  const auto cin = tile_candidates(m.cin, budget.ladder);
  const auto cout = tile_candidates(m.cout, budget.ladder);
  const auto hs = tile_candidates(m.h, budget.ladder);
  const auto ws = tile_candidates(m.w, budget.ladder);
  std::vector<Dataflow> out;
  out.reserve(kLoopOrders.size() * cin.size() * cout.size() * hs.size() * ws.size());
  for (auto order : kLoopOrders)
    for (int a : cin)
      for (int b : cout)
        for (int h : hs)
          for (int w : ws) out.push_back({order, {1, a, b, h, w}});
  return out;
}

ChunkChoice empty_chunk() { return ChunkChoice{}; }

[[noreturn]] void none_fits(ChunkKind kind, std::int64_t gb_bytes) {
  throw EmptyFeasibleSet(fmt::format("no dataflow for chunk {} fits a {} B buffer", chunk_name(kind), gb_bytes));
}

void check_pe(int pe_count) {
  if (pe_count < 1) throw std::invalid_argument("chunk needs at least one PE");
}

}  // namespace

namespace serial {

ChunkChoice best_dataflow(ChunkKind kind, std::span<const LayerDescriptor> chunk_layers, int pe_count,
                          std::int64_t gb_bytes, const HardwareBudget& budget) {
  check_pe(pe_count);
  if (chunk_layers.empty()) return empty_chunk();
  const auto cands = candidates(chunk_layers, budget);
  std::optional<ChunkChoice> best;
  for (const auto& df : cands) {
    auto c = evaluate_dataflow(kind, chunk_layers, pe_count, df, gb_bytes, budget);
    if (c && (!best || better_choice(*c, *best))) best = c;
  }
  if (!best) none_fits(kind, gb_bytes);
  best->evaluated = static_cast<std::int64_t>(cands.size());
  return *best;
}

}  // namespace serial

namespace omp {

ChunkChoice best_dataflow(ChunkKind kind, std::span<const LayerDescriptor> chunk_layers, int pe_count,
                          std::int64_t gb_bytes, const HardwareBudget& budget) {
  check_pe(pe_count);
  if (chunk_layers.empty()) return empty_chunk();
  const auto cands = candidates(chunk_layers, budget);
  const auto count = static_cast<std::int64_t>(cands.size());
  std::optional<ChunkChoice> best;
#pragma omp parallel
  {
    std::optional<ChunkChoice> local;
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < count; ++i) {
      auto c = evaluate_dataflow(kind, chunk_layers, pe_count, cands[i], gb_bytes, budget);
      if (c && (!local || better_choice(*c, *local))) local = c;
    }
#pragma omp critical
    {
      if (local && (!best || better_choice(*local, *best))) best = local;
    }
  }
  if (!best) none_fits(kind, gb_bytes);
  best->evaluated = count;
  return *best;
}

}  // namespace omp

}  // namespace hyco
