#include "hyco/accel.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace hyco {

ChunkKind chunk_for(LayerType t) { return static_cast<ChunkKind>(static_cast<int>(t)); }

const char* chunk_name(ChunkKind k) {
  switch (k) {
    case ChunkKind::C: return "C";
    case ChunkKind::S: return "S";
    case ChunkKind::A: return "A";
  }
  return "?";
}

const char* loop_order_name(LoopOrder o) {
  switch (o) {
    case LoopOrder::WS: return "WS";
    case LoopOrder::OS: return "OS";
    case LoopOrder::IS: return "IS";
    case LoopOrder::RS: return "RS";
  }
  return "?";
}

LoopOrder loop_order_from_name(const std::string& s) {
  for (auto o : kLoopOrders) {
    if (s == loop_order_name(o)) return o;
  }
  throw std::invalid_argument(fmt::format("unknown loop order '{}'", s));
}

std::int64_t HardwareBudget::dsp_for_chunks() const {
  return static_cast<std::int64_t>(std::floor(static_cast<double>(dsp_total) * dsp_chunk_fraction));
}

int HardwareBudget::weight_bits(ChunkKind k) const {
  switch (k) {
    case ChunkKind::C: return conv_weight_bits;
    case ChunkKind::S: return shift_weight_bits;
    case ChunkKind::A: return adder_weight_bits;
  }
  return conv_weight_bits;
}

int HardwareBudget::output_bits(ChunkKind k) const {
  switch (k) {
    case ChunkKind::C: return conv_output_bits;
    case ChunkKind::S: return shift_output_bits;
    case ChunkKind::A: return adder_output_bits;
  }
  return conv_output_bits;
}

void HardwareBudget::check() const {
  auto req = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(fmt::format("invalid hardware budget: {}", what));
  };
  req(dsp_total > 0 && lut_total > 0 && bram_bits_total > 0, "resource totals must be positive");
  req(dsp_chunk_fraction > 0 && dsp_chunk_fraction <= 1, "dsp_chunk_fraction must be in (0, 1]");
  req(dram_bytes_per_cycle > 0 && frequency_hz > 0, "bandwidth and frequency must be positive");
  req(lut_overhead >= 0, "lut_overhead must be non-negative");
  req(activation_bits > 0 && conv_weight_bits > 0 && shift_weight_bits > 0 && adder_weight_bits > 0 &&
          conv_output_bits > 0 && shift_output_bits > 0 && adder_output_bits > 0,
      "bitwidths must be positive");
  for (int pe : pe_grid) req(pe >= 1, "pe_grid values must be at least 1");
}

int HardwareBudget::snap_pe(int pe) const {
  if (pe_grid.empty()) return pe;
  int best = pe_grid.front();
  for (int g : pe_grid) {
    const int d = std::abs(g - pe), bd = std::abs(best - pe);
    if (d < bd || (d == bd && g < best)) best = g;
  }
  return best;
}

int HardwareBudget::floor_pe(int pe) const {
  if (pe_grid.empty()) return pe;
  int best = 0;
  for (int g : pe_grid) {
    if (g <= pe) best = std::max(best, g);
  }
  return best > 0 ? best : *std::min_element(pe_grid.begin(), pe_grid.end());
}

HardwareBudget kv260_budget() { return HardwareBudget{}; }

const ChunkConfig& AcceleratorConfig::chunk(ChunkKind k) const {
  switch (k) {
    case ChunkKind::C: return chunk_c;
    case ChunkKind::S: return chunk_s;
    case ChunkKind::A: return chunk_a;
  }
  return chunk_c;
}

ChunkConfig& AcceleratorConfig::chunk(ChunkKind k) {
  return const_cast<ChunkConfig&>(static_cast<const AcceleratorConfig&>(*this).chunk(k));
}

double bram_blocks(std::int64_t gb_bytes) { return static_cast<double>(gb_bytes) * 8.0 / kBramBlockBits; }

ResourceUsage resource_usage(const AcceleratorConfig& cfg, std::int64_t lut_overhead) {
  ResourceUsage r;
  r.dsp = kDspPerConvPe * cfg.chunk_c.pe_count;
  r.lut = static_cast<std::int64_t>(kLutPerConvPe) * cfg.chunk_c.pe_count +
          static_cast<std::int64_t>(kLutPerShiftPe) * cfg.chunk_s.pe_count +
          static_cast<std::int64_t>(kLutPerAdderPe) * cfg.chunk_a.pe_count + lut_overhead;
  r.bram_blocks = bram_blocks(cfg.gb_bytes);
  return r;
}

ResourceUsage check_fits(const AcceleratorConfig& cfg, const HardwareBudget& budget) {
  for (auto k : kChunkKinds) {
    if (cfg.chunk(k).pe_count < 1) throw BudgetExceeded(fmt::format("chunk {} has no PEs", chunk_name(k)));
  }
  const auto r = resource_usage(cfg, budget.lut_overhead);
  if (r.dsp > static_cast<double>(budget.dsp_total)) {
    throw BudgetExceeded(fmt::format("needs {} DSP, budget {}", r.dsp, budget.dsp_total));
  }
  if (r.lut > budget.lut_total) throw BudgetExceeded(fmt::format("needs {} LUT, budget {}", r.lut, budget.lut_total));
  if (cfg.gb_bytes > budget.gb_bytes_max()) {
    throw BudgetExceeded(fmt::format("needs {} GB bytes, budget {}", cfg.gb_bytes, budget.gb_bytes_max()));
  }
  return r;
}

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// Loop bounds of a layer in the tiled nest: batch, reduction channels per
// group, output channels, output rows, output columns.
struct LoopDims {
  std::int64_t n, cin, cout, h, w;
};

LoopDims dims_of(const LayerDescriptor& l) {
  return {1, l.in_channels / l.groups, l.out_channels, l.out_h, l.out_w};
}

struct ClippedTile {
  std::int64_t n, cin, cout, h, w;
};

ClippedTile clip(const Tiling& t, const LoopDims& d) {
  return {std::min<std::int64_t>(t.n, d.n), std::min<std::int64_t>(t.cin, d.cin),
          std::min<std::int64_t>(t.cout, d.cout), std::min<std::int64_t>(t.h, d.h),
          std::min<std::int64_t>(t.w, d.w)};
}

struct TileShape {
  ClippedTile t;
  std::int64_t in_channels;  // input channels touched by one cout tile
  std::int64_t in_rows, in_cols;
};

TileShape tile_shape(const LayerDescriptor& l, const Tiling& tiling) {
  const auto d = dims_of(l);
  TileShape s{clip(tiling, d), 0, 0, 0};
  const std::int64_t opg = l.out_channels / l.groups;
  const std::int64_t groups_touched = ceil_div(s.t.cout, opg);
  s.in_channels = std::min<std::int64_t>(l.in_channels, s.t.cin * groups_touched);
  s.in_rows = std::min<std::int64_t>((s.t.h - 1) * l.stride + l.kernel, l.in_h);
  s.in_cols = std::min<std::int64_t>((s.t.w - 1) * l.stride + l.kernel, l.in_w);
  return s;
}

void check_tiling(const Tiling& t) {
  if (t.n < 1 || t.cin < 1 || t.cout < 1 || t.h < 1 || t.w < 1) {
    throw std::invalid_argument("tile dimensions must be at least 1");
  }
}

}  // namespace

std::int64_t working_set_bytes(const LayerDescriptor& l, ChunkKind kind, const Dataflow& df,
                               const HardwareBudget& budget) {
  check_tiling(df.tiling);
  const auto s = tile_shape(l, df.tiling);
  const std::int64_t k2 = static_cast<std::int64_t>(l.kernel) * l.kernel;
  const std::int64_t w_bits = s.t.cout * s.t.cin * k2 * budget.weight_bits(kind);
  const std::int64_t in_bits = s.t.n * s.in_channels * s.in_rows * s.in_cols * budget.activation_bits;
  const std::int64_t out_bits = s.t.n * s.t.cout * s.t.h * s.t.w * budget.output_bits(kind);
  return ceil_div(2 * (w_bits + in_bits + out_bits), 8);
}

LayerCost layer_cost(const LayerDescriptor& l, const ChunkConfig& chunk, std::int64_t gb_bytes,
                     const HardwareBudget& budget) {
  if (chunk_for(l.op_type) != chunk.kind) {
    throw std::invalid_argument(fmt::format("{} layer cannot run on chunk {}", layer_type_code(l.op_type),
                                            chunk_name(chunk.kind)));
  }
  if (chunk.pe_count < 1) throw std::invalid_argument("chunk needs at least one PE");
  LayerCost cost;
  cost.working_set_bytes = working_set_bytes(l, chunk.kind, chunk.dataflow, budget);
  if (cost.working_set_bytes > gb_bytes) {
    throw TileExceedsBuffer(
        fmt::format("tile working set {} B exceeds global buffer {} B", cost.working_set_bytes, gb_bytes));
  }
  const auto d = dims_of(l);
  const auto s = tile_shape(l, chunk.dataflow.tiling);
  const auto& t = s.t;
  const std::int64_t k2 = static_cast<std::int64_t>(l.kernel) * l.kernel;

  const std::int64_t n_n = ceil_div(d.n, t.n), n_ci = ceil_div(d.cin, t.cin), n_co = ceil_div(d.cout, t.cout);
  const std::int64_t n_h = ceil_div(d.h, t.h), n_w = ceil_div(d.w, t.w);
  const std::int64_t tiles = n_n * n_ci * n_co * n_h * n_w;
  const std::int64_t tile_macs = t.n * t.cin * t.cout * t.h * t.w * k2;
  cost.compute_cycles = tiles * ceil_div(tile_macs, chunk.pe_count);

  // DRAM traffic in bits.
  const int abits = budget.activation_bits;
  const std::int64_t w_total = d.cout * d.cin * k2 * budget.weight_bits(chunk.kind);
  const std::int64_t n_sp = n_h * n_w;
  // Inputs for one pass over all spatial tiles, halos included.
  const std::int64_t in_pass_per_ch = std::max<std::int64_t>(n_sp * s.in_rows * s.in_cols,
                                                             static_cast<std::int64_t>(l.in_h) * l.in_w);
  // Row-streamed inputs share vertical halos between row tiles.
  const std::int64_t in_rows_per_ch =
      std::max<std::int64_t>(static_cast<std::int64_t>(l.in_h) * n_w * s.in_cols,
                             static_cast<std::int64_t>(l.in_h) * l.in_w);
  const std::int64_t in_once = l.in_channels * in_pass_per_ch * abits;
  const std::int64_t in_per_cout = n_co * s.in_channels * in_pass_per_ch * abits;
  const std::int64_t in_rows = n_co * s.in_channels * in_rows_per_ch * abits;
  const std::int64_t out_elems = d.n * d.cout * d.h * d.w;
  const std::int64_t out_final = out_elems * abits;
  const std::int64_t out_spill = (n_ci - 1) * out_elems * 2 * budget.output_bits(chunk.kind);

  std::int64_t bits = 0;
  switch (chunk.dataflow.order) {
    case LoopOrder::WS:  // weights resident; inputs per cout tile; partial sums spill per cin tile
      bits = w_total + in_per_cout + out_final + out_spill;
      break;
    case LoopOrder::OS:  // partial sums resident; weights per spatial tile
      bits = w_total * n_sp + in_per_cout + out_final;
      break;
    case LoopOrder::IS:  // inputs resident; weights per spatial tile; partial sums spill
      bits = w_total * n_sp + in_once + out_final + out_spill;
      break;
    case LoopOrder::RS:  // filter rows resident per row band; input rows streamed
      bits = w_total * n_h + in_rows + out_final + out_spill;
      break;
  }
  cost.traffic_bytes = ceil_div(bits, 8);
  cost.memory_cycles = static_cast<std::int64_t>(std::ceil(static_cast<double>(cost.traffic_bytes) /
                                                           budget.dram_bytes_per_cycle));
  return cost;
}

std::int64_t layer_latency(const LayerDescriptor& layer, const ChunkConfig& chunk, std::int64_t gb_bytes,
                           const HardwareBudget& budget) {
  return layer_cost(layer, chunk, gb_bytes, budget).cycles();
}

void EnergyCoeffs::check() const {
  if (!(e_mult > 0 && e_shift > 0 && e_add > 0)) throw std::invalid_argument("energy coefficients must be positive");
  if (!(e_mult > e_add)) throw std::invalid_argument("energy per multiply must exceed energy per add");
}

EnergyCoeffs fit_energy_coeffs(std::span<const EnergyRow> rows) {
  if (rows.size() < 3) throw SingularSystem("energy fit needs at least three rows");
  Eigen::MatrixXd a(rows.size(), 3);
  Eigen::VectorXd b(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    a(i, 0) = rows[i].ops.mults;
    a(i, 1) = rows[i].ops.shifts;
    a(i, 2) = rows[i].ops.adds;
    b(i) = rows[i].energy_mj;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw SingularSystem("energy fit rows are rank deficient");
  const Eigen::Vector3d x = qr.solve(b);
  return {x(0), x(1), x(2)};
}

PerfReport summarize_pipeline(const std::array<double, 3>& per_chunk_time_s, const OpCounts& ops,
                              const ResourceUsage& resources, const EnergyCoeffs& coeffs) {
  PerfReport r;
  r.per_chunk_time_s = per_chunk_time_s;
  r.latency_s = *std::max_element(per_chunk_time_s.begin(), per_chunk_time_s.end());
  if (!(r.latency_s > 0)) throw std::invalid_argument("pipeline interval must be positive");
  r.ops = ops;
  r.fps = 1.0 / r.latency_s;
  r.throughput_gops = ops.total() * 1e6 / r.latency_s / 1e9;
  r.resources = resources;
  r.gops_per_klut = resources.lut > 0 ? r.throughput_gops / (static_cast<double>(resources.lut) / 1000.0) : 0.0;
  r.gops_per_dsp = resources.dsp > 0 ? r.throughput_gops / resources.dsp : 0.0;
  r.energy_mj = coeffs.energy_mj(ops);
  return r;
}

std::vector<LayerDescriptor> layers_for(ChunkKind kind, std::span<const LayerDescriptor> layers) {
  std::vector<LayerDescriptor> out;
  for (const auto& l : layers) {
    if (chunk_for(l.op_type) == kind) out.push_back(l);
  }
  return out;
}

std::int64_t chunk_cycles(std::span<const LayerDescriptor> chunk_layers, const ChunkConfig& chunk,
                          std::int64_t gb_bytes, const HardwareBudget& budget) {
  std::int64_t total = 0;
  for (const auto& l : chunk_layers) total += layer_latency(l, chunk, gb_bytes, budget);
  return total;
}

PerfReport pipeline_perf(std::span<const LayerDescriptor> layers, std::span<const ChunkKind> assignment,
                         const AcceleratorConfig& cfg, const HardwareBudget& budget, const EnergyCoeffs& coeffs) {
  if (assignment.size() != layers.size()) throw std::invalid_argument("assignment must cover every layer");
  std::array<std::int64_t, 3> cycles{};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (assignment[i] != chunk_for(layers[i].op_type)) {
      throw std::invalid_argument(fmt::format("layer {} assigned to chunk {} but has type {}", i,
                                              chunk_name(assignment[i]), layer_type_code(layers[i].op_type)));
    }
    cycles[static_cast<int>(assignment[i])] +=
        layer_latency(layers[i], cfg.chunk(assignment[i]), cfg.gb_bytes, budget);
  }
  std::array<double, 3> times{};
  for (int k = 0; k < 3; ++k) times[k] = static_cast<double>(cycles[k]) / budget.frequency_hz;
  auto report = summarize_pipeline(times, count_ops(layers), resource_usage(cfg, budget.lut_overhead), coeffs);
  report.per_chunk_cycles = cycles;
  report.interval_cycles = *std::max_element(cycles.begin(), cycles.end());
  return report;
}

PerfReport pipeline_perf(std::span<const LayerDescriptor> layers, const AcceleratorConfig& cfg,
                         const HardwareBudget& budget, const EnergyCoeffs& coeffs) {
  std::vector<ChunkKind> assignment;
  assignment.reserve(layers.size());
  for (const auto& l : layers) assignment.push_back(chunk_for(l.op_type));
  return pipeline_perf(layers, assignment, cfg, budget, coeffs);
}

std::vector<int> tile_candidates(int max_dim, TilingLadder ladder) {
  if (max_dim < 1) return {1};
  std::vector<int> out;
  if (ladder == TilingLadder::PowerOfTwo) {
    for (int v = 1; v < max_dim; v *= 2) out.push_back(v);
  } else {
    for (int v = 1; v < max_dim; ++v) {
      if (max_dim % v == 0) out.push_back(v);
    }
  }
  out.push_back(max_dim);
  return out;
}

Tiling max_dims(std::span<const LayerDescriptor> chunk_layers) {
  Tiling m{1, 1, 1, 1, 1};
  for (const auto& l : chunk_layers) {
    m.cin = std::max(m.cin, l.in_channels / l.groups);
    m.cout = std::max(m.cout, l.out_channels);
    m.h = std::max(m.h, l.out_h);
    m.w = std::max(m.w, l.out_w);
  }
  return m;
}

std::vector<Dataflow> enumerate_dataflows(ChunkKind kind, std::span<const LayerDescriptor> chunk_layers,
                                          int pe_count, std::int64_t gb_bytes, const HardwareBudget& budget) {
  if (pe_count < 1) throw std::invalid_argument("chunk needs at least one PE");
  const auto m = max_dims(chunk_layers);
  const auto cin = tile_candidates(m.cin, budget.ladder);
  const auto cout = tile_candidates(m.cout, budget.ladder);
  const auto hs = tile_candidates(m.h, budget.ladder);
  const auto ws = tile_candidates(m.w, budget.ladder);
  std::vector<Dataflow> out;
  for (auto order : kLoopOrders) {
    for (int a : cin)
      for (int b : cout)
        for (int h : hs)
          for (int w : ws) {
            Dataflow df{order, {1, a, b, h, w}};
            bool fits = true;
            for (const auto& l : chunk_layers) {
              if (working_set_bytes(l, kind, df, budget) > gb_bytes) {
                fits = false;
                break;
              }
            }
            if (fits) out.push_back(df);
          }
  }
  if (out.empty()) {
    throw EmptyFeasibleSet(fmt::format("no dataflow for chunk {} fits a {} B buffer", chunk_name(kind), gb_bytes));
  }
  return out;
}

std::int64_t min_gb_size(const AcceleratorConfig& cfg, std::span<const LayerDescriptor> layers,
                         const HardwareBudget& budget) {
  std::int64_t need = 0;
  for (const auto& l : layers) {
    const auto kind = chunk_for(l.op_type);
    need = std::max(need, working_set_bytes(l, kind, cfg.chunk(kind).dataflow, budget));
  }
  return need;
}

}  // namespace hyco
