#include "hyco/workloads.hpp"

#include <random>

#include <fmt/format.h>

namespace hyco {

HardwareBudget desk_budget() {
  HardwareBudget b;
  b.dsp_total = 64;
  b.dsp_chunk_fraction = 0.5;
  b.lut_overhead = 0;
  b.lut_total = 64LL * (kLutPerConvPe + kLutPerShiftPe + kLutPerAdderPe);
  b.bram_bits_total = 16LL * 1024 * 8;
  b.pe_grid = {1, 2, 4, 8, 16, 32, 48, 64};
  return b;
}

OracleGrid desk_grid() {
  const auto g = desk_budget().pe_grid;
  return {g, g, g};
}

namespace {

LayerDescriptor random_layer(Rng& rng, LayerType t, int in_c, int in_hw) {
  auto pick = [&](std::initializer_list<int> xs) {
    std::uniform_int_distribution<std::size_t> d(0, xs.size() - 1);
    return *(xs.begin() + d(rng));
  };
  const int kernel = pick({1, 3});
  const int stride = in_hw >= 4 ? pick({1, 1, 2}) : 1;
  const bool depthwise = kernel == 3 && pick({0, 1}) == 1;
  const int out_c = depthwise ? in_c : pick({4, 8, 12, 16, 24, 32});
  return make_layer(t, in_c, out_c, kernel, stride, depthwise ? in_c : 1, in_hw, in_hw);
}

}  // namespace

WorkloadSuite desk_suite(std::uint64_t seed, int count) {
  WorkloadSuite s{desk_budget(), desk_grid(), {}};
  Rng rng(seed);
  for (int w = 0; w < count; ++w) {
    std::uniform_int_distribution<int> nl(3, 6);
    const int n = nl(rng);
    std::vector<LayerType> types{LayerType::Conv, LayerType::Shift, LayerType::Adder};
    std::uniform_int_distribution<int> tt(0, 2);
    while (static_cast<int>(types.size()) < n) types.push_back(static_cast<LayerType>(tt(rng)));
    std::shuffle(types.begin(), types.end(), rng);
    Workload wl;
    wl.name = fmt::format("desk-{}", w);
    std::uniform_int_distribution<int> hw0(0, 2);
    int in_c = 3;
    int hw = std::array{4, 6, 8}[hw0(rng)];
    for (auto t : types) {
      auto l = random_layer(rng, t, in_c, hw);
      wl.layers.push_back(l);
      in_c = l.out_channels;
      hw = l.out_h;
    }
    s.workloads.push_back(std::move(wl));
  }
  Workload conv;
  conv.name = "conv-only";
  conv.layers.push_back(make_layer(LayerType::Conv, 8, 16, 3, 1, 1, 8, 8));
  conv.layers.push_back(make_layer(LayerType::Conv, 16, 16, 1, 1, 1, 8, 8));
  s.workloads.push_back(std::move(conv));
  return s;
}

json to_json(const LayerDescriptor& l) {
  return {{"type", std::string(1, layer_type_code(l.op_type))},
          {"in_channels", l.in_channels},
          {"out_channels", l.out_channels},
          {"kernel", l.kernel},
          {"stride", l.stride},
          {"groups", l.groups},
          {"in_h", l.in_h},
          {"in_w", l.in_w}};
}

LayerDescriptor layer_from_json(const json& j, const std::string& path) {
  try {
    const auto code = j.at("type").get<std::string>();
    if (code.size() != 1) throw ParseError(fmt::format("{}.type: '{}' is not one of C/S/A", path, code));
    const auto t = layer_type_from_code(code[0]);
    const int in_c = j.at("in_channels").get<int>();
    const int out_c = j.at("out_channels").get<int>();
    const int groups = j.value("groups", 1);
    if (in_c < 1 || out_c < 1 || groups < 1 || in_c % groups != 0 || out_c % groups != 0) {
      throw ParseError(fmt::format("{}: channels must be positive and divisible by groups", path));
    }
    const int h = j.at("in_h").get<int>();
    return make_layer(t, in_c, out_c, j.at("kernel").get<int>(), j.value("stride", 1), groups, h,
                      j.value("in_w", h));
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path, e.what()));
  } catch (const std::invalid_argument& e) {
    if (dynamic_cast<const ParseError*>(&e) == nullptr) throw ParseError(fmt::format("{}: {}", path, e.what()));
    throw;
  }
}

json to_json(const WorkloadSuite& s) {
  json wls = json::array();
  for (const auto& w : s.workloads) {
    json layers = json::array();
    for (const auto& l : w.layers) layers.push_back(to_json(l));
    wls.push_back({{"name", w.name}, {"layers", layers}});
  }
  return {{"budget", to_json(s.budget)},
          {"grid", {{"pe_c", s.grid.pe_c}, {"pe_s", s.grid.pe_s}, {"pe_a", s.grid.pe_a}, {"node_cap", s.grid.node_cap}}},
          {"workloads", wls}};
}

WorkloadSuite suite_from_json(const json& j) {
  WorkloadSuite s{desk_budget(), desk_grid(), {}};
  if (j.contains("budget")) {
    from_json_into(j.at("budget"), s.budget);
    if (!s.budget.pe_grid.empty()) s.grid = {s.budget.pe_grid, s.budget.pe_grid, s.budget.pe_grid};
  }
  try {
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      s.grid.pe_c = g.at("pe_c").get<std::vector<int>>();
      s.grid.pe_s = g.at("pe_s").get<std::vector<int>>();
      s.grid.pe_a = g.at("pe_a").get<std::vector<int>>();
      s.grid.node_cap = g.value("node_cap", s.grid.node_cap);
    }
    const auto& wls = j.at("workloads");
    for (std::size_t i = 0; i < wls.size(); ++i) {
      Workload w;
      w.name = wls[i].value("name", fmt::format("workload-{}", i));
      const auto& layers = wls[i].at("layers");
      for (std::size_t k = 0; k < layers.size(); ++k) {
        w.layers.push_back(layer_from_json(layers[k], fmt::format("workloads[{}].layers[{}]", i, k)));
      }
      if (w.layers.empty()) throw ParseError(fmt::format("workloads[{}]: no layers", i));
      s.workloads.push_back(std::move(w));
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("workload suite: {}", e.what()));
  }
  return s;
}

WorkloadComparison compare_workload(const Workload& w, const HardwareBudget& budget, const OracleGrid& grid,
                                    const EnergyCoeffs& coeffs) {
  WorkloadComparison c;
  c.name = w.name;
  c.searched = search_layers(w.layers, budget, coeffs, SearchMode::CoarseFine);
  c.oracle = exhaustive_oracle(w.layers, budget, coeffs, grid);
  c.coarse_only_gops = search_layers(w.layers, budget, coeffs, SearchMode::CoarseOnly).report.throughput_gops;
  c.fine_only_gops = search_layers(w.layers, budget, coeffs, SearchMode::FineOnly).report.throughput_gops;
  c.throughput_ratio = c.searched.report.throughput_gops / c.oracle.report.throughput_gops;
  c.node_ratio = static_cast<double>(c.oracle.nodes) / static_cast<double>(std::max<std::int64_t>(1, c.searched.nodes));
  for (auto k : kChunkKinds) c.chunks_used += layers_for(k, w.layers).empty() ? 0 : 1;
  return c;
}

}  // namespace hyco
