#include <doctest.h>

#include "hyco/cosearch.hpp"
#include "hyco/tables.hpp"
#include "hyco/workloads.hpp"

using namespace hyco;

namespace {

SubNetwork all_type(const SearchSpace& s, LayerType t) {
  SubNetwork n;
  n.first_conv_c = s.first_conv_channels.front();
  for (int i = 0; i < kNumStages; ++i) {
    const auto& st = s.stages[i];
    n.stages[i] = {st.channels.front(), st.expansions.front(), st.kernels.front(), t, st.depths.front()};
  }
  n.mbpool_c = s.mbpool_channels.front();
  return n;
}

ZenParams quick_zen() {
  ZenParams z;
  z.batch = 2;
  return z;
}

SearchParams small_params(std::uint64_t seed) {
  SearchParams p;
  p.population = 5;
  p.expand_size = 4;
  p.iterations = 2;
  p.top_k = 3;
  p.seed = seed;
  return p;
}

Constraint kv260_constraint() {
  Constraint c;
  c.max_dsp = 1248;
  c.max_lut = 117000;
  return c;
}

}  // namespace

TEST_SUITE("cosearch") {
  TEST_CASE("coarse search takes every DSP granted to the chunks") {
    const auto s = default_space();
    Rng rng(1);
    const auto layers = expand(s, sample_random(s, rng));
    const auto c = coarse_search(layers, kv260_budget());
    CHECK(c.chunk.pe_count == 1090);
    CHECK(c.gb_bytes == kv260_budget().gb_bytes_max());
    CHECK(c.cycles == chunk_cycles(layers_for(ChunkKind::C, layers), c.chunk, c.gb_bytes, kv260_budget()));
    const std::vector<LayerDescriptor> shift_only{make_layer(LayerType::Shift, 4, 4, 1, 1, 1, 4, 4)};
    const auto none = coarse_search(shift_only, kv260_budget());
    CHECK_FALSE(none.has_conv);
    CHECK(none.chunk.pe_count == 1);
  }

  TEST_CASE("coarse search is optimal over smaller conv PE counts") {
    auto b = desk_budget();
    const std::vector<LayerDescriptor> ls{make_layer(LayerType::Conv, 8, 16, 3, 1, 1, 8, 8),
                                          make_layer(LayerType::Conv, 16, 24, 1, 1, 1, 8, 8)};
    const auto c = coarse_search(ls, b);
    for (int pe : b.pe_grid) {
      if (pe > c.chunk.pe_count) continue;
      for (const auto& df : enumerate_dataflows(ChunkKind::C, ls, pe, b.gb_bytes_max(), b)) {
        CHECK(c.cycles <= chunk_cycles(ls, {ChunkKind::C, pe, df}, b.gb_bytes_max(), b));
      }
    }
  }

  TEST_CASE("proportional PE initialisation") {
    const auto d = load_paper_data(default_paper_data_path());
    const auto macs = macs_from_row(find_op_row(d, "CIFAR100", "Ours-C").ops);
    const auto init = proportional_init(macs, 1090, kv260_budget());
    CHECK(init.shift_exact == doctest::Approx(1090 * 14.14 / 56.61));
    CHECK(init.shift_unclamped == 272);
    CHECK(init.shift == 272);
    const auto conv_only = proportional_init({1000, 0, 0}, 1090, kv260_budget());
    CHECK(conv_only.shift == 1);
    CHECK(conv_only.adder == 1);
    // clamped to the LUT budget left after conv PEs and overhead
    const auto huge = proportional_init({1000, 100000, 100000}, 1090, kv260_budget());
    const auto b = kv260_budget();
    CHECK(kLutPerShiftPe * huge.shift + kLutPerAdderPe * huge.adder <= b.lut_total - b.lut_overhead - kLutPerConvPe * 1090);
    CHECK(huge.shift >= 1);
    auto tight = kv260_budget();
    tight.lut_total = 12000 + 37 * 1090 + 10;
    CHECK_THROWS_AS(proportional_init(macs, 1090, tight), InfeasibleBudget);
  }

  TEST_CASE("fine search beats its own initial point") {
    const auto s = default_space();
    const auto b = kv260_budget();
    Rng rng(2);
    for (int i = 0; i < 4; ++i) {
      const auto layers = expand(s, sample_random(s, rng));
      const auto coarse = coarse_search(layers, b);
      const auto fine = fine_search(layers, b, coarse);
      AcceleratorConfig init;
      init.chunk_c = coarse.chunk;
      init.chunk_s = {ChunkKind::S, fine.init.shift, manual_dataflow(layers_for(ChunkKind::S, layers))};
      init.chunk_a = {ChunkKind::A, fine.init.adder, manual_dataflow(layers_for(ChunkKind::A, layers))};
      init.gb_bytes = b.gb_bytes_max();
      const auto r = pipeline_perf(layers, init, b, {});
      CHECK(fine.interval_cycles <= r.interval_cycles);
      CHECK(fine.config.gb_bytes == min_gb_size(fine.config, layers, b));
    }
  }

  TEST_CASE("search_accelerator: deterministic, parallel equals serial") {
    const auto s = default_space();
    const auto b = kv260_budget();
    Rng rng(3);
    const auto n = sample_random(s, rng);
    const auto a = search_accelerator(n, s, b, {});
    const auto c = search_accelerator(n, s, b, {});
    const auto d = search_accelerator(n, s, b, {}, false);
    CHECK(a.config == c.config);
    CHECK(a.config == d.config);
    CHECK(a.nodes == d.nodes);
    CHECK(a.report.latency_s == d.report.latency_s);
    CHECK(a.report.resources.dsp == 545);
    CHECK(a.report.resources.lut <= b.lut_total);
  }

  TEST_CASE("all-conv genome leaves shift and adder chunks at one PE") {
    const auto s = default_space();
    const auto n = all_type(s, LayerType::Conv);
    const auto r = search_accelerator(n, s, kv260_budget(), {});
    CHECK(r.config.chunk_s.pe_count == 1);
    CHECK(r.config.chunk_a.pe_count == 1);
    CHECK(r.report.latency_s == r.report.per_chunk_time_s[0]);
  }

  TEST_CASE("infeasible budget surfaces as InfeasibleBudget") {
    const auto s = default_space();
    auto b = kv260_budget();
    b.lut_total = 20000;
    CHECK_THROWS_AS(search_accelerator(all_type(s, LayerType::Shift), s, b, {}), InfeasibleBudget);
  }

  TEST_CASE("oracle: one-point grid returns that point's best dataflows") {
    const auto b = desk_budget();
    const std::vector<LayerDescriptor> ls{make_layer(LayerType::Conv, 4, 8, 3, 1, 1, 4, 4),
                                          make_layer(LayerType::Shift, 8, 8, 1, 1, 1, 4, 4),
                                          make_layer(LayerType::Adder, 8, 8, 3, 1, 8, 4, 4)};
    const OracleGrid g{{16}, {8}, {4}};
    const auto o = exhaustive_oracle(ls, b, {}, g);
    CHECK(o.config.chunk_c.pe_count == 16);
    CHECK(o.config.chunk_s.pe_count == 8);
    CHECK(o.config.chunk_a.pe_count == 4);
    for (auto k : kChunkKinds) {
      const auto chunk = layers_for(k, ls);
      const auto best = serial::best_dataflow(k, chunk, o.config.chunk(k).pe_count, b.gb_bytes_max(), b);
      CHECK(chunk_cycles(chunk, o.config.chunk(k), b.gb_bytes_max(), b) == best.cycles);
    }
    CHECK(o.nodes == oracle_node_estimate(ls, b, g));
  }

  TEST_CASE("oracle: cap and grid validation") {
    const auto b = desk_budget();
    const std::vector<LayerDescriptor> ls{make_layer(LayerType::Conv, 4, 8, 3, 1, 1, 4, 4)};
    auto g = desk_grid();
    g.node_cap = 1000;
    CHECK_THROWS_AS(exhaustive_oracle(ls, b, {}, g), GridTooLarge);
    CHECK_THROWS_AS(exhaustive_oracle(ls, b, {}, OracleGrid{{}, {1}, {1}}), std::invalid_argument);
    CHECK_THROWS_AS(exhaustive_oracle(ls, b, {}, OracleGrid{{0}, {1}, {1}}), std::invalid_argument);
  }

  TEST_CASE("oracle: single-chunk workload matches the search exactly") {
    const auto b = desk_budget();
    const std::vector<LayerDescriptor> ls{make_layer(LayerType::Conv, 8, 16, 3, 1, 1, 8, 8),
                                          make_layer(LayerType::Conv, 16, 16, 1, 1, 1, 8, 8)};
    const auto s = search_layers(ls, b, {});
    const auto o = exhaustive_oracle(ls, b, {}, desk_grid());
    CHECK(s.report.throughput_gops == o.report.throughput_gops);
  }

  TEST_CASE("oracle: four-layer workload within 5% and 10x fewer nodes") {
    const auto b = desk_budget();
    const std::vector<LayerDescriptor> ls{make_layer(LayerType::Conv, 3, 16, 3, 1, 1, 8, 8),
                                          make_layer(LayerType::Shift, 16, 16, 3, 1, 16, 8, 8),
                                          make_layer(LayerType::Adder, 16, 24, 1, 1, 1, 8, 8),
                                          make_layer(LayerType::Shift, 24, 16, 1, 1, 1, 8, 8)};
    const auto s = search_layers(ls, b, {});
    const auto o = exhaustive_oracle(ls, b, {}, desk_grid());
    CHECK(s.report.throughput_gops >= 0.95 * o.report.throughput_gops);
    CHECK(o.report.throughput_gops >= s.report.throughput_gops);
    CHECK(o.nodes >= 10 * s.nodes);
  }

  TEST_CASE("oracle: serial and parallel runs agree") {
    const auto b = desk_budget();
    const std::vector<LayerDescriptor> ls{make_layer(LayerType::Conv, 3, 8, 3, 1, 1, 4, 4),
                                          make_layer(LayerType::Adder, 8, 8, 1, 1, 1, 4, 4)};
    const OracleGrid g{{8, 16, 32}, {1, 2}, {4, 8, 16}};
    const auto a = exhaustive_oracle(ls, b, {}, g);
    const auto c = exhaustive_oracle(ls, b, {}, g);
    CHECK(a.config == c.config);
    CHECK(a.nodes == c.nodes);
  }

  TEST_CASE("ablation modes produce valid configs") {
    const auto b = desk_budget();
    const auto suite = desk_suite(1, 3);
    for (const auto& w : suite.workloads) {
      for (auto m : {SearchMode::CoarseFine, SearchMode::CoarseOnly, SearchMode::FineOnly}) {
        const auto r = search_layers(w.layers, b, {}, m);
        CHECK(r.report.throughput_gops > 0);
        CHECK_NOTHROW(check_fits(r.config, b));
        for (auto k : kChunkKinds) {
          const int pe = r.config.chunk(k).pe_count;
          CHECK(std::find(b.pe_grid.begin(), b.pe_grid.end(), pe) != b.pe_grid.end());
        }
      }
    }
    const std::vector<LayerDescriptor> one{make_layer(LayerType::Shift, 16, 16, 1, 1, 1, 4, 4)};
    const auto mdf = manual_dataflow(one);
    CHECK(mdf.order == LoopOrder::WS);
    CHECK(mdf.tiling == Tiling{1, 16, 16, 4, 4});
  }

  TEST_CASE("pareto front") {
    const std::vector<std::pair<double, int>> pts{{10, 5}, {12, 7}, {9, 2}, {12, 6}, {8, 2}, {11, 9}};
    const auto f = pareto_front(pts);
    CHECK(f == std::vector<std::size_t>{3, 0, 2});
  }

  TEST_CASE("candidate seeds") {
    const auto s = default_space();
    Rng rng(4);
    const auto a = sample_random(s, rng), b = sample_random(s, rng);
    CHECK(candidate_seed(1, a) == candidate_seed(1, a));
    CHECK(candidate_seed(1, a) != candidate_seed(2, a));
    CHECK(candidate_seed(1, a) != candidate_seed(1, b));
  }

  TEST_CASE("parameter and constraint validation") {
    SearchParams p;
    CHECK_NOTHROW(p.check());
    p.top_k = 101;
    CHECK_THROWS_AS(p.check(), std::invalid_argument);
    p = {};
    p.mutate_prob = 1.5;
    CHECK_THROWS_AS(p.check(), std::invalid_argument);
    Constraint c;
    CHECK_THROWS_AS(c.check(), std::invalid_argument);
    c.max_lut = 1000;
    CHECK_NOTHROW(c.check());
    PerfReport r;
    r.resources.lut = 999;
    r.latency_s = 1;
    CHECK(c.satisfied_by(r));
    r.resources.lut = 1001;
    CHECK_FALSE(c.satisfied_by(r));
  }

  TEST_CASE("cosearch: zero iterations returns the best of the initial population") {
    auto p = small_params(3);
    p.iterations = 0;
    const auto r = cosearch(default_space(), kv260_budget(), kv260_constraint(), p, {}, quick_zen());
    CHECK(r.log.size() == 1);
    CHECK(r.top.size() == 3);
    CHECK(r.top.front().combined_rank <= r.top.back().combined_rank);
  }

  TEST_CASE("cosearch: results are feasible, sorted, elitist and deterministic") {
    const auto s = default_space();
    const auto b = kv260_budget();
    auto c = kv260_constraint();
    c.max_lut = 110000;
    const auto p = small_params(11);
    const auto r = cosearch(s, b, c, p, {}, quick_zen());
    const auto again = cosearch(s, b, c, p, {}, quick_zen());
    REQUIRE(r.top.size() == again.top.size());
    for (std::size_t i = 0; i < r.top.size(); ++i) {
      CHECK(r.top[i].net == again.top[i].net);
      CHECK(r.top[i].config == again.top[i].config);
      CHECK(r.top[i].zen_score == again.top[i].zen_score);
    }
    for (std::size_t i = 0; i < r.top.size(); ++i) {
      CHECK_FALSE(validate(s, r.top[i].net).has_value());
      CHECK(c.satisfied_by(r.top[i].report));
      if (i > 0) CHECK(r.top[i - 1].combined_rank <= r.top[i].combined_rank);
    }
    REQUIRE(r.log.size() == 3);
    for (std::size_t i = 1; i < r.log.size(); ++i) CHECK(r.log[i].best_reference_rank <= r.log[i - 1].best_reference_rank);
    CHECK(r.evaluated.size() == r.evaluated_reference_rank.size());
  }

  TEST_CASE("cosearch: unreachable constraint empties the population") {
    auto c = kv260_constraint();
    c.max_latency_s = 1e-9;
    CHECK_THROWS_AS(cosearch(default_space(), kv260_budget(), c, small_params(1), {}, quick_zen()), EmptyPopulation);
  }
}
