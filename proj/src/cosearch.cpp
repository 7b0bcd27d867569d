#include "hyco/cosearch.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>

namespace hyco {

namespace {

std::int64_t lut_of(int pe_c, int pe_s, int pe_a, const HardwareBudget& b) {
  return static_cast<std::int64_t>(kLutPerConvPe) * pe_c + static_cast<std::int64_t>(kLutPerShiftPe) * pe_s +
         static_cast<std::int64_t>(kLutPerAdderPe) * pe_a + b.lut_overhead;
}

bool dsp_fits(int pe_c, const HardwareBudget& b) { return kDspPerConvPe * pe_c <= static_cast<double>(b.dsp_total); }

int max_conv_pe(const HardwareBudget& b) { return b.floor_pe(std::max(1, static_cast<int>(2 * b.dsp_for_chunks()))); }

}  // namespace

CoarseResult coarse_search(std::span<const LayerDescriptor> layers, const HardwareBudget& budget, bool parallel) {
  budget.check();
  CoarseResult r;
  r.gb_bytes = budget.gb_bytes_max();
  const auto conv = layers_for(ChunkKind::C, layers);
  if (conv.empty()) {
    r.has_conv = false;
    r.chunk = ChunkConfig{ChunkKind::C, budget.floor_pe(1), {}};
    return r;
  }
  const int pe = max_conv_pe(budget);
  const auto best = best_dataflow(ChunkKind::C, conv, pe, r.gb_bytes, budget, parallel);
  r.chunk = ChunkConfig{ChunkKind::C, pe, best.dataflow};
  r.cycles = best.cycles;
  r.nodes = best.evaluated;
  return r;
}

PeInit proportional_init(const MacCounts& macs, int pe_c, const HardwareBudget& budget) {
  PeInit init;
  const double conv = static_cast<double>(std::max<std::int64_t>(macs.conv, 1));
  init.shift_exact = pe_c * static_cast<double>(macs.shift) / conv;
  init.adder_exact = pe_c * static_cast<double>(macs.adder) / conv;
  init.shift_unclamped = static_cast<int>(std::lround(init.shift_exact));
  init.adder_unclamped = static_cast<int>(std::lround(init.adder_exact));

  const std::int64_t avail = budget.lut_total - budget.lut_overhead - static_cast<std::int64_t>(kLutPerConvPe) * pe_c;
  if (avail < kLutPerShiftPe + kLutPerAdderPe) {
    throw InfeasibleBudget(fmt::format("{} LUT cannot host {} conv PEs plus one shift and one adder PE",
                                       budget.lut_total, pe_c));
  }
  std::int64_t s = std::max(1, init.shift_unclamped);
  std::int64_t a = std::max(1, init.adder_unclamped);
  const std::int64_t need = kLutPerShiftPe * s + kLutPerAdderPe * a;
  if (need > avail) {
    const double f = static_cast<double>(avail) / static_cast<double>(need);
    s = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(s * f)));
    a = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(a * f)));
    while (kLutPerShiftPe * s + kLutPerAdderPe * a > avail) {
      if (s >= a && s > 1) {
        --s;
      } else {
        --a;
      }
    }
  }
  init.shift = static_cast<int>(s);
  init.adder = static_cast<int>(a);
  return init;
}

namespace {

std::vector<int> pe_steps(int init, bool has_layers, const HardwareBudget& b) {
  if (!has_layers) return {b.floor_pe(1)};
  std::set<int> out;
  for (double step : kFineSteps) out.insert(b.snap_pe(std::max(1, static_cast<int>(std::lround(init * step)))));
  return {out.begin(), out.end()};
}

}  // namespace

FineResult fine_search(std::span<const LayerDescriptor> layers, const HardwareBudget& budget,
                       const CoarseResult& coarse, bool parallel) {
  FineResult r;
  const int pe_c = coarse.chunk.pe_count;
  r.init = proportional_init(count_macs(layers), pe_c, budget);
  const auto shift_layers = layers_for(ChunkKind::S, layers);
  const auto adder_layers = layers_for(ChunkKind::A, layers);
  const auto s_pes = pe_steps(r.init.shift, !shift_layers.empty(), budget);
  const auto a_pes = pe_steps(r.init.adder, !adder_layers.empty(), budget);

  std::map<int, ChunkChoice> s_best, a_best;
  for (int pe : s_pes) {
    if (lut_of(pe_c, pe, 1, budget) > budget.lut_total) continue;
    s_best[pe] = best_dataflow(ChunkKind::S, shift_layers, pe, coarse.gb_bytes, budget, parallel);
    r.nodes += s_best[pe].evaluated;
  }
  for (int pe : a_pes) {
    if (lut_of(pe_c, 1, pe, budget) > budget.lut_total) continue;
    a_best[pe] = best_dataflow(ChunkKind::A, adder_layers, pe, coarse.gb_bytes, budget, parallel);
    r.nodes += a_best[pe].evaluated;
  }

  std::optional<std::tuple<std::int64_t, std::int64_t, int, int>> best;
  for (const auto& [ps, cs] : s_best) {
    for (const auto& [pa, ca] : a_best) {
      ++r.nodes;
      const auto lut = lut_of(pe_c, ps, pa, budget);
      if (lut > budget.lut_total) continue;
      const auto interval = std::max({coarse.cycles, cs.cycles, ca.cycles});
      const auto key = std::tuple(interval, lut, ps, pa);
      if (!best || key < *best) best = key;
    }
  }
  if (!best) throw InfeasibleBudget("no shift/adder PE split fits the LUT budget");
  const auto [interval, lut, ps, pa] = *best;
  r.interval_cycles = interval;
  r.config.chunk_c = coarse.chunk;
  r.config.chunk_s = ChunkConfig{ChunkKind::S, ps, s_best.at(ps).dataflow};
  r.config.chunk_a = ChunkConfig{ChunkKind::A, pa, a_best.at(pa).dataflow};
  r.config.gb_bytes = min_gb_size(r.config, layers, budget);
  return r;
}

const char* search_mode_name(SearchMode m) {
  switch (m) {
    case SearchMode::CoarseFine: return "coarse+fine";
    case SearchMode::CoarseOnly: return "coarse-only";
    case SearchMode::FineOnly: return "fine-only";
  }
  return "?";
}

Dataflow manual_dataflow(std::span<const LayerDescriptor> chunk_layers) {
  const auto m = max_dims(chunk_layers);
  return {LoopOrder::WS, {1, std::min(m.cin, 16), std::min(m.cout, 16), std::min(m.h, 8), std::min(m.w, 8)}};
}

namespace {

AccelResult finish(std::span<const LayerDescriptor> layers, AcceleratorConfig cfg, std::int64_t nodes,
                   const HardwareBudget& budget, const EnergyCoeffs& coeffs) {
  cfg.gb_bytes = std::max<std::int64_t>(1, min_gb_size(cfg, layers, budget));
  AccelResult r;
  try {
    check_fits(cfg, budget);
  } catch (const BudgetExceeded& e) {
    throw InfeasibleBudget(e.what());
  }
  r.config = cfg;
  r.report = pipeline_perf(layers, cfg, budget, coeffs);
  r.nodes = nodes;
  return r;
}

}  // namespace

AccelResult search_layers(std::span<const LayerDescriptor> layers, const HardwareBudget& budget,
                          const EnergyCoeffs& coeffs, SearchMode mode, bool parallel) {
  if (layers.empty()) throw std::invalid_argument("cannot search an accelerator for an empty layer list");
  budget.check();
  switch (mode) {
    case SearchMode::CoarseFine: {
      const auto coarse = coarse_search(layers, budget, parallel);
      const auto fine = fine_search(layers, budget, coarse, parallel);
      return finish(layers, fine.config, coarse.nodes + fine.nodes, budget, coeffs);
    }
    case SearchMode::CoarseOnly: {
      const auto coarse = coarse_search(layers, budget, parallel);
      AcceleratorConfig cfg;
      cfg.chunk_c = coarse.chunk;
      const int pe = budget.snap_pe(std::max(1, coarse.chunk.pe_count / 4));
      cfg.chunk_s = {ChunkKind::S, pe, manual_dataflow(layers_for(ChunkKind::S, layers))};
      cfg.chunk_a = {ChunkKind::A, pe, manual_dataflow(layers_for(ChunkKind::A, layers))};
      return finish(layers, cfg, coarse.nodes, budget, coeffs);
    }
    case SearchMode::FineOnly: {
      const auto conv = layers_for(ChunkKind::C, layers);
      CoarseResult manual;
      manual.gb_bytes = budget.gb_bytes_max();
      manual.chunk = {ChunkKind::C, conv.empty() ? budget.floor_pe(1) : max_conv_pe(budget), manual_dataflow(conv)};
      manual.cycles = chunk_cycles(conv, manual.chunk, manual.gb_bytes, budget);
      const auto fine = fine_search(layers, budget, manual, parallel);
      return finish(layers, fine.config, fine.nodes, budget, coeffs);
    }
  }
  throw std::logic_error("unknown search mode");
}

AccelResult search_accelerator(const SubNetwork& net, const SearchSpace& space, const HardwareBudget& budget,
                               const EnergyCoeffs& coeffs, bool parallel) {
  const auto layers = expand(space, net);
  return search_layers(layers, budget, coeffs, SearchMode::CoarseFine, parallel);
}

// ---------------------------------------------------------------------------

namespace {

struct OracleChunk {
  std::vector<LayerDescriptor> layers;
  std::array<std::vector<Dataflow>, 4> by_order;  // candidate dataflows per loop order
};

OracleChunk oracle_chunk(ChunkKind kind, std::span<const LayerDescriptor> layers, const HardwareBudget& budget) {
  OracleChunk c;
  c.layers = layers_for(kind, layers);
  if (c.layers.empty()) return c;
  const auto m = max_dims(c.layers);
  const auto cin = tile_candidates(m.cin, budget.ladder);
  const auto cout = tile_candidates(m.cout, budget.ladder);
  const auto hs = tile_candidates(m.h, budget.ladder);
  const auto ws = tile_candidates(m.w, budget.ladder);
  for (auto order : kLoopOrders)
    for (int a : cin)
      for (int b : cout)
        for (int h : hs)
          for (int w : ws) c.by_order[static_cast<int>(order)].push_back({order, {1, a, b, h, w}});
  return c;
}

std::int64_t tilings_per_order(const OracleChunk& c) {
  return c.layers.empty() ? 1 : static_cast<std::int64_t>(c.by_order[0].size());
}

struct OraclePoint {
  std::int64_t interval = std::numeric_limits<std::int64_t>::max();
  std::int64_t lut = 0;
  std::array<int, 3> pe{};
  std::array<ChunkChoice, 3> choice{};

  auto key() const {
    return std::tuple(interval, lut, pe, static_cast<int>(choice[0].dataflow.order),
                      static_cast<int>(choice[1].dataflow.order), static_cast<int>(choice[2].dataflow.order),
                      choice[0].dataflow.tiling, choice[1].dataflow.tiling, choice[2].dataflow.tiling);
  }
};

// Scans every tiling of one chunk under a fixed loop order.
std::optional<ChunkChoice> scan_tilings(ChunkKind kind, const OracleChunk& c, int pe, LoopOrder order,
                                        std::int64_t gb, const HardwareBudget& budget, std::int64_t& nodes) {
  if (c.layers.empty()) {
    ++nodes;
    ChunkChoice empty;
    empty.dataflow.order = order;
    return empty;
  }
  std::optional<ChunkChoice> best;
  for (const auto& df : c.by_order[static_cast<int>(order)]) {
    ++nodes;
    auto r = evaluate_dataflow(kind, c.layers, pe, df, gb, budget);
    if (r && (!best || std::tuple(r->cycles, r->dataflow.tiling) < std::tuple(best->cycles, best->dataflow.tiling))) {
      best = r;
    }
  }
  return best;
}

}  // namespace

std::int64_t oracle_node_estimate(std::span<const LayerDescriptor> layers, const HardwareBudget& budget,
                                  const OracleGrid& grid) {
  std::int64_t per_point = 1;
  for (auto k : kChunkKinds) per_point += tilings_per_order(oracle_chunk(k, layers, budget));
  const auto triples = static_cast<std::int64_t>(grid.pe_c.size() * grid.pe_s.size() * grid.pe_a.size());
  return triples * 64 * per_point;
}

AccelResult exhaustive_oracle(std::span<const LayerDescriptor> layers, const HardwareBudget& budget,
                              const EnergyCoeffs& coeffs, const OracleGrid& grid) {
  if (layers.empty()) throw std::invalid_argument("cannot search an accelerator for an empty layer list");
  if (grid.pe_c.empty() || grid.pe_s.empty() || grid.pe_a.empty()) throw std::invalid_argument("empty PE grid");
  for (const auto* g : {&grid.pe_c, &grid.pe_s, &grid.pe_a}) {
    for (int pe : *g) {
      if (pe < 1) throw std::invalid_argument("PE grid values must be at least 1");
    }
  }
  budget.check();
  const auto estimate = oracle_node_estimate(layers, budget, grid);
  if (estimate > grid.node_cap) {
    throw GridTooLarge(fmt::format("oracle would explore {} nodes, cap is {}", estimate, grid.node_cap));
  }
  const std::array<OracleChunk, 3> chunks{oracle_chunk(ChunkKind::C, layers, budget),
                                          oracle_chunk(ChunkKind::S, layers, budget),
                                          oracle_chunk(ChunkKind::A, layers, budget)};
  const std::int64_t gb = budget.gb_bytes_max();

  std::vector<std::array<int, 3>> triples;
  for (int c : grid.pe_c)
    for (int s : grid.pe_s)
      for (int a : grid.pe_a) {
        if (dsp_fits(c, budget) && lut_of(c, s, a, budget) <= budget.lut_total) triples.push_back({c, s, a});
      }
  if (triples.empty()) throw InfeasibleBudget("no PE triple on the grid fits the budget");

  const auto count = static_cast<std::int64_t>(triples.size());
  std::optional<OraclePoint> best;
  std::int64_t nodes = 0;
  std::exception_ptr error;
#pragma omp parallel reduction(+ : nodes)
  {
    std::optional<OraclePoint> local;
#pragma omp for schedule(dynamic)
    for (std::int64_t t = 0; t < count; ++t) {
      try {
        const auto pe = triples[t];
        for (auto oc : kLoopOrders)
          for (auto os : kLoopOrders)
            for (auto oa : kLoopOrders) {
              ++nodes;
              const std::array<LoopOrder, 3> orders{oc, os, oa};
              OraclePoint p;
              p.pe = pe;
              p.lut = lut_of(pe[0], pe[1], pe[2], budget);
              bool ok = true;
              std::int64_t interval = 0;
              for (int k = 0; k < 3 && ok; ++k) {
                auto c = scan_tilings(kChunkKinds[k], chunks[k], pe[k], orders[k], gb, budget, nodes);
                if (!c) {
                  ok = false;
                } else {
                  p.choice[k] = *c;
                  interval = std::max(interval, c->cycles);
                }
              }
              if (!ok) continue;
              p.interval = interval;
              if (!local || p.key() < local->key()) local = p;
            }
      } catch (...) {
#pragma omp critical
        if (!error) error = std::current_exception();
      }
    }
#pragma omp critical
    {
      if (local && (!best || local->key() < best->key())) best = local;
    }
  }
  if (error) std::rethrow_exception(error);
  if (!best) throw EmptyFeasibleSet("no joint dataflow fits the buffer");

  AcceleratorConfig cfg;
  for (int k = 0; k < 3; ++k) {
    cfg.chunk(kChunkKinds[k]) = ChunkConfig{kChunkKinds[k], best->pe[k], best->choice[k].dataflow};
  }
  return finish(layers, cfg, nodes, budget, coeffs);
}

// ---------------------------------------------------------------------------

void Constraint::check() const {
  if (!max_dsp && !max_lut) throw std::invalid_argument("constraint needs max_dsp or max_lut");
  if (max_dsp && *max_dsp < 0) throw std::invalid_argument("max_dsp must be non-negative");
  if (max_lut && *max_lut < 0) throw std::invalid_argument("max_lut must be non-negative");
}

bool Constraint::satisfied_by(const PerfReport& r) const {
  if (max_dsp && r.resources.dsp > *max_dsp) return false;
  if (max_lut && r.resources.lut > *max_lut) return false;
  if (max_latency_s && r.latency_s > *max_latency_s) return false;
  if (min_gops && r.throughput_gops < *min_gops) return false;
  return true;
}

void SearchParams::check() const {
  if (population < 1) throw std::invalid_argument("population must be at least 1");
  if (expand_size < 0) throw std::invalid_argument("expand_size must be non-negative");
  if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
  if (top_k < 1 || top_k > population) throw std::invalid_argument("top_k must be in [1, population]");
  if (mutate_prob < 0 || mutate_prob > 1) throw std::invalid_argument("mutate_prob must be in [0, 1]");
  if (crossover_prob < 0 || crossover_prob > 1) throw std::invalid_argument("crossover_prob must be in [0, 1]");
}

std::uint64_t candidate_seed(std::uint64_t master, const SubNetwork& net) {
  std::uint64_t z = master ^ genome_hash(net);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> pareto_front(std::span<const std::pair<double, int>> points) {
  std::vector<std::size_t> idx(points.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].first != points[b].first) return points[a].first > points[b].first;
    return points[a].second < points[b].second;
  });
  std::vector<std::size_t> front;
  int best_rank = std::numeric_limits<int>::max();
  for (auto i : idx) {
    if (points[i].second < best_rank) {
      front.push_back(i);
      best_rank = points[i].second;
    }
  }
  return front;
}

namespace {

struct Evaluation {
  bool feasible = false;
  Candidate cand;
};

class Evaluator {
 public:
  Evaluator(const SearchSpace& space, const HardwareBudget& budget, const Constraint& constraint,
            const EnergyCoeffs& coeffs, const ZenParams& zen, std::uint64_t seed)
      : space_(space), budget_(budget), constraint_(constraint), coeffs_(coeffs), zen_(zen), seed_(seed) {
    zen_.parallel = false;
  }

  // Evaluates the nets not seen before; returns how many were new.
  int run(const std::vector<SubNetwork>& nets) {
    std::vector<SubNetwork> fresh;
    for (const auto& n : nets) {
      if (!cache_.contains(genome_string(n))) fresh.push_back(n);
    }
    std::vector<Evaluation> out(fresh.size());
    std::exception_ptr error;
    const auto count = static_cast<std::int64_t>(fresh.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < count; ++i) {
      try {
        out[i] = evaluate(fresh[i]);
      } catch (...) {
#pragma omp critical
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      if (out[i].feasible) order_.push_back(genome_string(fresh[i]));
      cache_.emplace(genome_string(fresh[i]), std::move(out[i]));
    }
    return static_cast<int>(fresh.size());
  }

  const Evaluation& at(const SubNetwork& n) const { return cache_.at(genome_string(n)); }
  const std::vector<std::string>& feasible_order() const { return order_; }
  const Evaluation& at(const std::string& key) const { return cache_.at(key); }

 private:
  Evaluation evaluate(const SubNetwork& net) const {
    Evaluation ev;
    ev.cand.net = net;
    const auto hw = search_accelerator(net, space_, budget_, coeffs_, false);
    ev.cand.config = hw.config;
    ev.cand.report = hw.report;
    if (!constraint_.satisfied_by(hw.report)) return ev;
    ev.feasible = true;
    ev.cand.nn_degree = nn_degree(space_, net);
    try {
      const auto h = instantiate(space_, net, candidate_seed(seed_, net));
      ev.cand.zen_score = zen_score(h, zen_, candidate_seed(seed_ ^ 0x5a5a5a5aULL, net));
    } catch (const NonFiniteScore&) {
      ev.cand.zen_score = std::numeric_limits<double>::quiet_NaN();
    }
    return ev;
  }

  const SearchSpace& space_;
  const HardwareBudget& budget_;
  const Constraint& constraint_;
  const EnergyCoeffs& coeffs_;
  ZenParams zen_;
  std::uint64_t seed_;
  std::map<std::string, Evaluation> cache_;
  std::vector<std::string> order_;
};

std::vector<ScorePair> pairs_of(const std::vector<Candidate>& pop) {
  std::vector<ScorePair> out;
  out.reserve(pop.size());
  for (const auto& c : pop) out.push_back({c.nn_degree, c.zen_score});
  return out;
}

// Ranks within the group and sorts ascending, genome string breaking ties.
void rank_in_place(std::vector<Candidate>& pop) {
  const auto ranks = combined_scores(pairs_of(pop));
  for (std::size_t i = 0; i < pop.size(); ++i) pop[i].combined_rank = ranks[i];
  std::stable_sort(pop.begin(), pop.end(), [](const Candidate& a, const Candidate& b) {
    if (a.combined_rank != b.combined_rank) return a.combined_rank < b.combined_rank;
    return genome_string(a.net) < genome_string(b.net);
  });
}

struct Reference {
  std::vector<double> zen, nn;

  int rank(const Candidate& c) const { return metric_rank(c.zen_score, zen) + metric_rank(c.nn_degree, nn); }
};

IterationLog stats(int iteration, const std::vector<Candidate>& pop, const Reference& ref) {
  IterationLog log;
  log.iteration = iteration;
  log.population = static_cast<int>(pop.size());
  log.best_reference_rank = std::numeric_limits<int>::max();
  log.best_zen = -std::numeric_limits<double>::infinity();
  double sum = 0;
  int finite = 0;
  for (const auto& c : pop) {
    log.best_reference_rank = std::min(log.best_reference_rank, ref.rank(c));
    log.best_gops = std::max(log.best_gops, c.report.throughput_gops);
    if (std::isfinite(c.zen_score)) {
      log.best_zen = std::max(log.best_zen, c.zen_score);
      sum += c.zen_score;
      ++finite;
    }
  }
  log.mean_zen = finite > 0 ? sum / finite : std::numeric_limits<double>::quiet_NaN();
  if (finite == 0) log.best_zen = std::numeric_limits<double>::quiet_NaN();
  return log;
}

}  // namespace

CoSearchResult cosearch(const SearchSpace& space, const HardwareBudget& budget, const Constraint& constraint,
                        const SearchParams& params, const EnergyCoeffs& coeffs, const ZenParams& zen) {
  check_space(space);
  budget.check();
  constraint.check();
  params.check();
  Rng rng(params.seed);
  Evaluator eval(space, budget, constraint, coeffs, zen, params.seed);

  std::vector<SubNetwork> initial;
  std::set<std::string> seen;
  for (int attempt = 0; static_cast<int>(initial.size()) < params.population && attempt < params.population * 20;
       ++attempt) {
    auto n = sample_random(space, rng);
    if (seen.insert(genome_string(n)).second) initial.push_back(n);
  }
  const int fresh0 = eval.run(initial);

  std::vector<Candidate> pop;
  for (const auto& n : initial) {
    const auto& ev = eval.at(n);
    if (ev.feasible) pop.push_back(ev.cand);
  }
  if (pop.empty()) throw EmptyPopulation("no initial candidate satisfies the constraint");

  Reference ref;
  for (const auto& c : pop) {
    ref.zen.push_back(c.zen_score);
    ref.nn.push_back(c.nn_degree);
  }
  rank_in_place(pop);

  CoSearchResult result;
  auto log0 = stats(0, pop, ref);
  log0.new_evaluations = fresh0;
  result.log.push_back(log0);

  for (int it = 1; it <= params.iterations; ++it) {
    std::vector<SubNetwork> offspring;
    std::set<std::string> members;
    for (const auto& c : pop) members.insert(genome_string(c.net));
    auto pick = [&]() -> const SubNetwork& {
      std::uniform_int_distribution<std::size_t> d(0, pop.size() - 1);
      return pop[d(rng)].net;
    };
    auto add = [&](SubNetwork child) {
      if (members.insert(genome_string(child)).second) offspring.push_back(std::move(child));
    };
    const int n_cross = params.expand_size / 2;
    for (int i = 0; i < n_cross; ++i) {
      const auto& a = pick();
      const auto& b = pick();
      add(crossover(a, b, rng, params.crossover_prob));
    }
    for (int i = n_cross; i < params.expand_size; ++i) add(mutate(space, pick(), params.mutate_prob, rng));

    const int fresh = eval.run(offspring);
    std::vector<Candidate> pool = pop;
    int feasible = 0;
    for (const auto& n : offspring) {
      const auto& ev = eval.at(n);
      if (ev.feasible) {
        pool.push_back(ev.cand);
        ++feasible;
      }
    }
    rank_in_place(pool);

    // Keep the member that is best against the frozen reference.
    std::size_t elite = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
      if (ref.rank(pool[i]) < ref.rank(pool[elite])) elite = i;
    }
    const auto keep = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(params.population));
    std::vector<Candidate> next(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep));
    if (elite >= keep) next.back() = pool[elite];
    pop = std::move(next);
    rank_in_place(pop);

    auto log = stats(it, pop, ref);
    log.offspring = static_cast<int>(offspring.size());
    log.new_evaluations = fresh;
    log.feasible_offspring = feasible;
    result.log.push_back(log);
  }

  const auto k = std::min<std::size_t>(pop.size(), static_cast<std::size_t>(params.top_k));
  result.top.assign(pop.begin(), pop.begin() + static_cast<std::ptrdiff_t>(k));
  for (const auto& key : eval.feasible_order()) {
    result.evaluated.push_back(eval.at(key).cand);
    result.evaluated_reference_rank.push_back(ref.rank(result.evaluated.back()));
  }
  return result;
}

}  // namespace hyco
