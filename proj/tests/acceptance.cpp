// Acceptance matrix: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "hyco/cosearch.hpp"
#include "hyco/io.hpp"
#include "hyco/tables.hpp"
#include "hyco/workloads.hpp"
#include "hyco/zeroshot.hpp"

using namespace hyco;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool all_counted_pass(const std::vector<CheckResult>& cs, std::vector<std::string>& notes) {
  bool ok = true;
  for (const auto& c : cs) {
    if (!c.counted) continue;
    if (!c.pass) {
      ok = false;
      notes.push_back(fmt::format("{}: value {} expected {} residual {} tol {}", c.id, fmt6(c.value),
                                  fmt6(c.expected), fmt6(c.residual), fmt6(c.tolerance)));
    }
  }
  return ok;
}

int count_failed(const std::vector<CheckResult>& cs) {
  int n = 0;
  for (const auto& c : cs) n += c.counted && !c.pass;
  return n;
}

int count_counted(const std::vector<CheckResult>& cs) {
  int n = 0;
  for (const auto& c : cs) n += c.counted;
  return n;
}

Outcome timed_checks(const std::function<std::vector<CheckResult>()>& run, double limit_s) {
  const auto t0 = Clock::now();
  const auto cs = run();
  const double t = seconds_since(t0);
  Outcome o;
  const bool ok = all_counted_pass(cs, o.notes);
  o.pass = ok && t < limit_s;
  o.detail = fmt::format("{}/{} checks pass, {:.3f} s (limit {} s)", count_counted(cs) - count_failed(cs),
                         count_counted(cs), t, limit_s);
  for (const auto& c : cs) {
    if (!c.counted) o.notes.push_back(fmt::format("info {}: {}", c.id, c.detail));
  }
  return o;
}

LayerDescriptor in_block(LayerDescriptor l, int block, int residual) {
  l.block = block;
  l.residual_channels = residual;
  return l;
}

// ---------------------------------------------------------------------------

Outcome criterion1(const PaperData& d) {
  const auto t0 = Clock::now();
  auto o = timed_checks([&] { return check_op_identities(d); }, 1.0);
  const auto adder = ops_from_macs({6'600'000, 0, 79'200'000});
  const auto shift = ops_from_macs({6'600'000, 79'200'000, 0});
  const bool exact = std::llround(adder.adds * 100) == 16500 && std::llround(shift.adds * 100) == 8580 &&
                     std::llround(shift.shifts * 100) == 7920;
  o.pass = o.pass && exact && seconds_since(t0) < 1.0;
  o.detail += fmt::format("; AdderNet-MV2 adds {} M, DeepShift-MV2 adds {} M", fmt6(adder.adds), fmt6(shift.adds));
  return o;
}

Outcome criterion4(const PaperData& d) {
  const auto t0 = Clock::now();
  auto o = timed_checks([&] { return check_resources(d); }, 1.0);
  AcceleratorConfig cfg;
  cfg.chunk_c.pe_count = 1090;
  const double dsp = resource_usage(cfg).dsp;
  o.pass = o.pass && dsp == 545.0 && seconds_since(t0) < 1.0;
  o.detail += fmt::format("; DSP for pe_C 1090 = {}", fmt6(dsp));
  return o;
}

struct SuiteRun {
  std::vector<WorkloadComparison> rows;
  double seconds = 0;
};

SuiteRun run_suite() {
  const auto t0 = Clock::now();
  SuiteRun r;
  const auto suite = desk_suite(0, 5);
  for (const auto& w : suite.workloads) r.rows.push_back(compare_workload(w, suite.budget, suite.grid, {}));
  r.seconds = seconds_since(t0);
  return r;
}

Outcome criterion5(const SuiteRun& s) {
  const auto suite = desk_suite(0, 5);
  Outcome o;
  int randomized_ok = 0, randomized = 0;
  bool exact_one = false;
  bool shape_ok = suite.grid.pe_c.size() <= 8 && suite.grid.pe_s.size() <= 8 && suite.grid.pe_a.size() <= 8;
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const auto& c = s.rows[i];
    shape_ok = shape_ok && suite.workloads[i].layers.size() <= 6;
    if (c.chunks_used == 3) {
      ++randomized;
      randomized_ok += c.throughput_ratio >= 0.95 && c.node_ratio >= 10;
    }
    if (c.throughput_ratio == 1.0 && c.chunks_used < 3) exact_one = true;
    o.notes.push_back(fmt::format("{}: ratio {} nodes {} / {} ({}x)", c.name, fmt6(c.throughput_ratio),
                                  c.searched.nodes, c.oracle.nodes, fmt6(c.node_ratio)));
  }
  o.pass = randomized >= 5 && randomized_ok == randomized && exact_one && shape_ok && s.seconds < 600;
  o.detail = fmt::format("{}/{} randomized workloads >= 0.95 of oracle with <= 1/10 nodes, constructed ratio 1.0: {}, "
                         "{:.1f} s (limit 600 s)",
                         randomized_ok, randomized, exact_one ? "yes" : "no", s.seconds);
  return o;
}

Outcome criterion6(const SuiteRun& s) {
  Outcome o;
  int ok = 0;
  double cf = 0, fo = 0, co = 0;
  for (const auto& c : s.rows) {
    const double g = c.searched.report.throughput_gops;
    const bool holds = g >= c.fine_only_gops && c.fine_only_gops >= c.coarse_only_gops;
    ok += holds;
    cf += g;
    fo += c.fine_only_gops;
    co += c.coarse_only_gops;
    o.notes.push_back(fmt::format("{}: coarse+fine {} fine-only {} coarse-only {} {}", c.name, fmt6(g),
                                  fmt6(c.fine_only_gops), fmt6(c.coarse_only_gops), holds ? "ok" : "VIOLATED"));
  }
  const double n = static_cast<double>(s.rows.size());
  o.notes.push_back(fmt::format("info suite average: coarse+fine {} fine-only {} coarse-only {}", fmt6(cf / n),
                                fmt6(fo / n), fmt6(co / n)));
  o.pass = ok == static_cast<int>(s.rows.size());
  o.detail = fmt::format("ordering holds on {}/{} workloads", ok, s.rows.size());
  return o;
}

Outcome criterion7() {
  const auto t0 = Clock::now();
  const auto space = default_space();
  const auto budget = kv260_budget();
  Rng rng(7);
  Outcome o;
  double worst = 0;
  int ok = 0, clamped = 0;
  for (int i = 0; i < 100; ++i) {
    const auto layers = expand(space, sample_random(space, rng));
    const auto coarse = coarse_search(layers, budget);
    const auto init = proportional_init(count_macs(layers), coarse.chunk.pe_count, budget);
    const double es = std::fabs(init.shift_unclamped - init.shift_exact);
    const double ea = std::fabs(init.adder_unclamped - init.adder_exact);
    worst = std::max({worst, es, ea});
    ok += es <= 0.5 && ea <= 0.5;
    clamped += init.shift != init.shift_unclamped || init.adder != init.adder_unclamped;
  }
  const double t = seconds_since(t0);
  o.pass = ok == 100 && t < 30;
  o.detail = fmt::format("{}/100 genomes within 0.5 PE (worst {:.3f}), {:.2f} s (limit 30 s)", ok, worst, t);
  o.notes.push_back(fmt::format("info {} of 100 initial points were clamped to the LUT budget or to 1 PE", clamped));
  return o;
}

Outcome criterion8() {
  const auto t0 = Clock::now();
  Outcome o;
  bool nn_ok = true;
  {
    const std::vector<LayerDescriptor> a{in_block(make_layer(LayerType::Conv, 8, 16, 1, 1, 1, 4, 4), 0, 8),
                                         in_block(make_layer(LayerType::Conv, 16, 32, 3, 1, 1, 4, 4), 0, 8)};
    const std::vector<LayerDescriptor> b{make_layer(LayerType::Conv, 3, 16, 3, 2, 1, 8, 8),
                                         in_block(make_layer(LayerType::Conv, 16, 96, 1, 1, 1, 4, 4), 0, 0),
                                         in_block(make_layer(LayerType::Shift, 96, 96, 3, 1, 96, 4, 4), 0, 0),
                                         in_block(make_layer(LayerType::Adder, 96, 24, 1, 1, 1, 4, 4), 0, 0)};
    const std::vector<LayerDescriptor> c{in_block(make_layer(LayerType::Conv, 16, 64, 1, 1, 1, 4, 4), 0, 16),
                                         in_block(make_layer(LayerType::Conv, 64, 64, 3, 1, 64, 4, 4), 0, 16),
                                         in_block(make_layer(LayerType::Conv, 64, 16, 1, 1, 1, 4, 4), 0, 16),
                                         in_block(make_layer(LayerType::Conv, 16, 32, 1, 1, 1, 4, 4), 1, 0),
                                         in_block(make_layer(LayerType::Conv, 32, 32, 5, 2, 32, 4, 4), 1, 0),
                                         in_block(make_layer(LayerType::Conv, 32, 24, 1, 1, 1, 2, 2), 1, 0)};
    nn_ok = nn_degree(a) == 48.0 / 2 + 8.0 / 24 && nn_degree(b) == 216.0 / 3 &&
            nn_degree(c) == 144.0 / 3 + 16.0 / 144 + 88.0 / 3;
  }

  const auto space = default_space();
  ZenParams zen;
  zen.batch = 2;
  Rng rng(8);
  int deterministic = 0, finite = 0;
  for (int i = 0; i < 200; ++i) {
    const auto n = sample_random(space, rng);
    const auto seed = candidate_seed(8, n);
    const auto net = instantiate(space, n, seed);
    const double z1 = zen_score(net, zen, seed);
    const double z2 = zen_score(instantiate(space, n, seed), zen, seed);
    deterministic += z1 == z2;
    finite += std::isfinite(z1);
  }

  bool combined_ok = true;
  {
    const std::vector<ScorePair> pop{{10, 3}, {40, 9}, {20, 5}, {30, 1}};
    combined_ok = combined_score(1, pop) == 0;
    std::vector<ScorePair> rescaled;
    for (const auto& p : pop) rescaled.push_back({std::exp(p.nn_degree / 10) + 4, 3 * p.zen_score * p.zen_score});
    combined_ok = combined_ok && combined_scores(pop) == combined_scores(rescaled);
  }

  const std::vector<double> x{1, 2, 3, 4}, up{1, 2, 3, 4}, down{4, 3, 2, 1}, swap{1, 2, 4, 3};
  const double k1 = kendall_tau(x, up), k2 = kendall_tau(x, down), k3 = kendall_tau(x, swap);
  const bool kendall_ok = k1 == 1.0 && k2 == -1.0 && std::fabs(k3 - 0.6667) < 5e-5;

  const double t = seconds_since(t0);
  o.pass = nn_ok && deterministic == 200 && finite == 200 && combined_ok && kendall_ok && t < 300;
  o.detail = fmt::format("nn fixtures {}, zen deterministic {}/200 finite {}/200, combined score {}, kendall {} {} {}, "
                         "{:.1f} s (limit 300 s)",
                         nn_ok ? "exact" : "WRONG", deterministic, finite, combined_ok ? "ok" : "WRONG", fmt6(k1),
                         fmt6(k2), fmt6(k3), t);
  return o;
}

Outcome criterion9() {
  const auto t0 = Clock::now();
  Outcome o;
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> ch(1, 8), hw(2, 8), pick(0, 2);
  std::normal_distribution<double> nd;
  int equal = 0;
  for (int i = 0; i < 50; ++i) {
    const int in_c = ch(rng), res = hw(rng);
    const bool dw = pick(rng) == 0;
    const int out_c = dw ? in_c : ch(rng);
    const int k = std::array{1, 3, 5}[pick(rng)];
    const std::vector<LayerDescriptor> one{
        make_layer(LayerType::Shift, in_c, out_c, k, pick(rng) == 0 ? 2 : 1, dw ? in_c : 1, res, res)};
    const auto net = instantiate_layers(one, rng());
    auto conv = net;
    conv.layers[0].desc.op_type = LayerType::Conv;
    for (const auto& s : net.layers[0].shifts) conv.layers[0].weights.push_back(s.value());
    Tensor x(2, in_c, res, res);
    for (auto& v : x.data) v = nd(rng);
    equal += forward(net, x).output.data == forward(conv, x).output.data;
  }
  int nonpositive = 0;
  for (int i = 0; i < 50; ++i) {
    const int in_c = ch(rng), out_c = ch(rng), res = hw(rng);
    const std::vector<LayerDescriptor> one{make_layer(LayerType::Adder, in_c, out_c, 3, 1, 1, res, res)};
    const auto net = instantiate_layers(one, rng());
    Tensor x(2, in_c, res, res);
    for (auto& v : x.data) v = nd(rng);
    bool all = true;
    for (double v : forward(net, x).output.data) all = all && v <= 0.0;
    nonpositive += all;
  }
  const bool q = quantize_shift(2.0).value() == 2.0 && quantize_shift(-0.75).value() == -1.0 &&
                 quantize_shift(0.3).value() == 0.25;
  const double t = seconds_since(t0);
  o.pass = equal == 50 && nonpositive == 50 && q && t < 60;
  o.detail = fmt::format("shift == quantized conv {}/50, adder <= 0 {}/50, quantize fixtures {}, {:.2f} s (limit 60 s)",
                         equal, nonpositive, q ? "ok" : "WRONG", t);
  return o;
}

Outcome criterion10() {
  Outcome o;
  SearchParams p;
  p.population = 8;
  p.expand_size = 4;
  p.iterations = 3;
  p.seed = 2024;
  Constraint c;
  c.max_dsp = 1248;
  c.max_lut = 117000;
  std::vector<std::string> outputs;
  double worst = 0;
  for (int run = 0; run < 2; ++run) {
    const auto t0 = Clock::now();
    const auto r = cosearch(default_space(), kv260_budget(), c, p, {});
    outputs.push_back(result_json(r).dump(2) + log_csv(r) + pareto_csv(r));
    worst = std::max(worst, seconds_since(t0));
  }
  const bool same = outputs[0] == outputs[1];
  o.pass = same && worst < 300;
  o.detail = fmt::format("outputs byte-identical: {} ({} bytes), slowest run {:.1f} s (limit 300 s)", same ? "yes" : "no",
                         outputs[0].size(), worst);
  return o;
}

}  // namespace

int main() {
  const auto data = load_paper_data(default_paper_data_path());
  int failed = 0;
  const auto report = [&](int id, const std::string& name, const Outcome& o) {
    failed += !o.pass;
    std::cout << fmt::format("criterion {:>2} {:<4} {:<34} {}\n", id, o.pass ? "PASS" : "FAIL", name, o.detail);
    for (const auto& n : o.notes) std::cout << "    " << n << "\n";
    std::cout.flush();
  };
  report(1, "op-count identities", criterion1(data));
  report(2, "throughput/FPS identities", timed_checks([&] { return check_throughput(data, 0.005); }, 1.0));
  report(3, "energy model", timed_checks([&] { return check_energy(data, 0.02); }, 1.0));
  report(4, "resource accounting", criterion4(data));
  const auto suite = run_suite();
  report(5, "coarse-to-fine vs oracle", criterion5(suite));
  report(6, "ablation ordering", criterion6(suite));
  report(7, "proportional PE initialisation", criterion7());
  report(8, "zero-shot metric properties", criterion8());
  report(9, "layer semantics", criterion9());
  report(10, "end-to-end determinism", criterion10());
  std::cout << fmt::format("{} of 10 criteria pass\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
