#include "hyco/tables.hpp"

#include <cmath>

#include <fmt/format.h>

#include "hyco/cosearch.hpp"

namespace hyco {

std::filesystem::path default_paper_data_path() { return std::filesystem::path(HYCO_DATA_DIR) / "paper_tables.json"; }

PaperData paper_data_from_json(const json& j) {
  PaperData d;
  try {
    for (const auto& r : j.at("op_rows")) {
      d.op_rows.push_back({r.at("table").get<std::string>(), r.at("dataset").get<std::string>(),
                           r.at("method").get<std::string>(), r.at("family").get<std::string>(),
                           {r.at("mults_m").get<double>(), r.at("shifts_m").get<double>(), r.at("adds_m").get<double>()},
                           r.at("energy_mj").get<double>()});
    }
    for (const auto& r : j.at("hw_rows")) {
      HwRow h;
      h.table = r.at("table").get<std::string>();
      h.dataset = r.at("dataset").get<std::string>();
      h.column = r.at("column").get<std::string>();
      h.ops_method = r.at("ops_method").get<std::string>();
      h.klut = r.at("klut").get<double>();
      if (!r.at("dsp").is_null()) h.dsp = r.at("dsp").get<double>();
      h.bram_blocks = r.at("bram_blocks").get<double>();
      h.latency_ms = r.at("latency_ms").get<double>();
      h.gops = r.at("gops").get<double>();
      h.fps = r.at("fps").get<double>();
      d.hw_rows.push_back(h);
    }
    for (const auto& r : j.at("ablation")) {
      d.ablation.push_back({r.at("coarse").get<bool>(), r.at("fine").get<bool>(), r.at("avg_gops").get<double>()});
    }
    if (j.contains("lut_band_klut")) {
      d.lut_band_lo_klut = j["lut_band_klut"].at(0).get<double>();
      d.lut_band_hi_klut = j["lut_band_klut"].at(1).get<double>();
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("table data: {}", e.what()));
  }
  return d;
}

PaperData load_paper_data(const std::filesystem::path& p) { return paper_data_from_json(read_json_file(p)); }

const OpRow& find_op_row(const PaperData& d, const std::string& dataset, const std::string& method) {
  for (const auto& r : d.op_rows) {
    if (r.dataset == dataset && r.method == method) return r;
  }
  throw std::out_of_range(fmt::format("no op row for {} / {}", dataset, method));
}

MacCounts macs_from_row(const OpCounts& ops) {
  auto m = [](double millions) { return static_cast<std::int64_t>(std::llround(millions * 1e6)); };
  return {m(ops.mults), m(ops.shifts), m((ops.adds - ops.mults - ops.shifts) / 2)};
}

namespace {

double rel(double v, double ref) { return ref == 0 ? std::fabs(v) : std::fabs(v - ref) / std::fabs(ref); }

CheckResult make(std::string id, std::string group, double value, double expected, double tol, bool relative,
                 std::string detail = {}) {
  CheckResult c;
  c.id = std::move(id);
  c.group = std::move(group);
  c.value = value;
  c.expected = expected;
  c.residual = relative ? rel(value, expected) : std::fabs(value - expected);
  c.tolerance = tol;
  c.pass = c.residual <= tol;
  c.detail = std::move(detail);
  return c;
}

}  // namespace

std::vector<CheckResult> check_op_identities(const PaperData& d) {
  std::vector<CheckResult> out;
  // Counting rules applied to integer MAC counts.
  const auto adder = ops_from_macs({6'600'000, 0, 79'200'000});
  out.push_back(make("ops.addernet-mv2.adds", "ops", adder.adds, find_op_row(d, "CIFAR10", "AdderNet-MV2").ops.adds,
                     1e-9, false, "2 x 79.2 M adder MACs + 6.6 M conv MACs"));
  const auto shift = ops_from_macs({6'600'000, 79'200'000, 0});
  const auto& ds = find_op_row(d, "CIFAR10", "DeepShift-MV2").ops;
  out.push_back(make("ops.deepshift-mv2.adds", "ops", shift.adds, ds.adds, 1e-9, false,
                     "79.2 M shift MACs + 6.6 M conv MACs"));
  out.push_back(make("ops.deepshift-mv2.shifts", "ops", shift.shifts, ds.shifts, 1e-9, false));
  // Every row must decompose into non-negative per-type MACs that reproduce it.
  for (const auto& r : d.op_rows) {
    const auto macs = macs_from_row(r.ops);
    const auto back = ops_from_macs(macs);
    const double err = std::max({std::fabs(back.mults - r.ops.mults), std::fabs(back.shifts - r.ops.shifts),
                                 std::fabs(back.adds - r.ops.adds)});
    auto c = make(fmt::format("ops.roundtrip.{}.{}", r.dataset, r.method), "ops", err, 0, 0.01, false,
                  fmt::format("adder MACs {:.3f} M", macs.adder / 1e6));
    if (macs.adder < 0) {
      c.pass = false;
      c.detail += " (negative)";
    }
    out.push_back(c);
  }
  return out;
}

std::vector<CheckResult> check_throughput(const PaperData& d, double rel_tol) {
  std::vector<CheckResult> out;
  for (const auto& h : d.hw_rows) {
    const auto& ops = find_op_row(d, h.dataset, h.ops_method).ops;
    const double latency_s = h.latency_ms * 1e-3;
    std::array<double, 3> times{latency_s, 0, 0};
    const auto rep = summarize_pipeline(times, ops, {}, EnergyCoeffs{});
    const auto tag = fmt::format("{}.{}", h.dataset, h.column);
    out.push_back(make("thrpt.gops." + tag, "throughput", rep.throughput_gops, h.gops, rel_tol, true,
                       fmt::format("{:.2f} M ops / {} ms", ops.total(), h.latency_ms)));
    out.push_back(make("thrpt.fps." + tag, "throughput", rep.fps, h.fps, rel_tol, true));
    // Diagnostic: is the printed GOPS reachable by a latency that rounds to the printed one?
    const double lo = (h.latency_ms - 0.005) * 1e-3;
    const double hi = (h.latency_ms + 0.005) * 1e-3;
    const double g_hi = ops.total() * 1e-3 / lo;
    const double g_lo = ops.total() * 1e-3 / hi;
    CheckResult diag;
    diag.id = "thrpt.rounding." + tag;
    diag.group = "throughput";
    diag.counted = false;
    diag.value = h.gops;
    diag.expected = rep.throughput_gops;
    diag.pass = h.gops >= g_lo - 0.05 && h.gops <= g_hi + 0.05;
    diag.detail = fmt::format("latency in [{:.3f}, {:.3f}] ms gives [{:.1f}, {:.1f}] GOPS", h.latency_ms - 0.005,
                              h.latency_ms + 0.005, g_lo, g_hi);
    out.push_back(diag);
  }
  return out;
}

std::vector<CheckResult> check_energy(const PaperData& d, double rel_tol) {
  std::vector<CheckResult> out;
  std::vector<EnergyRow> rows;
  for (const auto& r : d.op_rows) {
    if (r.family == "mult_based" || r.family == "mult_free") rows.push_back({r.ops, r.energy_mj});
  }
  const auto coeffs = fit_energy_coeffs(rows);
  CheckResult fit;
  fit.id = "energy.fit";
  fit.group = "energy";
  fit.pass = true;
  try {
    coeffs.check();
  } catch (const std::invalid_argument& e) {
    fit.pass = false;
    fit.detail = e.what();
  }
  if (fit.pass) {
    fit.detail = fmt::format("e_mult {:.6g}, e_shift {:.6g}, e_add {:.6g} mJ per M ops over {} rows", coeffs.e_mult,
                             coeffs.e_shift, coeffs.e_add, rows.size());
  }
  out.push_back(fit);
  for (const auto& r : d.op_rows) {
    if (r.family != "ours") continue;
    out.push_back(make(fmt::format("energy.{}.{}", r.dataset, r.method), "energy", coeffs.energy_mj(r.ops),
                       r.energy_mj, rel_tol, true));
  }
  return out;
}

std::vector<CheckResult> check_resources(const PaperData& d, const HardwareBudget& budget) {
  std::vector<CheckResult> out;
  const int pe_c = static_cast<int>(2 * budget.dsp_for_chunks());
  AcceleratorConfig cfg;
  cfg.chunk_c.pe_count = pe_c;
  cfg.chunk_s.pe_count = 0;
  cfg.chunk_a.pe_count = 0;
  out.push_back(make("resources.dsp", "resources", resource_usage(cfg).dsp, 545, 0, false,
                     fmt::format("pe_C = {}", pe_c)));
  for (const auto& r : d.op_rows) {
    if (r.family != "ours") continue;
    const auto init = proportional_init(macs_from_row(r.ops), pe_c, budget);
    cfg.chunk_s.pe_count = init.shift;
    cfg.chunk_a.pe_count = init.adder;
    const double klut = static_cast<double>(resource_usage(cfg, budget.lut_overhead).lut) / 1000.0;
    CheckResult c;
    c.id = fmt::format("resources.lut.{}.{}", r.dataset, r.method);
    c.group = "resources";
    c.value = klut;
    c.expected = (d.lut_band_lo_klut + d.lut_band_hi_klut) / 2;
    c.residual = klut < d.lut_band_lo_klut ? d.lut_band_lo_klut - klut
                 : klut > d.lut_band_hi_klut ? klut - d.lut_band_hi_klut
                                             : 0.0;
    c.pass = c.residual == 0.0;
    c.detail = fmt::format("pe_S {} pe_A {} -> {:.1f} kLUT (band {}-{})", init.shift, init.adder, klut,
                           d.lut_band_lo_klut, d.lut_band_hi_klut);
    out.push_back(c);
  }
  return out;
}

std::vector<CheckResult> check_ablation(const PaperData& d) {
  double both = -1, coarse = -1, fine = -1;
  for (const auto& a : d.ablation) {
    if (a.coarse && a.fine) both = a.avg_gops;
    if (a.coarse && !a.fine) coarse = a.avg_gops;
    if (!a.coarse && a.fine) fine = a.avg_gops;
  }
  CheckResult c;
  c.id = "ablation.order";
  c.group = "ablation";
  c.pass = both >= 0 && fine >= 0 && coarse >= 0 && both >= fine && fine >= coarse;
  c.detail = fmt::format("coarse+fine {} >= fine-only {} >= coarse-only {}", both, fine, coarse);
  return {c};
}

std::vector<CheckResult> reproduce_tables(const PaperData& d) {
  std::vector<CheckResult> out;
  for (auto part : {check_op_identities(d), check_throughput(d), check_energy(d), check_resources(d), check_ablation(d)}) {
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

json to_json(const CheckResult& c) {
  return {{"id", c.id},       {"group", c.group},         {"pass", c.pass},           {"counted", c.counted},
          {"value", c.value}, {"expected", c.expected}, {"residual", c.residual}, {"tolerance", c.tolerance},
          {"detail", c.detail}};
}

}  // namespace hyco
