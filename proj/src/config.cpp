#include "hyco/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

extern char** environ;

namespace hyco {

namespace {

template <class T>
void get(const json& v, T& out, const std::string& path) {
  try {
    out = v.get<T>();
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path, e.what()));
  }
}

template <class T>
void get_opt(const json& v, std::optional<T>& out, const std::string& path) {
  if (v.is_null()) {
    out.reset();
    return;
  }
  T tmp{};
  get(v, tmp, path);
  out = tmp;
}

using Handlers = std::map<std::string, std::function<void(const json&, const std::string&)>>;

void dispatch(const json& j, const std::string& section, const Handlers& h) {
  if (!j.is_object()) throw ParseError(fmt::format("{}: expected an object", section));
  for (const auto& [key, value] : j.items()) {
    const auto path = section.empty() ? key : section + "." + key;
    const auto it = h.find(key);
    if (it == h.end()) throw ParseError(fmt::format("unknown config key '{}'", path));
    it->second(value, path);
  }
}

std::vector<std::string> type_codes(const std::vector<LayerType>& ts) {
  std::vector<std::string> out;
  for (auto t : ts) out.emplace_back(1, layer_type_code(t));
  return out;
}

std::vector<LayerType> parse_types(const json& v, const std::string& path) {
  std::vector<std::string> codes;
  get(v, codes, path);
  std::vector<LayerType> out;
  for (const auto& c : codes) {
    if (c.size() != 1) throw ParseError(fmt::format("{}: layer type '{}' is not one of C/S/A", path, c));
    try {
      out.push_back(layer_type_from_code(c[0]));
    } catch (const std::exception&) {
      throw ParseError(fmt::format("{}: layer type '{}' is not one of C/S/A", path, c));
    }
  }
  return out;
}

const char* ladder_name(TilingLadder l) { return l == TilingLadder::PowerOfTwo ? "pow2" : "divisors"; }

const char* objective_name(Objective o) {
  return o == Objective::MaximizeThroughput ? "maximize_throughput" : "minimize_latency";
}

}  // namespace

json to_json(const SearchSpace& s) {
  json stages = json::array();
  for (const auto& st : s.stages) {
    stages.push_back({{"channels", st.channels},
                      {"expansions", st.expansions},
                      {"kernels", st.kernels},
                      {"types", type_codes(st.types)},
                      {"depths", st.depths},
                      {"stride", st.stride}});
  }
  return {{"input_resolution", s.input_resolution},
          {"input_channels", s.input_channels},
          {"num_classes", s.num_classes},
          {"stem_kernel", s.stem_kernel},
          {"stem_stride", s.stem_stride},
          {"first_conv_channels", s.first_conv_channels},
          {"mbpool_channels", s.mbpool_channels},
          {"stages", stages}};
}

void from_json_into(const json& j, SearchSpace& s) {
  dispatch(j, "space",
           {{"input_resolution", [&](const json& v, const std::string& p) { get(v, s.input_resolution, p); }},
            {"input_channels", [&](const json& v, const std::string& p) { get(v, s.input_channels, p); }},
            {"num_classes", [&](const json& v, const std::string& p) { get(v, s.num_classes, p); }},
            {"stem_kernel", [&](const json& v, const std::string& p) { get(v, s.stem_kernel, p); }},
            {"stem_stride", [&](const json& v, const std::string& p) { get(v, s.stem_stride, p); }},
            {"first_conv_channels", [&](const json& v, const std::string& p) { get(v, s.first_conv_channels, p); }},
            {"mbpool_channels", [&](const json& v, const std::string& p) { get(v, s.mbpool_channels, p); }},
            {"stages", [&](const json& v, const std::string& p) {
               if (!v.is_array() || v.size() != kNumStages) {
                 throw ParseError(fmt::format("{}: expected an array of {} stages", p, kNumStages));
               }
               for (int i = 0; i < kNumStages; ++i) {
                 auto& st = s.stages[i];
                 dispatch(v[i], fmt::format("{}[{}]", p, i),
                          {{"channels", [&](const json& x, const std::string& q) { get(x, st.channels, q); }},
                           {"expansions", [&](const json& x, const std::string& q) { get(x, st.expansions, q); }},
                           {"kernels", [&](const json& x, const std::string& q) { get(x, st.kernels, q); }},
                           {"types", [&](const json& x, const std::string& q) { st.types = parse_types(x, q); }},
                           {"depths", [&](const json& x, const std::string& q) { get(x, st.depths, q); }},
                           {"stride", [&](const json& x, const std::string& q) { get(x, st.stride, q); }}});
               }
             }}});
  try {
    check_space(s);
  } catch (const std::invalid_argument& e) {
    throw ParseError(fmt::format("space: {}", e.what()));
  }
}

json to_json(const HardwareBudget& b) {
  return {{"dsp_total", b.dsp_total},
          {"lut_total", b.lut_total},
          {"bram_bits_total", b.bram_bits_total},
          {"dsp_chunk_fraction", b.dsp_chunk_fraction},
          {"dram_bytes_per_cycle", b.dram_bytes_per_cycle},
          {"frequency_hz", b.frequency_hz},
          {"lut_overhead", b.lut_overhead},
          {"activation_bits", b.activation_bits},
          {"conv_weight_bits", b.conv_weight_bits},
          {"shift_weight_bits", b.shift_weight_bits},
          {"adder_weight_bits", b.adder_weight_bits},
          {"conv_output_bits", b.conv_output_bits},
          {"shift_output_bits", b.shift_output_bits},
          {"adder_output_bits", b.adder_output_bits},
          {"tiling_ladder", ladder_name(b.ladder)},
          {"pe_grid", b.pe_grid}};
}

void from_json_into(const json& j, HardwareBudget& b) {
  auto i64 = [](std::int64_t& f) {
    return [&f](const json& v, const std::string& p) { get(v, f, p); };
  };
  auto i32 = [](int& f) {
    return [&f](const json& v, const std::string& p) { get(v, f, p); };
  };
  auto dbl = [](double& f) {
    return [&f](const json& v, const std::string& p) { get(v, f, p); };
  };
  dispatch(j, "budget",
           {{"dsp_total", i64(b.dsp_total)},
            {"lut_total", i64(b.lut_total)},
            {"bram_bits_total", i64(b.bram_bits_total)},
            {"dsp_chunk_fraction", dbl(b.dsp_chunk_fraction)},
            {"dram_bytes_per_cycle", dbl(b.dram_bytes_per_cycle)},
            {"frequency_hz", dbl(b.frequency_hz)},
            {"lut_overhead", i64(b.lut_overhead)},
            {"activation_bits", i32(b.activation_bits)},
            {"conv_weight_bits", i32(b.conv_weight_bits)},
            {"shift_weight_bits", i32(b.shift_weight_bits)},
            {"adder_weight_bits", i32(b.adder_weight_bits)},
            {"conv_output_bits", i32(b.conv_output_bits)},
            {"shift_output_bits", i32(b.shift_output_bits)},
            {"adder_output_bits", i32(b.adder_output_bits)},
            {"pe_grid", [&](const json& v, const std::string& p) { get(v, b.pe_grid, p); }},
            {"tiling_ladder", [&](const json& v, const std::string& p) {
               std::string s;
               get(v, s, p);
               if (s == "pow2") {
                 b.ladder = TilingLadder::PowerOfTwo;
               } else if (s == "divisors") {
                 b.ladder = TilingLadder::Divisors;
               } else {
                 throw ParseError(fmt::format("{}: expected 'pow2' or 'divisors', got '{}'", p, s));
               }
             }}});
  try {
    b.check();
  } catch (const std::invalid_argument& e) {
    throw ParseError(fmt::format("budget: {}", e.what()));
  }
}

json to_json(const Constraint& c) {
  auto opt = [](const auto& o) -> json { return o ? json(*o) : json(nullptr); };
  return {{"max_dsp", opt(c.max_dsp)},
          {"max_lut", opt(c.max_lut)},
          {"max_latency_s", opt(c.max_latency_s)},
          {"min_gops", opt(c.min_gops)},
          {"objective", objective_name(c.objective)}};
}

void from_json_into(const json& j, Constraint& c) {
  dispatch(j, "constraint",
           {{"max_dsp", [&](const json& v, const std::string& p) { get_opt(v, c.max_dsp, p); }},
            {"max_lut", [&](const json& v, const std::string& p) { get_opt(v, c.max_lut, p); }},
            {"max_latency_s", [&](const json& v, const std::string& p) { get_opt(v, c.max_latency_s, p); }},
            {"min_gops", [&](const json& v, const std::string& p) { get_opt(v, c.min_gops, p); }},
            {"objective", [&](const json& v, const std::string& p) {
               std::string s;
               get(v, s, p);
               if (s == "maximize_throughput") {
                 c.objective = Objective::MaximizeThroughput;
               } else if (s == "minimize_latency") {
                 c.objective = Objective::MinimizeLatency;
               } else {
                 throw ParseError(fmt::format("{}: unknown objective '{}'", p, s));
               }
             }}});
  try {
    c.check();
  } catch (const std::invalid_argument& e) {
    throw ParseError(fmt::format("constraint: {}", e.what()));
  }
}

json to_json(const SearchParams& p) {
  return {{"population", p.population},     {"expand_size", p.expand_size},
          {"mutate_prob", p.mutate_prob},   {"crossover_prob", p.crossover_prob},
          {"iterations", p.iterations},     {"top_k", p.top_k},
          {"seed", p.seed}};
}

void from_json_into(const json& j, SearchParams& s) {
  dispatch(j, "params",
           {{"population", [&](const json& v, const std::string& p) { get(v, s.population, p); }},
            {"expand_size", [&](const json& v, const std::string& p) { get(v, s.expand_size, p); }},
            {"mutate_prob", [&](const json& v, const std::string& p) { get(v, s.mutate_prob, p); }},
            {"crossover_prob", [&](const json& v, const std::string& p) { get(v, s.crossover_prob, p); }},
            {"iterations", [&](const json& v, const std::string& p) { get(v, s.iterations, p); }},
            {"top_k", [&](const json& v, const std::string& p) { get(v, s.top_k, p); }},
            {"seed", [&](const json& v, const std::string& p) { get(v, s.seed, p); }}});
  try {
    s.check();
  } catch (const std::invalid_argument& e) {
    throw ParseError(fmt::format("params: {}", e.what()));
  }
}

json to_json(const ZenParams& z) {
  return {{"alpha", z.alpha},
          {"batch", z.batch},
          {"repeats", z.repeats},
          {"include_bn_term", z.include_bn_term},
          {"parallel", z.parallel}};
}

void from_json_into(const json& j, ZenParams& z) {
  dispatch(j, "zen",
           {{"alpha", [&](const json& v, const std::string& p) { get(v, z.alpha, p); }},
            {"batch", [&](const json& v, const std::string& p) { get(v, z.batch, p); }},
            {"repeats", [&](const json& v, const std::string& p) { get(v, z.repeats, p); }},
            {"include_bn_term", [&](const json& v, const std::string& p) { get(v, z.include_bn_term, p); }},
            {"parallel", [&](const json& v, const std::string& p) { get(v, z.parallel, p); }}});
  if (!(z.alpha > 0) || z.batch < 2 || z.repeats < 1) {
    throw ParseError("zen: need alpha > 0, batch >= 2 and repeats >= 1");
  }
}

json to_json(const EnergyCoeffs& e) {
  return {{"e_mult_mj_per_mop", e.e_mult}, {"e_shift_mj_per_mop", e.e_shift}, {"e_add_mj_per_mop", e.e_add}};
}

void from_json_into(const json& j, EnergyCoeffs& e) {
  dispatch(j, "energy",
           {{"e_mult_mj_per_mop", [&](const json& v, const std::string& p) { get(v, e.e_mult, p); }},
            {"e_shift_mj_per_mop", [&](const json& v, const std::string& p) { get(v, e.e_shift, p); }},
            {"e_add_mj_per_mop", [&](const json& v, const std::string& p) { get(v, e.e_add, p); }}});
  try {
    e.check();
  } catch (const std::invalid_argument& ex) {
    throw ParseError(fmt::format("energy: {}", ex.what()));
  }
}

json to_json(const RunConfig& c) {
  json energy = to_json(c.coeffs);
  energy["source"] = c.energy_source;
  return {{"space", to_json(c.space)},
          {"budget", to_json(c.budget)},
          {"constraint", to_json(c.constraint)},
          {"params", to_json(c.params)},
          {"zen", to_json(c.zen)},
          {"energy", energy},
          {"output_dir", c.output_dir.string()},
          {"verbosity", c.verbosity}};
}

void from_json_into(const json& j, RunConfig& c) {
  dispatch(j, "",
           {{"space", [&](const json& v, const std::string&) { from_json_into(v, c.space); }},
            {"budget", [&](const json& v, const std::string&) { from_json_into(v, c.budget); }},
            {"constraint", [&](const json& v, const std::string&) { from_json_into(v, c.constraint); }},
            {"params", [&](const json& v, const std::string&) { from_json_into(v, c.params); }},
            {"zen", [&](const json& v, const std::string&) { from_json_into(v, c.zen); }},
            {"energy",
             [&](const json& v, const std::string& p) {
               if (!v.is_object()) throw ParseError(fmt::format("{}: expected an object", p));
               json coeffs = v;
               if (coeffs.contains("source")) {
                 get(coeffs["source"], c.energy_source, p + ".source");
                 coeffs.erase("source");
                 if (c.energy_source != "default" && c.energy_source != "explicit" &&
                     c.energy_source != "paper-fit") {
                   throw ParseError(fmt::format("{}.source: unknown source '{}'", p, c.energy_source));
                 }
               } else if (!coeffs.empty()) {
                 c.energy_source = "explicit";
               }
               from_json_into(coeffs, c.coeffs);
             }},
            {"output_dir",
             [&](const json& v, const std::string& p) {
               std::string s;
               get(v, s, p);
               c.output_dir = s;
             }},
            {"verbosity", [&](const json& v, const std::string& p) { get(v, c.verbosity, p); }}});
}

json to_json(const Dataflow& d) {
  return {{"loop_order", loop_order_name(d.order)},
          {"tiling", {{"n", d.tiling.n}, {"cin", d.tiling.cin}, {"cout", d.tiling.cout}, {"h", d.tiling.h},
                      {"w", d.tiling.w}}}};
}

json to_json(const AcceleratorConfig& c) {
  json chunks = json::object();
  for (auto k : kChunkKinds) {
    const auto& ch = c.chunk(k);
    chunks[chunk_name(k)] = {{"pe_count", ch.pe_count}, {"dataflow", to_json(ch.dataflow)}};
  }
  return {{"chunks", chunks}, {"gb_bytes", c.gb_bytes}};
}

AcceleratorConfig accelerator_from_json(const json& j) {
  AcceleratorConfig c;
  try {
    c.gb_bytes = j.at("gb_bytes").get<std::int64_t>();
    for (auto k : kChunkKinds) {
      const auto& ch = j.at("chunks").at(chunk_name(k));
      auto& out = c.chunk(k);
      out.kind = k;
      out.pe_count = ch.at("pe_count").get<int>();
      const auto& df = ch.at("dataflow");
      out.dataflow.order = loop_order_from_name(df.at("loop_order").get<std::string>());
      const auto& t = df.at("tiling");
      out.dataflow.tiling = {t.at("n").get<int>(), t.at("cin").get<int>(), t.at("cout").get<int>(),
                             t.at("h").get<int>(), t.at("w").get<int>()};
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("accelerator config: {}", e.what()));
  } catch (const std::invalid_argument& e) {
    throw ParseError(fmt::format("accelerator config: {}", e.what()));
  }
  return c;
}

json to_json(const PerfReport& r) {
  return {{"latency_s", r.latency_s},
          {"throughput_gops", r.throughput_gops},
          {"fps", r.fps},
          {"gops_per_klut", r.gops_per_klut},
          {"gops_per_dsp", r.gops_per_dsp},
          {"energy_mj", r.energy_mj},
          {"dsp", r.resources.dsp},
          {"lut", r.resources.lut},
          {"bram_blocks", r.resources.bram_blocks},
          {"per_chunk_time_s", r.per_chunk_time_s},
          {"per_chunk_cycles", r.per_chunk_cycles},
          {"interval_cycles", r.interval_cycles},
          {"ops_m", {{"mults", r.ops.mults}, {"shifts", r.ops.shifts}, {"adds", r.ops.adds}}}};
}

json to_json(const SubNetwork& n) {
  json stages = json::array();
  for (const auto& s : n.stages) {
    stages.push_back({{"c", s.c}, {"e", s.e}, {"k", s.k}, {"t", std::string(1, layer_type_code(s.t))}, {"n", s.n}});
  }
  return {{"first_conv_c", n.first_conv_c}, {"stages", stages}, {"mbpool_c", n.mbpool_c},
          {"genome", genome_string(n)}};
}

json env_overrides(const std::map<std::string, std::string>& env, const std::string& prefix) {
  json out = json::object();
  for (const auto& [name, value] : env) {
    if (name.rfind(prefix, 0) != 0 || name.size() == prefix.size()) continue;
    std::string rest = name.substr(prefix.size());
    for (auto& ch : rest) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    json::json_pointer ptr;
    std::size_t pos = 0;
    while (true) {
      const auto next = rest.find("__", pos);
      ptr /= rest.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      if (next == std::string::npos) break;
      pos = next + 2;
    }
    json parsed = json::parse(value, nullptr, false);
    out[ptr] = parsed.is_discarded() ? json(value) : parsed;
  }
  return out;
}

std::map<std::string, std::string> current_environment() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv(*e);
    const auto eq = kv.find('=');
    if (eq != std::string::npos) env.emplace(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return env;
}

void merge_json(json& base, const json& patch) {
  if (!patch.is_object() || !base.is_object()) {
    base = patch;
    return;
  }
  for (const auto& [k, v] : patch.items()) {
    if (base.contains(k) && base[k].is_object() && v.is_object()) {
      merge_json(base[k], v);
    } else {
      base[k] = v;
    }
  }
}

json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", p.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", p.string(), e.what()));
  }
}

namespace {

std::string slot_name(std::size_t i) {
  if (i == 0) return "first_conv_c";
  if (i == kGenomeFields - 1) return "mbpool_c";
  static const char* names[] = {"c", "e", "k", "t", "n"};
  return fmt::format("stage{}.{}", (i - 1) / 5 + 1, names[(i - 1) % 5]);
}

}  // namespace

SubNetwork parse_genome(const std::string& line, int line_no) {
  std::string text = line;
  for (auto& ch : text) {
    if (ch == '-' || ch == ',' || ch == ';') ch = ' ';
  }
  std::istringstream in(text);
  std::vector<std::string> tokens;
  for (std::string tok; in >> tok;) tokens.push_back(tok);
  const auto where = [&](std::size_t i) {
    return line_no > 0 ? fmt::format("line {}, field {} ({})", line_no, i + 1, slot_name(i))
                       : fmt::format("field {} ({})", i + 1, slot_name(i));
  };
  if (tokens.size() != kGenomeFields) {
    throw ParseError(fmt::format("{}expected {} genome fields, got {}",
                                 line_no > 0 ? fmt::format("line {}: ", line_no) : "", kGenomeFields,
                                 tokens.size()));
  }
  std::vector<int> record;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& tok = tokens[i];
    const bool type_slot = i > 0 && i < kGenomeFields - 1 && (i - 1) % 5 == 3;
    if (type_slot && tok.size() == 1 && std::isalpha(static_cast<unsigned char>(tok[0]))) {
      try {
        record.push_back(static_cast<int>(layer_type_from_code(tok[0])));
        continue;
      } catch (const std::exception&) {
        throw ParseError(fmt::format("{}: '{}' is not a layer type", where(i), tok));
      }
    }
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw ParseError(fmt::format("{}: '{}' is not an integer", where(i), tok));
    if (type_slot && (v < 0 || v > 2)) throw ParseError(fmt::format("{}: type code {} outside 0..2", where(i), v));
    record.push_back(v);
  }
  return from_record(record);
}

std::string format_genome(const SubNetwork& n) { return genome_string(n); }

std::string fmt6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.6g}", v);
}

}  // namespace hyco
