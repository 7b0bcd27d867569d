#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hyco/accel.hpp"
#include "hyco/cosearch.hpp"
#include "hyco/search_space.hpp"
#include "hyco/zeroshot.hpp"

namespace hyco {

using nlohmann::json;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  SearchSpace space = default_space();
  HardwareBudget budget = kv260_budget();
  Constraint constraint{.max_dsp = 1248.0, .max_lut = 117000};
  SearchParams params{};
  ZenParams zen{};
  EnergyCoeffs coeffs{};
  std::string energy_source = "default";  // "default", "explicit" or "paper-fit"
  std::filesystem::path output_dir = "runs";
  int verbosity = 1;
};

json to_json(const SearchSpace& s);
json to_json(const HardwareBudget& b);
json to_json(const Constraint& c);
json to_json(const SearchParams& p);
json to_json(const ZenParams& z);
json to_json(const EnergyCoeffs& e);
json to_json(const RunConfig& c);
json to_json(const Dataflow& d);
json to_json(const AcceleratorConfig& c);
json to_json(const PerfReport& r);
json to_json(const SubNetwork& n);

/// Reads keys present in `j` over the values already in `out`; unknown keys
/// raise ParseError naming the path.
void from_json_into(const json& j, SearchSpace& out);
void from_json_into(const json& j, HardwareBudget& out);
void from_json_into(const json& j, Constraint& out);
void from_json_into(const json& j, SearchParams& out);
void from_json_into(const json& j, ZenParams& out);
void from_json_into(const json& j, EnergyCoeffs& out);
void from_json_into(const json& j, RunConfig& out);
AcceleratorConfig accelerator_from_json(const json& j);

/// Env overrides: HYCO_<SECTION>__<KEY>=value sets config[section][key]
/// (lowercased). Values parse as JSON when possible, else as strings.
json env_overrides(const std::map<std::string, std::string>& env, const std::string& prefix = "HYCO_");
std::map<std::string, std::string> current_environment();

/// Recursively overlays `patch` onto `base`.
void merge_json(json& base, const json& patch);

json read_json_file(const std::filesystem::path& p);

/// Parses a genome line: 37 integers separated by '-', ',' or whitespace;
/// layer types may be written as C/S/A. Throws ParseError naming the field.
SubNetwork parse_genome(const std::string& line, int line_no = 0);
std::string format_genome(const SubNetwork& n);

/// Canonical 6-significant-digit formatting used in CSV output.
std::string fmt6(double v);

}  // namespace hyco
