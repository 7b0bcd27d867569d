#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hyco/accel.hpp"
#include "hyco/config.hpp"
#include "hyco/search_space.hpp"

namespace hyco {

struct OpRow {
  std::string table, dataset, method, family;  // family: mult_based, mult_free, mult_reduced, ours
  OpCounts ops;
  double energy_mj = 0;
};

struct HwRow {
  std::string table, dataset, column, ops_method;
  double klut = 0;
  std::optional<double> dsp;
  double bram_blocks = 0;
  double latency_ms = 0;
  double gops = 0;
  double fps = 0;
};

struct AblationRow {
  bool coarse = false;
  bool fine = false;
  double avg_gops = 0;
};

struct PaperData {
  std::vector<OpRow> op_rows;
  std::vector<HwRow> hw_rows;
  std::vector<AblationRow> ablation;
  double lut_band_lo_klut = 52;
  double lut_band_hi_klut = 67;
};

std::filesystem::path default_paper_data_path();
PaperData load_paper_data(const std::filesystem::path& p);
PaperData paper_data_from_json(const json& j);

const OpRow& find_op_row(const PaperData& d, const std::string& dataset, const std::string& method);

/// Per-type MACs implied by a table row: conv = mults, shift = shifts,
/// adder = (adds - mults - shifts) / 2.
MacCounts macs_from_row(const OpCounts& ops);

struct CheckResult {
  std::string id;
  std::string group;   // ops, throughput, energy, resources, ablation
  bool pass = false;
  bool counted = true;  // diagnostics are reported but do not decide the exit code
  double value = 0;
  double expected = 0;
  double residual = 0;
  double tolerance = 0;
  std::string detail;
};

std::vector<CheckResult> check_op_identities(const PaperData& d);
std::vector<CheckResult> check_throughput(const PaperData& d, double rel_tol = 0.005);
std::vector<CheckResult> check_energy(const PaperData& d, double rel_tol = 0.02);
std::vector<CheckResult> check_resources(const PaperData& d, const HardwareBudget& budget = kv260_budget());
std::vector<CheckResult> check_ablation(const PaperData& d);

std::vector<CheckResult> reproduce_tables(const PaperData& d);

json to_json(const CheckResult& c);

}  // namespace hyco
