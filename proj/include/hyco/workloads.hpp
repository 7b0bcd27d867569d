#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyco/accel.hpp"
#include "hyco/config.hpp"
#include "hyco/cosearch.hpp"

namespace hyco {

struct Workload {
  std::string name;
  std::vector<LayerDescriptor> layers;
};

struct WorkloadSuite {
  HardwareBudget budget;
  OracleGrid grid;
  std::vector<Workload> workloads;
};

/// Small accelerator: 64 conv PEs (32 DSP), LUTs for 64 PEs per chunk, a
/// 16 KiB buffer. PE counts are restricted to the oracle grid.
HardwareBudget desk_budget();
OracleGrid desk_grid();

/// `count` random workloads of 3 to 6 layers that use all three layer types,
/// followed by one conv-only workload.
WorkloadSuite desk_suite(std::uint64_t seed, int count = 5);

json to_json(const LayerDescriptor& l);
LayerDescriptor layer_from_json(const json& j, const std::string& path);
json to_json(const WorkloadSuite& s);
WorkloadSuite suite_from_json(const json& j);

struct WorkloadComparison {
  std::string name;
  AccelResult searched;
  AccelResult oracle;
  double coarse_only_gops = 0;
  double fine_only_gops = 0;
  double throughput_ratio = 0;  // searched / oracle
  double node_ratio = 0;        // oracle nodes / searched nodes
  int chunks_used = 0;
};

WorkloadComparison compare_workload(const Workload& w, const HardwareBudget& budget, const OracleGrid& grid,
                                    const EnergyCoeffs& coeffs);

}  // namespace hyco
