#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "hyco/kernels.hpp"
#include "hyco/search_space.hpp"
#include "hyco/tensor.hpp"

namespace hyco {

using kernels::ShiftWeight;

struct ShiftRange {
  int p_min = -6;
  int p_max = 1;
};

/// Power-of-two quantization: sign(w) * 2^round(log2|w|), exponent clamped to
/// the range. Zero maps to (+1, p_min), the most attenuating representable value.
ShiftWeight quantize_shift(double w, ShiftRange range = {});

struct InstantiatedLayer {
  LayerDescriptor desc;
  std::vector<double> weights;       // Conv / Adder
  std::vector<ShiftWeight> shifts;   // Shift

  kernels::ConvGeometry geometry() const {
    return {desc.in_channels, desc.out_channels, desc.kernel, desc.stride, desc.groups};
  }
};

struct HybridNet {
  std::vector<InstantiatedLayer> layers;
  int input_channels = 3;
  int input_resolution = 32;
  std::size_t feature_layers = 0;  // stem + IRBs; excludes MBPool head and classifier
};

HybridNet instantiate(const SearchSpace& space, const SubNetwork& net, std::uint64_t seed,
                      ShiftRange range = {});

/// Builds a network from explicit layer descriptors with He-initialised
/// weights; the whole list is treated as the feature extractor.
HybridNet instantiate_layers(std::span<const LayerDescriptor> layers, std::uint64_t seed,
                             ShiftRange range = {});

// Per-sample, per-channel variance recorded at one batch-norm site. The
// deviation of sample k is measured against the channel's batch mean, so the
// batch variance is the mean over k of sample_var[k][j].
struct BnRecord {
  std::size_t layer = 0;
  int batch = 0;
  int channels = 0;
  std::vector<double> sample_var;  // [k * channels + j]
};

struct ForwardOptions {
  bool batch_norm = true;
  bool parallel = true;         // OpenMP kernels vs serial reference
  std::size_t layer_limit = 0;  // evaluate only the first n layers; 0 = all
};

struct ForwardResult {
  Tensor output;
  std::vector<BnRecord> bn;
};

inline constexpr double kBnEpsilon = 1e-5;

/// Runs the network. Every evaluated layer but the last is followed by batch
/// norm (per-batch statistics, no affine) and ReLU; IRB skips are added at
/// block ends. The classifier sees globally average-pooled features.
ForwardResult forward(const HybridNet& net, const Tensor& x, const ForwardOptions& opts = {});

double nn_degree(std::span<const LayerDescriptor> layers);
double nn_degree(const SearchSpace& space, const SubNetwork& net);

struct ZenParams {
  double alpha = 0.01;
  int batch = 16;
  int repeats = 1;
  bool include_bn_term = true;
  bool parallel = true;
};

class NonFiniteScore : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input-perturbation score on the feature extractor. For each repeat, x and
/// then eps are drawn element by element from one N(0,1) stream seeded with
/// `seed`; the score is log(mean ||f(x) - f(x + alpha eps)||_F) plus the sum over
/// BN sites i and samples k of log sqrt(sum_j var_kij / C_i) from the f(x) pass
/// (averaged over repeats).
double zen_score(const HybridNet& net, const ZenParams& params, std::uint64_t seed);

struct ScorePair {
  double nn_degree = 0;
  double zen_score = 0;  // NaN marks a degenerate candidate
};

/// Number of entries strictly better than `value`; non-finite values rank last (|N|).
int metric_rank(double value, std::span<const double> population);

/// rank(zen) + rank(nn_degree) of population[index]; 0 is best.
int combined_score(std::size_t index, std::span<const ScorePair> population);
std::vector<int> combined_scores(std::span<const ScorePair> population);

class AllTied : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Tie-corrected Kendall tau-b.
double kendall_tau(std::span<const double> xs, std::span<const double> ys);

}  // namespace hyco
