#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyco {

enum class LayerType : int { Conv = 0, Shift = 1, Adder = 2 };

char layer_type_code(LayerType t);
LayerType layer_type_from_code(char c);

inline constexpr int kNumStages = 7;

struct StageSpec {
  std::vector<int> channels;
  std::vector<int> expansions;
  std::vector<int> kernels;
  std::vector<LayerType> types;
  std::vector<int> depths;
  int stride = 1;  // stride of the first block in the stage
};

struct SearchSpace {
  std::array<StageSpec, kNumStages> stages;
  std::vector<int> first_conv_channels;
  std::vector<int> mbpool_channels;
  int input_resolution = 32;
  int input_channels = 3;
  int num_classes = 10;
  int stem_kernel = 3;
  int stem_stride = 2;
};

/// The hybrid conv/shift/adder space: seven IRB stages between a searched
/// stem and an MBPool head.
SearchSpace default_space();

/// Throws std::invalid_argument when a structural invariant of the space is
/// broken (empty choice set, unsorted channels, kernel outside {3,5}, ...).
void check_space(const SearchSpace& space);

struct StageGene {
  int c = 0;
  int e = 0;
  int k = 0;
  LayerType t = LayerType::Conv;
  int n = 0;

  bool operator==(const StageGene&) const = default;
};

struct SubNetwork {
  int first_conv_c = 0;
  std::array<StageGene, kNumStages> stages{};
  int mbpool_c = 0;

  bool operator==(const SubNetwork&) const = default;
};

// Flat integer record: [first_c, (c, e, k, t, n) x 7, mbpool_c].
inline constexpr std::size_t kGenomeFields = 2 + 5 * kNumStages;

std::vector<int> to_record(const SubNetwork& net);
SubNetwork from_record(std::span<const int> record);
std::string genome_string(const SubNetwork& net);  // '-'-joined record
std::uint64_t genome_hash(const SubNetwork& net);

enum class GenomeField { FirstConvChannels, Channels, Expansion, Kernel, Type, Depth, MbpoolChannels };

const char* field_name(GenomeField f);

struct MembershipViolation {
  int stage;  // 0 = first conv, 1..7 = stages, 8 = MBPool
  GenomeField field;
  int value;

  std::string message() const;
};

class MembershipError : public std::invalid_argument {
 public:
  explicit MembershipError(const MembershipViolation& v);
  MembershipViolation violation;
};

std::optional<MembershipViolation> validate(const SearchSpace& space, const SubNetwork& net);
void ensure_valid(const SearchSpace& space, const SubNetwork& net);

enum class LayerRole { Stem, ExpandPW, Depthwise, ProjectPW, Head, Classifier };

struct LayerDescriptor {
  LayerType op_type = LayerType::Conv;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int groups = 1;
  int in_h = 0, in_w = 0;
  int out_h = 0, out_w = 0;
  LayerRole role = LayerRole::Stem;
  int block = -1;             // IRB index, -1 outside IRBs
  int residual_channels = 0;  // channels carried by the block's skip, 0 if none

  std::int64_t macs() const {
    return static_cast<std::int64_t>(out_channels) * (in_channels / groups) * kernel * kernel *
           out_h * out_w;
  }
  bool operator==(const LayerDescriptor&) const = default;
};

/// Same-padding convolution layer; spatial output is ceil(in / stride).
LayerDescriptor make_layer(LayerType type, int in_c, int out_c, int kernel, int stride, int groups,
                           int in_h, int in_w, LayerRole role = LayerRole::Stem);

std::vector<LayerDescriptor> expand(const SearchSpace& space, const SubNetwork& net);

/// Number of leading layers that make up the feature extractor (stem + IRBs).
std::size_t feature_layer_count(std::span<const LayerDescriptor> layers);

struct OpCounts {
  double mults = 0;  // millions
  double shifts = 0;
  double adds = 0;

  double total() const { return mults + shifts + adds; }
  OpCounts& operator+=(const OpCounts& o) {
    mults += o.mults;
    shifts += o.shifts;
    adds += o.adds;
    return *this;
  }
  friend OpCounts operator+(OpCounts a, const OpCounts& b) { return a += b; }
};

struct MacCounts {
  std::int64_t conv = 0;
  std::int64_t shift = 0;
  std::int64_t adder = 0;
};

MacCounts count_macs(std::span<const LayerDescriptor> layers);
OpCounts ops_from_macs(const MacCounts& macs);
OpCounts count_ops(std::span<const LayerDescriptor> layers);

using Rng = std::mt19937_64;

SubNetwork sample_random(const SearchSpace& space, Rng& rng);
SubNetwork mutate(const SearchSpace& space, const SubNetwork& net, double prob, Rng& rng);
/// Each field comes from `b` with probability `take_b` and from `a` otherwise.
SubNetwork crossover(const SubNetwork& a, const SubNetwork& b, Rng& rng, double take_b = 0.5);

/// Allowed values for record slot `index` (layer types encoded as ints).
std::vector<int> field_choices(const SearchSpace& space, std::size_t index);

}  // namespace hyco
