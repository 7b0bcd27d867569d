#include "hyco/search_space.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace hyco {

char layer_type_code(LayerType t) {
  switch (t) {
    case LayerType::Conv: return 'C';
    case LayerType::Shift: return 'S';
    case LayerType::Adder: return 'A';
  }
  return '?';
}

LayerType layer_type_from_code(char c) {
  switch (c) {
    case 'C': case 'c': return LayerType::Conv;
    case 'S': case 's': return LayerType::Shift;
    case 'A': case 'a': return LayerType::Adder;
    default: throw std::invalid_argument(fmt::format("unknown layer type code '{}'", c));
  }
}

SearchSpace default_space() {
  const std::vector<LayerType> all{LayerType::Conv, LayerType::Shift, LayerType::Adder};
  SearchSpace s;
  s.first_conv_channels = {16, 24};
  s.mbpool_channels = {1792, 1984};
  s.stages[0] = {{16, 24}, {1}, {3, 5}, all, {1, 2}, 1};
  s.stages[1] = {{24, 32}, {4, 5, 6}, {3, 5}, all, {3, 4, 5}, 2};
  s.stages[2] = {{32, 40}, {4, 5, 6}, {3, 5}, all, {3, 4, 5, 6}, 2};
  s.stages[3] = {{64, 72}, {4, 5, 6}, {3, 5}, all, {3, 4, 5, 6}, 2};
  s.stages[4] = {{112, 120, 128}, {4, 5, 6}, {3, 5}, all, {3, 4, 5, 6, 7, 8}, 1};
  s.stages[5] = {{192, 200, 208, 216}, {6}, {3, 5}, all, {3, 4, 5, 6, 7, 8}, 2};
  s.stages[6] = {{216, 224}, {6}, {3, 5}, all, {1, 2}, 1};
  return s;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid search space: " + what);
}

void require_choices(const std::vector<int>& v, const std::string& what, bool strictly_increasing) {
  require(!v.empty(), what + " has no choices");
  for (int x : v) require(x > 0, what + " choices must be positive");
  if (strictly_increasing) {
    require(std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end(),
            what + " choices must be strictly increasing");
  }
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

}  // namespace

void check_space(const SearchSpace& space) {
  require_choices(space.first_conv_channels, "first conv channels", true);
  require_choices(space.mbpool_channels, "MBPool channels", true);
  require(space.input_resolution > 0 && space.input_channels > 0 && space.num_classes > 0,
          "input resolution, input channels and classes must be positive");
  require(space.stem_kernel > 0 && space.stem_kernel % 2 == 1, "stem kernel must be odd");
  require(space.stem_stride == 1 || space.stem_stride == 2, "stem stride must be 1 or 2");
  for (int i = 0; i < kNumStages; ++i) {
    const auto& st = space.stages[i];
    const std::string tag = fmt::format("stage {}", i + 1);
    require_choices(st.channels, tag + " channels", true);
    require_choices(st.expansions, tag + " expansion", false);
    require_choices(st.kernels, tag + " kernel", false);
    require_choices(st.depths, tag + " depth", false);
    require(!st.types.empty(), tag + " has no layer types");
    for (int k : st.kernels) require(k == 3 || k == 5, tag + " kernels must be 3 or 5");
    require(st.stride == 1 || st.stride == 2, tag + " stride must be 1 or 2");
  }
}

std::vector<int> to_record(const SubNetwork& net) {
  std::vector<int> r;
  r.reserve(kGenomeFields);
  r.push_back(net.first_conv_c);
  for (const auto& g : net.stages) {
    r.insert(r.end(), {g.c, g.e, g.k, static_cast<int>(g.t), g.n});
  }
  r.push_back(net.mbpool_c);
  return r;
}

SubNetwork from_record(std::span<const int> r) {
  if (r.size() != kGenomeFields) {
    throw std::invalid_argument(
        fmt::format("genome record must have {} fields, got {}", kGenomeFields, r.size()));
  }
  SubNetwork net;
  net.first_conv_c = r[0];
  for (int i = 0; i < kNumStages; ++i) {
    const auto* f = &r[1 + 5 * i];
    if (f[3] < 0 || f[3] > 2) {
      throw std::invalid_argument(fmt::format("stage {} type code {} outside 0..2", i + 1, f[3]));
    }
    net.stages[i] = {f[0], f[1], f[2], static_cast<LayerType>(f[3]), f[4]};
  }
  net.mbpool_c = r[kGenomeFields - 1];
  return net;
}

std::string genome_string(const SubNetwork& net) {
  const auto r = to_record(net);
  return fmt::format("{}", fmt::join(r, "-"));
}

std::uint64_t genome_hash(const SubNetwork& net) {
  std::uint64_t h = 1469598103934665603ull;
  for (int v : to_record(net)) {
    auto u = static_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) {
      h ^= (u >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

const char* field_name(GenomeField f) {
  switch (f) {
    case GenomeField::FirstConvChannels: return "first_conv_channels";
    case GenomeField::Channels: return "channels";
    case GenomeField::Expansion: return "expansion";
    case GenomeField::Kernel: return "kernel";
    case GenomeField::Type: return "type";
    case GenomeField::Depth: return "depth";
    case GenomeField::MbpoolChannels: return "mbpool_channels";
  }
  return "?";
}

std::string MembershipViolation::message() const {
  return fmt::format("stage {} field {} value {} is outside its choice set", stage, field_name(field),
                     value);
}

MembershipError::MembershipError(const MembershipViolation& v)
    : std::invalid_argument(v.message()), violation(v) {}

std::optional<MembershipViolation> validate(const SearchSpace& space, const SubNetwork& net) {
  if (!contains(space.first_conv_channels, net.first_conv_c)) {
    return MembershipViolation{0, GenomeField::FirstConvChannels, net.first_conv_c};
  }
  for (int i = 0; i < kNumStages; ++i) {
    const auto& st = space.stages[i];
    const auto& g = net.stages[i];
    const int stage = i + 1;
    if (!contains(st.channels, g.c)) return MembershipViolation{stage, GenomeField::Channels, g.c};
    if (!contains(st.expansions, g.e)) return MembershipViolation{stage, GenomeField::Expansion, g.e};
    if (!contains(st.kernels, g.k)) return MembershipViolation{stage, GenomeField::Kernel, g.k};
    if (std::find(st.types.begin(), st.types.end(), g.t) == st.types.end()) {
      return MembershipViolation{stage, GenomeField::Type, static_cast<int>(g.t)};
    }
    if (g.n < 1 || !contains(st.depths, g.n)) return MembershipViolation{stage, GenomeField::Depth, g.n};
  }
  if (!contains(space.mbpool_channels, net.mbpool_c)) {
    return MembershipViolation{kNumStages + 1, GenomeField::MbpoolChannels, net.mbpool_c};
  }
  return std::nullopt;
}

void ensure_valid(const SearchSpace& space, const SubNetwork& net) {
  if (auto v = validate(space, net)) throw MembershipError(*v);
}

LayerDescriptor make_layer(LayerType type, int in_c, int out_c, int kernel, int stride, int groups,
                           int in_h, int in_w, LayerRole role) {
  if (groups <= 0 || in_c % groups != 0 || out_c % groups != 0) {
    throw std::invalid_argument("groups must divide both channel counts");
  }
  LayerDescriptor l;
  l.op_type = type;
  l.in_channels = in_c;
  l.out_channels = out_c;
  l.kernel = kernel;
  l.stride = stride;
  l.groups = groups;
  l.in_h = in_h;
  l.in_w = in_w;
  l.out_h = (in_h + stride - 1) / stride;
  l.out_w = (in_w + stride - 1) / stride;
  l.role = role;
  return l;
}

std::vector<LayerDescriptor> expand(const SearchSpace& space, const SubNetwork& net) {
  ensure_valid(space, net);
  std::vector<LayerDescriptor> layers;
  int res = space.input_resolution;
  layers.push_back(make_layer(LayerType::Conv, space.input_channels, net.first_conv_c, space.stem_kernel,
                              space.stem_stride, 1, res, res, LayerRole::Stem));
  res = layers.back().out_h;
  int in_c = net.first_conv_c;
  int block = 0;
  for (int s = 0; s < kNumStages; ++s) {
    const auto& g = net.stages[s];
    for (int b = 0; b < g.n; ++b, ++block) {
      const int stride = b == 0 ? space.stages[s].stride : 1;
      const int hidden = in_c * g.e;
      const int residual = (stride == 1 && in_c == g.c) ? in_c : 0;
      const auto first = layers.size();
      int h = res;
      if (g.e != 1) {
        layers.push_back(make_layer(g.t, in_c, hidden, 1, 1, 1, h, h, LayerRole::ExpandPW));
      }
      layers.push_back(make_layer(g.t, hidden, hidden, g.k, stride, hidden, h, h, LayerRole::Depthwise));
      h = layers.back().out_h;
      layers.push_back(make_layer(g.t, hidden, g.c, 1, 1, 1, h, h, LayerRole::ProjectPW));
      for (auto i = first; i < layers.size(); ++i) {
        layers[i].block = block;
        layers[i].residual_channels = residual;
      }
      res = h;
      in_c = g.c;
    }
  }
  layers.push_back(make_layer(LayerType::Conv, in_c, net.mbpool_c, 1, 1, 1, res, res, LayerRole::Head));
  layers.push_back(
      make_layer(LayerType::Conv, net.mbpool_c, space.num_classes, 1, 1, 1, 1, 1, LayerRole::Classifier));
  return layers;
}

std::size_t feature_layer_count(std::span<const LayerDescriptor> layers) {
  std::size_t n = 0;
  while (n < layers.size() && layers[n].role != LayerRole::Head && layers[n].role != LayerRole::Classifier) ++n;
  return n;
}

MacCounts count_macs(std::span<const LayerDescriptor> layers) {
  MacCounts m;
  for (const auto& l : layers) {
    switch (l.op_type) {
      case LayerType::Conv: m.conv += l.macs(); break;
      case LayerType::Shift: m.shift += l.macs(); break;
      case LayerType::Adder: m.adder += l.macs(); break;
    }
  }
  return m;
}

OpCounts ops_from_macs(const MacCounts& m) {
  // conv MAC = mult + add, shift MAC = shift + add, adder MAC = two adds
  OpCounts o;
  o.mults = static_cast<double>(m.conv) / 1e6;
  o.shifts = static_cast<double>(m.shift) / 1e6;
  o.adds = static_cast<double>(m.conv + m.shift + 2 * m.adder) / 1e6;
  return o;
}

OpCounts count_ops(std::span<const LayerDescriptor> layers) { return ops_from_macs(count_macs(layers)); }

std::vector<int> field_choices(const SearchSpace& space, std::size_t index) {
  if (index == 0) return space.first_conv_channels;
  if (index == kGenomeFields - 1) return space.mbpool_channels;
  if (index >= kGenomeFields) throw std::out_of_range("genome field index");
  const auto& st = space.stages[(index - 1) / 5];
  switch ((index - 1) % 5) {
    case 0: return st.channels;
    case 1: return st.expansions;
    case 2: return st.kernels;
    case 3: {
      std::vector<int> t;
      for (auto x : st.types) t.push_back(static_cast<int>(x));
      return t;
    }
    default: return st.depths;
  }
}

namespace {

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

}  // namespace

SubNetwork sample_random(const SearchSpace& space, Rng& rng) {
  std::vector<int> r(kGenomeFields);
  for (std::size_t i = 0; i < kGenomeFields; ++i) r[i] = pick(field_choices(space, i), rng);
  return from_record(r);
}

SubNetwork mutate(const SearchSpace& space, const SubNetwork& net, double prob, Rng& rng) {
  if (prob < 0.0 || prob > 1.0) throw std::invalid_argument("mutation probability outside [0, 1]");
  auto r = to_record(net);
  std::bernoulli_distribution flip(prob);
  for (std::size_t i = 0; i < kGenomeFields; ++i) {
    if (!flip(rng)) continue;
    auto choices = field_choices(space, i);
    if (choices.size() > 1) std::erase(choices, r[i]);
    r[i] = pick(choices, rng);
  }
  return from_record(r);
}

SubNetwork crossover(const SubNetwork& a, const SubNetwork& b, Rng& rng, double take_b) {
  auto ra = to_record(a);
  const auto rb = to_record(b);
  std::bernoulli_distribution from_b(take_b);
  for (std::size_t i = 0; i < kGenomeFields; ++i) {
    if (from_b(rng)) ra[i] = rb[i];
  }
  return from_record(ra);
}

}  // namespace hyco
