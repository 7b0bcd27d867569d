#include "hyco/zeroshot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include <fmt/format.h>

namespace hyco {

ShiftWeight quantize_shift(double w, ShiftRange range) {
  if (w == 0.0 || !std::isfinite(w)) {
    return {1, static_cast<std::int8_t>(range.p_min)};
  }
  const double p = std::round(std::log2(std::fabs(w)));
  const int clamped = static_cast<int>(std::clamp(p, double(range.p_min), double(range.p_max)));
  return {static_cast<std::int8_t>(w < 0 ? -1 : 1), static_cast<std::int8_t>(clamped)};
}

HybridNet instantiate_layers(std::span<const LayerDescriptor> layers, std::uint64_t seed, ShiftRange range) {
  if (layers.empty()) throw std::invalid_argument("cannot instantiate an empty network");
  HybridNet net;
  net.input_channels = layers.front().in_channels;
  net.input_resolution = layers.front().in_h;
  net.feature_layers = layers.size();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& d : layers) {
    InstantiatedLayer l;
    l.desc = d;
    const auto count = static_cast<std::size_t>(d.out_channels) * (d.in_channels / d.groups) * d.kernel * d.kernel;
    const double fan_in = static_cast<double>(d.in_channels / d.groups) * d.kernel * d.kernel;
    const double scale = std::sqrt(2.0 / fan_in);
    std::vector<double> w(count);
    for (auto& v : w) v = normal(rng) * scale;
    if (d.op_type == LayerType::Shift) {
      l.shifts.reserve(count);
      for (double v : w) l.shifts.push_back(quantize_shift(v, range));
    } else {
      l.weights = std::move(w);
    }
    net.layers.push_back(std::move(l));
  }
  return net;
}

HybridNet instantiate(const SearchSpace& space, const SubNetwork& net, std::uint64_t seed, ShiftRange range) {
  const auto layers = expand(space, net);
  HybridNet h = instantiate_layers(layers, seed, range);
  h.feature_layers = feature_layer_count(layers);
  return h;
}

namespace {

Tensor run_layer(const InstantiatedLayer& l, const Tensor& x, bool parallel) {
  const auto g = l.geometry();
  switch (l.desc.op_type) {
    case LayerType::Conv:
      return parallel ? kernels::omp::conv2d(x, l.weights, g) : kernels::serial::conv2d(x, l.weights, g);
    case LayerType::Shift:
      return parallel ? kernels::omp::shift2d(x, l.shifts, g) : kernels::serial::shift2d(x, l.shifts, g);
    case LayerType::Adder:
      return parallel ? kernels::omp::adder2d(x, l.weights, g) : kernels::serial::adder2d(x, l.weights, g);
  }
  throw std::logic_error("unknown layer type");
}

Tensor global_avg_pool(const Tensor& x) {
  Tensor y(x.n, x.c, 1, 1);
  const double inv = 1.0 / (static_cast<double>(x.h) * x.w);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c) {
      double s = 0;
      for (int h = 0; h < x.h; ++h)
        for (int w = 0; w < x.w; ++w) s += x.at(n, c, h, w);
      y.at(n, c, 0, 0) = s * inv;
    }
  return y;
}

BnRecord batch_norm(Tensor& y, std::size_t layer) {
  BnRecord rec;
  rec.layer = layer;
  rec.batch = y.n;
  rec.channels = y.c;
  rec.sample_var.assign(static_cast<std::size_t>(y.n) * y.c, 0.0);
  const double hw = static_cast<double>(y.h) * y.w;
  for (int c = 0; c < y.c; ++c) {
    double mean = 0;
    for (int n = 0; n < y.n; ++n)
      for (int h = 0; h < y.h; ++h)
        for (int w = 0; w < y.w; ++w) mean += y.at(n, c, h, w);
    mean /= hw * y.n;
    double batch_var = 0;
    for (int n = 0; n < y.n; ++n) {
      double sq = 0;
      for (int h = 0; h < y.h; ++h)
        for (int w = 0; w < y.w; ++w) {
          const double d = y.at(n, c, h, w) - mean;
          sq += d * d;
        }
      rec.sample_var[static_cast<std::size_t>(n) * y.c + c] = sq / hw;
      batch_var += sq / hw;
    }
    batch_var /= y.n;
    const double inv = 1.0 / std::sqrt(batch_var + kBnEpsilon);
    for (int n = 0; n < y.n; ++n)
      for (int h = 0; h < y.h; ++h)
        for (int w = 0; w < y.w; ++w) y.at(n, c, h, w) = (y.at(n, c, h, w) - mean) * inv;
  }
  return rec;
}

}  // namespace

ForwardResult forward(const HybridNet& net, const Tensor& x, const ForwardOptions& opts) {
  if (x.c != net.input_channels || x.h != net.input_resolution || x.w != net.input_resolution) {
    throw ShapeMismatch(fmt::format("input shape ({}, {}, {}) does not match network input ({}, {}, {})", x.c,
                                    x.h, x.w, net.input_channels, net.input_resolution, net.input_resolution));
  }
  const std::size_t count =
      opts.layer_limit == 0 ? net.layers.size() : std::min(opts.layer_limit, net.layers.size());
  ForwardResult out;
  Tensor cur = x;
  Tensor block_input;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& l = net.layers[i];
    const int block = l.desc.block;
    if (block >= 0 && (i == 0 || net.layers[i - 1].desc.block != block)) block_input = cur;
    if (l.desc.role == LayerRole::Classifier && (cur.h != 1 || cur.w != 1)) cur = global_avg_pool(cur);
    Tensor y = run_layer(l, cur, opts.parallel);
    const bool last = i + 1 == count;
    if (!last) {
      if (opts.batch_norm) out.bn.push_back(batch_norm(y, i));
      for (auto& v : y.data) v = std::max(v, 0.0);
    }
    const bool block_end = block >= 0 && (i + 1 == net.layers.size() || net.layers[i + 1].desc.block != block);
    if (block_end && l.desc.residual_channels > 0) {
      if (!y.same_shape(block_input)) throw ShapeMismatch("residual shape mismatch");
      for (std::size_t j = 0; j < y.size(); ++j) y.data[j] += block_input.data[j];
    }
    cur = std::move(y);
  }
  out.output = std::move(cur);
  return out;
}

double nn_degree(std::span<const LayerDescriptor> layers) {
  struct Acc {
    double out_sum = 0, in_sum = 0;
    int count = 0;
    int residual = 0;
  };
  std::map<int, Acc> blocks;
  for (const auto& l : layers) {
    if (l.block < 0) continue;
    auto& a = blocks[l.block];
    a.out_sum += l.out_channels;
    a.in_sum += l.in_channels;
    a.count += 1;
    a.residual = l.residual_channels;
  }
  double total = 0;
  for (const auto& [id, a] : blocks) total += a.out_sum / a.count + a.residual / a.in_sum;
  return total;
}

double nn_degree(const SearchSpace& space, const SubNetwork& net) { return nn_degree(expand(space, net)); }

double zen_score(const HybridNet& net, const ZenParams& p, std::uint64_t seed) {
  if (!(p.alpha > 0)) throw std::invalid_argument("zen alpha must be positive");
  if (p.batch < 2) throw std::invalid_argument("zen batch must be at least 2");
  if (p.repeats < 1) throw std::invalid_argument("zen repeats must be at least 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ForwardOptions opts;
  opts.layer_limit = net.feature_layers;
  opts.parallel = p.parallel;
  double norm_sum = 0;
  double bn_sum = 0;
  for (int r = 0; r < p.repeats; ++r) {
    Tensor x(p.batch, net.input_channels, net.input_resolution, net.input_resolution);
    Tensor eps = x;
    for (auto& v : x.data) v = normal(rng);
    for (auto& v : eps.data) v = normal(rng);
    Tensor xp = x;
    for (std::size_t i = 0; i < xp.size(); ++i) xp.data[i] += p.alpha * eps.data[i];
    const auto fx = forward(net, x, opts);
    const auto fxp = forward(net, xp, opts);
    double sq = 0;
    for (std::size_t i = 0; i < fx.output.size(); ++i) {
      const double d = fx.output.data[i] - fxp.output.data[i];
      sq += d * d;
    }
    norm_sum += std::sqrt(sq);
    if (p.include_bn_term) {
      for (const auto& rec : fx.bn) {
        for (int k = 0; k < rec.batch; ++k) {
          double s = 0;
          for (int j = 0; j < rec.channels; ++j) s += rec.sample_var[static_cast<std::size_t>(k) * rec.channels + j];
          bn_sum += std::log(std::sqrt(s / rec.channels));
        }
      }
    }
  }
  const double score = std::log(norm_sum / p.repeats) + bn_sum / p.repeats;
  if (!std::isfinite(score)) throw NonFiniteScore(fmt::format("zen score is not finite ({})", score));
  return score;
}

int metric_rank(double value, std::span<const double> population) {
  if (!std::isfinite(value)) return static_cast<int>(population.size());
  int better = 0;
  for (double v : population) {
    if (std::isfinite(v) && v > value) ++better;
  }
  return better;
}

namespace {
std::vector<int> combined_impl(std::span<const ScorePair> pop) {
  std::vector<double> zen, nn;
  for (const auto& s : pop) {
    zen.push_back(s.zen_score);
    nn.push_back(s.nn_degree);
  }
  std::vector<int> out;
  out.reserve(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) {
    out.push_back(metric_rank(pop[i].zen_score, zen) + metric_rank(pop[i].nn_degree, nn));
  }
  return out;
}
}  // namespace

int combined_score(std::size_t index, std::span<const ScorePair> population) {
  if (index >= population.size()) throw std::out_of_range("candidate not in population");
  std::vector<double> zen, nn;
  for (const auto& s : population) {
    zen.push_back(s.zen_score);
    nn.push_back(s.nn_degree);
  }
  return metric_rank(population[index].zen_score, zen) + metric_rank(population[index].nn_degree, nn);
}

std::vector<int> combined_scores(std::span<const ScorePair> population) { return combined_impl(population); }

double kendall_tau(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("kendall_tau: sequences differ in length");
  if (xs.size() < 2) throw std::invalid_argument("kendall_tau: need at least two observations");
  long long concordant = 0, discordant = 0, tie_x = 0, tie_y = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const double dx = xs[j] - xs[i];
      const double dy = ys[j] - ys[i];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        ++tie_x;
      } else if (dy == 0) {
        ++tie_y;
      } else if ((dx > 0) == (dy > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double denom = std::sqrt(double(concordant + discordant + tie_x) * double(concordant + discordant + tie_y));
  if (denom == 0) throw AllTied("kendall_tau: every pair is tied");
  return (concordant - discordant) / denom;
}

}  // namespace hyco
