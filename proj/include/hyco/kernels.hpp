#pragma once

#include <cstdint>
#include <span>

#include "hyco/tensor.hpp"

// Layer kernels for the zero-shot forward pass. Every kernel exists twice:
// `serial` is the straight-line reference kept for testing, `omp` splits the
// (sample, output channel) planes across threads. Each output element is
// accumulated in the same order by both, so results are bit-identical.
namespace hyco::kernels {

struct ConvGeometry {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int groups = 1;

  int pad() const { return (kernel - 1) / 2; }
  int out_extent(int in) const { return (in + stride - 1) / stride; }
  int in_per_group() const { return in_channels / groups; }
  int out_per_group() const { return out_channels / groups; }
};

struct ShiftWeight {
  std::int8_t sign = 1;
  std::int8_t exponent = 0;

  double value() const;
};

// Weights are laid out [out][in_per_group][k][k].
namespace serial {
Tensor conv2d(const Tensor& x, std::span<const double> weights, const ConvGeometry& g);
Tensor shift2d(const Tensor& x, std::span<const ShiftWeight> weights, const ConvGeometry& g);
Tensor adder2d(const Tensor& x, std::span<const double> weights, const ConvGeometry& g);
}  // namespace serial

namespace omp {
Tensor conv2d(const Tensor& x, std::span<const double> weights, const ConvGeometry& g);
Tensor shift2d(const Tensor& x, std::span<const ShiftWeight> weights, const ConvGeometry& g);
Tensor adder2d(const Tensor& x, std::span<const double> weights, const ConvGeometry& g);
}  // namespace omp

void check_conv_args(const Tensor& x, std::size_t weight_count, const ConvGeometry& g);

}  // namespace hyco::kernels
