#include <fmt/format.h>

#include "kernels_impl.hpp"

namespace hyco::kernels {

double ShiftWeight::value() const { return sign * std::ldexp(1.0, exponent); }

void check_conv_args(const Tensor& x, std::size_t weight_count, const ConvGeometry& g) {
  if (g.groups <= 0 || g.in_channels % g.groups != 0 || g.out_channels % g.groups != 0) {
    throw std::invalid_argument("groups must divide both channel counts");
  }
  if (x.c != g.in_channels) {
    throw ShapeMismatch(fmt::format("input has {} channels, layer expects {}", x.c, g.in_channels));
  }
  const auto expected = static_cast<std::size_t>(g.out_channels) * g.in_per_group() * g.kernel * g.kernel;
  if (weight_count != expected) {
    throw ShapeMismatch(fmt::format("layer has {} weights, expected {}", weight_count, expected));
  }
}

namespace serial {

namespace {
template <class Op>
Tensor run(const Tensor& x, std::size_t wcount, const ConvGeometry& g, Op op) {
  check_conv_args(x, wcount, g);
  Tensor y = detail::make_output(x, g);
  for (int n = 0; n < x.n; ++n)
    for (int co = 0; co < g.out_channels; ++co) detail::plane(x, y, g, op, n, co);
  return y;
}
}  // namespace

Tensor conv2d(const Tensor& x, std::span<const double> w, const ConvGeometry& g) {
  return run(x, w.size(), g, detail::MulOp{w.data()});
}
Tensor shift2d(const Tensor& x, std::span<const ShiftWeight> w, const ConvGeometry& g) {
  return run(x, w.size(), g, detail::ShiftOp{w.data()});
}
Tensor adder2d(const Tensor& x, std::span<const double> w, const ConvGeometry& g) {
  return run(x, w.size(), g, detail::NegL1Op{w.data()});
}

}  // namespace serial
}  // namespace hyco::kernels
