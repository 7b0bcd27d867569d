#include "kernels_impl.hpp"

namespace hyco::kernels::omp {

namespace {
template <class Op>
Tensor run(const Tensor& x, std::size_t wcount, const ConvGeometry& g, Op op) {
  check_conv_args(x, wcount, g);
  Tensor y = detail::make_output(x, g);
  const int planes = x.n * g.out_channels;
#pragma omp parallel for schedule(static) if (planes > 1)
  for (int p = 0; p < planes; ++p) detail::plane(x, y, g, op, p / g.out_channels, p % g.out_channels);
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

}  // namespace hyco::kernels::omp
