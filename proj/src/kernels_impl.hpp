#pragma once

#include <algorithm>
#include <cmath>

#include "hyco/kernels.hpp"

namespace hyco::kernels::detail {

struct MulOp {
  const double* w;
  double operator()(double x, std::size_t i) const { return x * w[i]; }
};

struct ShiftOp {
  const ShiftWeight* w;
  double operator()(double x, std::size_t i) const {
    const double v = std::ldexp(x, w[i].exponent);
    return w[i].sign < 0 ? -v : v;
  }
};

struct NegL1Op {
  const double* w;
  double operator()(double x, std::size_t i) const { return -std::fabs(x - w[i]); }
};

// Computes output plane (sample `n`, channel `co`). Padded positions read 0.
template <class Op>
void plane(const Tensor& x, Tensor& y, const ConvGeometry& g, Op op, int n, int co) {
  const int k = g.kernel;
  const int pad = g.pad();
  const int ipg = g.in_per_group();
  const int c0 = (co / g.out_per_group()) * ipg;
  const std::size_t wbase = static_cast<std::size_t>(co) * ipg * k * k;
  if (k == 1 && g.stride == 1) {
    // Pointwise fast path; per-element accumulation order (ci ascending) is
    // the same as the general loop below.
    const std::size_t hw = static_cast<std::size_t>(y.h) * y.w;
    double* out = &y.at(n, co, 0, 0);
    std::fill(out, out + hw, 0.0);
    for (int ci = 0; ci < ipg; ++ci) {
      const double* in = x.data.data() + x.index(n, c0 + ci, 0, 0);
      const std::size_t wi = wbase + ci;
      for (std::size_t p = 0; p < hw; ++p) out[p] += op(in[p], wi);
    }
    return;
  }
  for (int oh = 0; oh < y.h; ++oh) {
    for (int ow = 0; ow < y.w; ++ow) {
      double acc = 0.0;
      for (int ci = 0; ci < ipg; ++ci) {
        for (int kh = 0; kh < k; ++kh) {
          const int ih = oh * g.stride + kh - pad;
          for (int kw = 0; kw < k; ++kw) {
            const int iw = ow * g.stride + kw - pad;
            const bool inside = ih >= 0 && ih < x.h && iw >= 0 && iw < x.w;
            const double v = inside ? x.at(n, c0 + ci, ih, iw) : 0.0;
            acc += op(v, wbase + (static_cast<std::size_t>(ci) * k + kh) * k + kw);
          }
        }
      }
      y.at(n, co, oh, ow) = acc;
    }
  }
}

inline Tensor make_output(const Tensor& x, const ConvGeometry& g) {
  return Tensor(x.n, g.out_channels, g.out_extent(x.h), g.out_extent(x.w));
}

}  // namespace hyco::kernels::detail
