#include <doctest.h>

#include <random>

#include "hyco/kernels.hpp"
#include "hyco/zeroshot.hpp"

using namespace hyco;
using namespace hyco::kernels;

namespace {

struct Case {
  Tensor x;
  ConvGeometry g;
  std::vector<double> w;
};

Case random_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ch(1, 8), hw(1, 9), pick(0, 3);
  std::normal_distribution<double> nd;
  Case c;
  const int in_c = ch(rng);
  const int kernel = std::array{1, 3, 5, 3}[pick(rng)];
  const int stride = pick(rng) == 0 ? 2 : 1;
  const bool depthwise = pick(rng) == 1;
  const int out_c = depthwise ? in_c : ch(rng);
  c.g = {in_c, out_c, kernel, stride, depthwise ? in_c : 1};
  c.x = Tensor(2, in_c, hw(rng), 0);
  c.x = Tensor(2, in_c, c.x.h, hw(rng));
  for (auto& v : c.x.data) v = nd(rng);
  c.w.resize(static_cast<std::size_t>(out_c) * c.g.in_per_group() * kernel * kernel);
  for (auto& v : c.w) v = nd(rng) * 0.7;
  return c;
}

// Straight-line cross-correlation with zero padding.
Tensor reference(const Tensor& x, const ConvGeometry& g, const std::vector<double>& w, bool adder) {
  const int oh = g.out_extent(x.h), ow = g.out_extent(x.w);
  Tensor y(x.n, g.out_channels, oh, ow);
  const int k = g.kernel, pad = g.pad(), ipg = g.in_per_group();
  for (int n = 0; n < x.n; ++n)
    for (int co = 0; co < g.out_channels; ++co) {
      const int c0 = (co / g.out_per_group()) * ipg;
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          double acc = 0;
          for (int ci = 0; ci < ipg; ++ci)
            for (int a = 0; a < k; ++a)
              for (int b = 0; b < k; ++b) {
                const int ih = i * g.stride + a - pad, iw = j * g.stride + b - pad;
                const double v = (ih >= 0 && ih < x.h && iw >= 0 && iw < x.w) ? x.at(n, c0 + ci, ih, iw) : 0.0;
                const double wt = w[((static_cast<std::size_t>(co) * ipg + ci) * k + a) * k + b];
                acc += adder ? -std::fabs(v - wt) : v * wt;
              }
          y.at(n, co, i, j) = acc;
        }
    }
  return y;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("serial and OpenMP kernels are bit-identical") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 60; ++t) {
      const auto c = random_case(rng);
      std::vector<ShiftWeight> sw;
      for (double v : c.w) sw.push_back(quantize_shift(v));
      CHECK(serial::conv2d(c.x, c.w, c.g).data == omp::conv2d(c.x, c.w, c.g).data);
      CHECK(serial::adder2d(c.x, c.w, c.g).data == omp::adder2d(c.x, c.w, c.g).data);
      CHECK(serial::shift2d(c.x, sw, c.g).data == omp::shift2d(c.x, sw, c.g).data);
    }
  }

  TEST_CASE("kernels match a straight-line reference") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 40; ++t) {
      const auto c = random_case(rng);
      const auto conv = serial::conv2d(c.x, c.w, c.g);
      const auto ref = reference(c.x, c.g, c.w, false);
      REQUIRE(conv.same_shape(ref));
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(conv.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-12));
      const auto add = serial::adder2d(c.x, c.w, c.g);
      const auto aref = reference(c.x, c.g, c.w, true);
      for (std::size_t i = 0; i < aref.size(); ++i) CHECK(add.data[i] == doctest::Approx(aref.data[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("adder layer by hand") {
    Tensor x(1, 2, 1, 1);
    x.data = {1, 3};
    const std::vector<double> w{2, 1};
    const auto y = serial::adder2d(x, w, {2, 1, 1, 1, 1});
    CHECK(y.data.at(0) == -3.0);
  }

  TEST_CASE("shift with unit weights equals all-ones conv") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    Tensor x(2, 3, 5, 5);
    for (auto& v : x.data) v = nd(rng);
    const ConvGeometry g{3, 4, 3, 1, 1};
    const std::size_t count = 4 * 3 * 9;
    const std::vector<ShiftWeight> sw(count, ShiftWeight{1, 0});
    const std::vector<double> ones(count, 1.0);
    CHECK(serial::shift2d(x, sw, g).data == serial::conv2d(x, ones, g).data);
  }

  TEST_CASE("1x1 identity conv passes the input through") {
    Tensor x(1, 1, 3, 3);
    for (std::size_t i = 0; i < x.size(); ++i) x.data[i] = double(i) - 4;
    const std::vector<double> w{1.0};
    CHECK(serial::conv2d(x, w, {1, 1, 1, 1, 1}).data == x.data);
  }

  TEST_CASE("argument checks") {
    Tensor x(1, 3, 4, 4);
    std::vector<double> w(5);
    CHECK_THROWS_AS(serial::conv2d(x, w, {3, 4, 3, 1, 1}), ShapeMismatch);
    CHECK_THROWS(check_conv_args(x, 4 * 3 * 9, {4, 4, 3, 1, 1}));
  }
}
