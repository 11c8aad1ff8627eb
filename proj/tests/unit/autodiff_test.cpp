// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <vector>

#include "cose/autodiff/graph.hpp"
#include "cose/error.hpp"
#include "cose/random.hpp"
#include "support/finite_difference.hpp"

using cose::Errc;
using cose::Error;
using cose::Rng;
using namespace cose::autodiff;

namespace {

template <typename T>
Tensor<T> random_tensor(Rng& rng, Shape shape, double scale = 1.0, bool requires_grad = false) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(-scale, scale));
  t.requires_grad = requires_grad;
  return t;
}

template <typename T>
Tensor<T> unit_seed(const Shape& shape) {
  return Tensor<T>(shape, T{1});
}

// Naive quadruple loop, independent of the im2col path.
std::vector<double> reference_conv(const Tensor<double>& x, const Tensor<double>& w,
                                   const Tensor<double>& b, std::size_t stride, std::size_t pad) {
  const std::size_t c = x.shape[0], h = x.shape[1], wd = x.shape[2];
  const std::size_t o = w.shape[0], k = w.shape[2];
  const std::size_t ho = (h + 2 * pad - k) / stride + 1, wo = (wd + 2 * pad - k) / stride + 1;
  std::vector<double> out(o * ho * wo, 0.0);
  for (std::size_t oc = 0; oc < o; ++oc)
    for (std::size_t oy = 0; oy < ho; ++oy)
      for (std::size_t ox = 0; ox < wo; ++ox) {
        double s = b.data[oc];
        for (std::size_t ci = 0; ci < c; ++ci)
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
              const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) continue;
              s += w.data[((oc * c + ci) * k + ky) * k + kx] * x.data[(ci * h + iy) * wd + ix];
            }
        out[(oc * ho + oy) * wo + ox] = s;
      }
  return out;
}

struct CnnParams {
  Tensor<double> c1w, c1b, c2w, c2b, dw, db;
};

CnnParams random_cnn(Rng& rng, std::size_t side) {
  CnnParams p;
  p.c1w = random_tensor<double>(rng, {4, 3, 3, 3}, 0.5);
  p.c1b = random_tensor<double>(rng, {4}, 0.1);
  p.c2w = random_tensor<double>(rng, {6, 4, 3, 3}, 0.4);
  p.c2b = random_tensor<double>(rng, {6}, 0.1);
  const std::size_t flat = 6 * (side / 4) * (side / 4);
  p.dw = random_tensor<double>(rng, {3, flat}, 0.3);
  p.db = random_tensor<double>(rng, {3}, 0.1);
  return p;
}

template <typename T>
Tensor<T> cast(const Tensor<double>& t, bool requires_grad) {
  Tensor<T> out(t.shape);
  for (std::size_t i = 0; i < t.size(); ++i) out.data[i] = static_cast<T>(t.data[i]);
  out.requires_grad = requires_grad;
  return out;
}

template <typename T>
Graph<T> build_cnn(const CnnParams& p, std::size_t side, std::size_t label) {
  Graph<T> g;
  auto x = g.input({3, side, side});
  auto c1 = g.conv2d(x, g.parameter(cast<T>(p.c1w, true), "c1w"), g.parameter(cast<T>(p.c1b, true), "c1b"),
                     {1, 1}, "conv1");
  auto r1 = g.relu(c1, "relu1");
  auto p1 = g.max_pool2d(r1, {2, 2}, "pool1");
  auto c2 = g.conv2d(p1, g.parameter(cast<T>(p.c2w, true), "c2w"), g.parameter(cast<T>(p.c2b, true), "c2b"),
                     {1, 1}, "conv2");
  auto r2 = g.relu(c2, "relu2");
  auto p2 = g.avg_pool2d(r2, {2, 2}, "pool2");
  auto logits = g.dense(p2, g.parameter(cast<T>(p.dw, true), "dw"), g.parameter(cast<T>(p.db, true), "db"),
                        "logits");
  g.set_output(g.cross_entropy(logits, label, "loss"));
  return g;
}

}  // namespace

TEST(AutodiffForward, IdentityGraphReturnsInput) {
  Graph<float> g;
  auto x = g.input({2, 3});
  g.set_output(x);
  Tensor<float> in({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(g.forward(in).data, in.data);
}

TEST(AutodiffForward, DenseWithZeroBiasIsMatrixVector) {
  Graph<double> g;
  auto x = g.input({3});
  Tensor<double> w({2, 3}, {1, 2, 3, -1, 0.5, 4});
  g.set_output(g.dense(x, g.parameter(w, "w"), g.parameter(Tensor<double>({2}, 0.0), "b")));
  Tensor<double> in({3}, {0.5, -1, 2});
  const auto& out = g.forward(in).data;
  EXPECT_DOUBLE_EQ(out[0], 1 * 0.5 + 2 * -1 + 3 * 2);
  EXPECT_DOUBLE_EQ(out[1], -1 * 0.5 + 0.5 * -1 + 4 * 2);
}

TEST(AutodiffForward, TwoLayerNetMatchesStraightLineEvaluation) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto w1 = random_tensor<double>(rng, {5, 4});
    auto b1 = random_tensor<double>(rng, {5});
    auto w2 = random_tensor<double>(rng, {3, 5});
    auto b2 = random_tensor<double>(rng, {3});
    Graph<double> g;
    auto x = g.input({4});
    auto h = g.relu(g.dense(x, g.parameter(w1, "w1"), g.parameter(b1, "b1")));
    g.set_output(g.dense(h, g.parameter(w2, "w2"), g.parameter(b2, "b2")));
    auto in = random_tensor<double>(rng, {4});
    const auto out = g.forward(in).data;

    std::vector<double> hidden(5);
    for (int i = 0; i < 5; ++i) {
      double s = b1.data[i];
      for (int j = 0; j < 4; ++j) s += w1.data[i * 4 + j] * in.data[j];
      hidden[i] = std::max(0.0, s);
    }
    for (int i = 0; i < 3; ++i) {
      double s = b2.data[i];
      for (int j = 0; j < 5; ++j) s += w2.data[i * 5 + j] * hidden[j];
      EXPECT_NEAR(out[i], s, 1e-12);
    }
  }
}

TEST(AutodiffForward, InputShapeMismatchNamesNode) {
  Graph<float> g;
  auto x = g.input({3, 4, 4}, "image");
  g.set_output(g.relu(x));
  try {
    g.forward(Tensor<float>({3, 5, 4}));
    FAIL() << "expected shape mismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kShapeMismatch);
    EXPECT_NE(std::string(e.what()).find("image"), std::string::npos);
  }
}

TEST(AutodiffForward, BuildTimeShapeErrorsNameNode) {
  Graph<float> g;
  auto x = g.input({3, 8, 8});
  auto w = g.parameter(Tensor<float>({4, 2, 3, 3}), "w");
  try {
    g.conv2d(x, w, std::nullopt, {}, "bad_conv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kShapeMismatch);
    EXPECT_NE(std::string(e.what()).find("bad_conv"), std::string::npos);
  }
}

TEST(AutodiffForward, InvalidKernelStrideRejectedAtBuild) {
  Graph<float> g;
  auto x = g.input({1, 4, 4});
  auto w5 = g.parameter(Tensor<float>({1, 1, 5, 5}), "w5");
  auto w3 = g.parameter(Tensor<float>({1, 1, 3, 3}), "w3");
  auto expect_invalid = [](auto&& fn) {
    try {
      fn();
      FAIL() << "expected invalid-graph";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::kInvalidGraph);
    }
  };
  expect_invalid([&] { g.conv2d(x, w5, std::nullopt, {1, 0}); });
  expect_invalid([&] { g.conv2d(x, w3, std::nullopt, {0, 1}); });
  expect_invalid([&] { g.conv2d(x, w3, std::nullopt, {1, 3}); });
  expect_invalid([&] { g.max_pool2d(x, {5, 1}); });
  expect_invalid([&] { g.avg_pool2d(x, {2, 0}); });
  expect_invalid([&] { g.gaussian_blur(x, -1.0); });
}

TEST(AutodiffForward, ReluValues) {
  Graph<float> g;
  auto x = g.input({2});
  g.set_output(g.relu(x));
  const auto& out = g.forward(Tensor<float>({2}, {-1.0f, 2.0f})).data;
  EXPECT_EQ(out[0], 0.0f);
  EXPECT_EQ(out[1], 2.0f);
}

TEST(AutodiffForward, SoftmaxOfEqualLogitsIsUniform) {
  for (std::size_t k : {2u, 3u, 7u}) {
    Graph<float> g;
    auto x = g.input({k});
    g.set_output(g.softmax(x));
    for (float v : g.forward(Tensor<float>({k}, 3.5f)).data) EXPECT_FLOAT_EQ(v, 1.0f / k);
  }
}

TEST(AutodiffForward, SoftmaxIsAProbabilityVector) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.below(10);
    Graph<float> g;
    auto x = g.input({k});
    g.set_output(g.softmax(x));
    const auto& out = g.forward(random_tensor<float>(rng, {k}, 20.0)).data;
    double total = 0.0;
    for (float v : out) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(AutodiffForward, Conv2dMatchesQuadrupleLoop) {
  Rng rng(5);
  for (auto [stride, pad] : {std::pair<std::size_t, std::size_t>{1, 0}, {1, 1}, {2, 1}, {2, 0}}) {
    for (int trial = 0; trial < 5; ++trial) {
      auto x = random_tensor<double>(rng, {2, 5, 5});
      auto w = random_tensor<double>(rng, {3, 2, 3, 3});
      auto b = random_tensor<double>(rng, {3});
      const auto expected = reference_conv(x, w, b, stride, pad);

      Graph<float> g;
      auto in = g.input({2, 5, 5});
      g.set_output(g.conv2d(in, g.parameter(cast<float>(w, false), "w"), g.parameter(cast<float>(b, false), "b"),
                            {stride, pad}));
      const auto& out = g.forward(cast<float>(x, false)).data;
      ASSERT_EQ(out.size(), expected.size());
      for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], expected[i], 1e-5);
    }
  }
}

TEST(AutodiffForward, RepeatedForwardIsBitIdentical) {
  Rng rng(9);
  auto params = random_cnn(rng, 8);
  auto g = build_cnn<float>(params, 8, 1);
  auto in = random_tensor<float>(rng, {3, 8, 8});
  const auto first = g.forward(in).data;
  for (int i = 0; i < 5; ++i) EXPECT_EQ(g.forward(in).data, first);
}

TEST(AutodiffForward, GaussianBlurPreservesConstants) {
  Graph<double> g;
  auto x = g.input({2, 6, 7});
  g.set_output(g.gaussian_blur(x, 1.3));
  for (double v : g.forward(Tensor<double>({2, 6, 7}, 0.37)).data) EXPECT_NEAR(v, 0.37, 1e-15);
}

TEST(AutodiffBackward, IdentityGradientIsOne) {
  Graph<double> g;
  auto x = g.input({1});
  g.set_output(x);
  g.forward(Tensor<double>({1}, 4.0));
  g.backward(unit_seed<double>({1}));
  EXPECT_EQ(g.grad(x)[0], 1.0);
}

TEST(AutodiffBackward, LinearInputGradientEqualsWeights) {
  Graph<float> g;
  auto x = g.input({4});
  Tensor<float> w({1, 4}, {0.25f, -3.0f, 1.5f, 7.0f});
  g.set_output(g.dense(x, g.parameter(w, "w"), std::nullopt));
  g.forward(Tensor<float>({4}, {1, 2, 3, 4}));
  g.backward(unit_seed<float>({1}));
  const auto grad = g.grad(x);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(grad[i], w.data[i]);
}

TEST(AutodiffBackward, BeforeForwardIsAnError) {
  Graph<float> g;
  auto x = g.input({2});
  g.set_output(g.relu(x));
  try {
    g.backward(unit_seed<float>({2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kBackwardBeforeForward);
  }
}

TEST(AutodiffBackward, SeedShapeMustMatchOutput) {
  Graph<float> g;
  auto x = g.input({2});
  g.set_output(g.relu(x));
  g.forward(Tensor<float>({2}, 1.0f));
  EXPECT_THROW(g.backward(unit_seed<float>({3})), Error);
}

TEST(AutodiffBackward, ParameterMutationInvalidatesTape) {
  Graph<float> g;
  auto x = g.input({2});
  auto w = g.parameter(Tensor<float>({1, 2}, 1.0f), "w");
  g.set_output(g.dense(x, w, std::nullopt));
  g.forward(Tensor<float>({2}, 1.0f));
  g.mutable_parameter(w).data[0] = 2.0f;
  EXPECT_THROW(g.backward(unit_seed<float>({1})), Error);
}

TEST(AutodiffBackward, RequiresGradTensorsReceiveGradBuffers) {
  Graph<double> g;
  auto x = g.input({3});
  Tensor<double> w({2, 3}, 0.5);
  w.requires_grad = true;
  auto wn = g.parameter(w, "w");
  auto frozen = g.parameter(Tensor<double>({2}, 0.1), "b");
  g.set_output(g.dense(x, wn, frozen));
  g.forward(Tensor<double>({3}, {1, 2, 3}));
  g.backward(unit_seed<double>({2}));
  ASSERT_TRUE(g.parameter_value(wn).grad.has_value());
  EXPECT_EQ(g.parameter_value(wn).grad->size(), 6u);
  EXPECT_FALSE(g.parameter_value(frozen).grad.has_value());
  EXPECT_THROW(g.grad(frozen), Error);
}

TEST(AutodiffBackward, NamedIntermediateGradientRetrievable) {
  Rng rng(12);
  auto params = random_cnn(rng, 8);
  auto g = build_cnn<double>(params, 8, 2);
  auto in = random_tensor<double>(rng, {3, 8, 8});
  g.forward(in);
  g.backward(unit_seed<double>({1}));
  EXPECT_EQ(g.grad("relu2").size(), 6u * 4 * 4);
  EXPECT_EQ(g.value("relu2").shape, (Shape{6, 4, 4}));
}

// Every primitive against central differences on 20 random seeds.
TEST(AutodiffBackward, EveryPrimitiveMatchesFiniteDifferences) {
  using Builder = std::function<NodeId(Graph<double>&, NodeId, Rng&)>;
  const std::vector<std::pair<std::string, Builder>> cases = {
      {"conv2d", [](Graph<double>& g, NodeId x, Rng& r) {
         return g.conv2d(x, g.parameter(random_tensor<double>(r, {2, 2, 3, 3}, 1.0, true), "w"),
                         g.parameter(random_tensor<double>(r, {2}, 1.0, true), "b"), {2, 1});
       }},
      {"relu", [](Graph<double>& g, NodeId x, Rng&) { return g.relu(x); }},
      {"max_pool2d", [](Graph<double>& g, NodeId x, Rng&) { return g.max_pool2d(x, {2, 2}); }},
      {"avg_pool2d", [](Graph<double>& g, NodeId x, Rng&) { return g.avg_pool2d(x, {3, 1}); }},
      {"dense", [](Graph<double>& g, NodeId x, Rng& r) {
         return g.dense(x, g.parameter(random_tensor<double>(r, {3, 50}, 1.0, true), "w"),
                        g.parameter(random_tensor<double>(r, {3}, 1.0, true), "b"));
       }},
      {"softmax", [](Graph<double>& g, NodeId x, Rng&) { return g.softmax(x); }},
      {"add", [](Graph<double>& g, NodeId x, Rng& r) {
         return g.add(x, g.parameter(random_tensor<double>(r, {2, 5, 5}, 1.0, true), "p"));
       }},
      {"mul", [](Graph<double>& g, NodeId x, Rng& r) {
         return g.mul(x, g.parameter(random_tensor<double>(r, {2, 5, 5}, 1.0, true), "p"));
       }},
      {"gaussian_blur", [](Graph<double>& g, NodeId x, Rng&) { return g.gaussian_blur(x, 0.9); }},
  };
  for (const auto& [name, build] : cases) {
    cose::testing::FdReport report;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed * 31 + 1);
      Graph<double> g;
      auto x = g.input({2, 5, 5});
      auto y = build(g, x, rng);
      // Random linear read-out makes the output scalar.
      auto readout = g.parameter(random_tensor<double>(rng, {1, numel(g.shape_of(y))}), "readout");
      g.set_output(g.dense(y, readout, std::nullopt));
      auto in = random_tensor<double>(rng, {2, 5, 5});
      g.forward(in);
      g.backward(unit_seed<double>({1}));
      std::vector<double> analytic(g.grad(x).begin(), g.grad(x).end());
      std::vector<std::size_t> coords(in.size());
      std::iota(coords.begin(), coords.end(), 0);
      cose::testing::check_input(g, in, analytic, coords, 1e-3, 1e-6, report);
      for (NodeId p : g.parameters()) {
        if (g.name_of(p) == "readout") continue;
        const auto& grad = *g.parameter_value(p).grad;
        std::vector<std::size_t> pc(grad.size());
        std::iota(pc.begin(), pc.end(), 0);
        cose::testing::check_parameter(g, in, p, grad, pc, 1e-3, 1e-6, report);
      }
    }
    EXPECT_GT(report.checked, 0u) << name;
    EXPECT_LT(report.max_rel_error, 1e-6) << name << " checked=" << report.checked
                                         << " kinks=" << report.skipped_kinks;
  }
}

TEST(AutodiffBackward, CrossEntropyGradientIsSoftmaxMinusOneHot) {
  Graph<double> g;
  auto x = g.input({3});
  auto loss = g.cross_entropy(x, 1);
  g.set_output(loss);
  g.forward(Tensor<double>({3}, {0.2, 1.0, -0.5}));
  g.backward(unit_seed<double>({1}));
  const double z = std::exp(0.2) + std::exp(1.0) + std::exp(-0.5);
  EXPECT_NEAR(g.grad(x)[0], std::exp(0.2) / z, 1e-12);
  EXPECT_NEAR(g.grad(x)[1], std::exp(1.0) / z - 1.0, 1e-12);
  EXPECT_NEAR(g.grad(x)[2], std::exp(-0.5) / z, 1e-12);
  g.set_label(loss, 2);
  EXPECT_NEAR(g.forward(Tensor<double>({3}, {0.2, 1.0, -0.5})).data[0], std::log(z) + 0.5, 1e-12);
}

TEST(AutodiffBackward, MicroCnnFloatGradientsMatchDoubleFiniteDifferences) {
  Rng rng(21);
  constexpr std::size_t side = 8;
  auto params = random_cnn(rng, side);
  auto in = random_tensor<double>(rng, {3, side, side});
  auto gf = build_cnn<float>(params, side, 0);
  auto gd = build_cnn<double>(params, side, 0);
  gf.forward(cast<float>(in, false));
  gf.backward(unit_seed<float>({1}));
  gd.forward(in);
  gd.backward(unit_seed<double>({1}));

  cose::testing::FdReport f32, f64;
  for (const char* name : {"c1w", "c1b", "c2w", "c2b", "dw", "db"}) {
    const auto& gf_grad = *gf.parameter_value(gf.find(name)).grad;
    std::vector<double> as_double(gf_grad.begin(), gf_grad.end());
    const auto& gd_grad = *gd.parameter_value(gd.find(name)).grad;
    std::vector<std::size_t> coords(gd_grad.size());
    std::iota(coords.begin(), coords.end(), 0);
    cose::testing::check_parameter(gd, in, gd.find(name), as_double, coords, 1e-3, 1e-4, f32);
    cose::testing::check_parameter(gd, in, gd.find(name), gd_grad, coords, 1e-3, 1e-6, f64);
  }
  std::printf("f32: max rel %.3g over %zu (kinks %zu); f64: max rel %.3g over %zu (kinks %zu)\n",
              f32.max_rel_error, f32.checked, f32.skipped_kinks, f64.max_rel_error, f64.checked,
              f64.skipped_kinks);
  EXPECT_LT(f32.max_rel_error, 1e-3) << "checked=" << f32.checked << " kinks=" << f32.skipped_kinks;
  EXPECT_LT(f64.max_rel_error, 1e-6) << "checked=" << f64.checked << " kinks=" << f64.skipped_kinks;
  EXPECT_GT(f64.checked, f64.skipped_kinks * 10);
}
