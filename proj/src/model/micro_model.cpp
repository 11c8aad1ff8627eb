// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cose/model/micro_model.hpp"

#include <cmath>
#include <string>

#include "cose/error.hpp"
#include "cose/random.hpp"

namespace cose::model {

using autodiff::Graph;
using autodiff::NodeId;
using autodiff::Shape;
using autodiff::Tensor;

namespace {

template <typename T>
Tensor<T> cast(const Tensor<float>& t) {
  return Tensor<T>(t.shape, std::vector<T>(t.data.begin(), t.data.end()));
}

std::size_t pooled(std::size_t n) { return n / 2; }

template <typename T>
class MicroSession final : public Session {
 public:
  MicroSession(const MicroModel& model, int classes) : g_(model.build_graph<T>()), classes_(classes) {
    const auto s = model.input_shape();
    shape_ = {static_cast<std::size_t>(s.channels), static_cast<std::size_t>(s.height),
              static_cast<std::size_t>(s.width)};
  }

  std::vector<double> logits(const Image& image) override {
    const auto& out = g_.graph.forward(input(image));
    return {out.data.begin(), out.data.end()};
  }

  GradientResult gradient(const Image& image, int target, bool with_activation) override {
    if (target < 0 || target >= classes_) {
      throw Error(Errc::kInvalidArgument, "target class " + std::to_string(target) + " out of range");
    }
    GradientResult r;
    const auto& out = g_.graph.forward(input(image));
    r.logits.assign(out.data.begin(), out.data.end());
    Tensor<T> seed(out.shape);
    seed.data[static_cast<std::size_t>(target)] = T{1};
    g_.graph.backward(seed);
    const auto gx = g_.graph.grad(g_.input);
    r.input_grad.assign(gx.begin(), gx.end());
    if (with_activation) {
      const auto& a = g_.graph.value(g_.activation);
      const auto ga = g_.graph.grad(g_.activation);
      r.act_channels = static_cast<int>(a.shape[0]);
      r.act_height = static_cast<int>(a.shape[1]);
      r.act_width = static_cast<int>(a.shape[2]);
      r.activation.assign(a.data.begin(), a.data.end());
      r.activation_grad.assign(ga.begin(), ga.end());
    }
    return r;
  }

 private:
  const Tensor<T>& input(const Image& image) {
    if (image.channels != static_cast<int>(shape_[0]) || image.height != static_cast<int>(shape_[1]) ||
        image.width != static_cast<int>(shape_[2])) {
      throw Error(Errc::kShapeMismatch, "image does not match the model input " + autodiff::shape_string(shape_));
    }
    buffer_.shape = shape_;
    buffer_.data.assign(image.data.begin(), image.data.end());
    return buffer_;
  }

  MicroGraph<T> g_;
  int classes_;
  Shape shape_;
  Tensor<T> buffer_;
};

}  // namespace

template <typename T>
Tensor<T> to_tensor(const Image& image) {
  return Tensor<T>(Shape{static_cast<std::size_t>(image.channels), static_cast<std::size_t>(image.height),
                         static_cast<std::size_t>(image.width)},
                   std::vector<T>(image.data.begin(), image.data.end()));
}

template Tensor<float> to_tensor<float>(const Image&);
template Tensor<double> to_tensor<double>(const Image&);

MicroModel::MicroModel(MicroModelConfig config) : config_(config) {
  if (config_.input.channels < 1 || config_.input.height < 4 || config_.input.width < 4 || config_.num_classes < 2 ||
      config_.conv1_channels < 1 || config_.conv2_channels < 1) {
    throw Error(Errc::kInvalidArgument, "micro model needs >= 1 channel, >= 4x4 inputs and >= 2 classes");
  }
  for (const Shape& s : parameter_shapes()) params_.emplace_back(s);
}

std::vector<Shape> MicroModel::parameter_shapes() const {
  const auto c = static_cast<std::size_t>(config_.input.channels);
  const auto c1 = static_cast<std::size_t>(config_.conv1_channels);
  const auto c2 = static_cast<std::size_t>(config_.conv2_channels);
  const std::size_t h = pooled(pooled(static_cast<std::size_t>(config_.input.height)));
  const std::size_t w = pooled(pooled(static_cast<std::size_t>(config_.input.width)));
  const auto k = static_cast<std::size_t>(config_.num_classes);
  return {{c1, c, 3, 3}, {c1}, {c2, c1, 3, 3}, {c2}, {k, c2 * h * w}, {k}};
}

MicroModel MicroModel::initialized(MicroModelConfig config, std::uint64_t seed) {
  MicroModel m(config);
  Rng rng(seed);
  for (std::size_t i = 0; i < m.params_.size(); ++i) {
    auto& p = m.params_[i];
    if (p.shape.size() == 1) continue;  // biases start at zero
    const double fan_in = static_cast<double>(p.size() / p.shape[0]);
    const double scale = std::sqrt(2.0 / fan_in);
    for (float& v : p.data) v = static_cast<float>(scale * rng.normal());
  }
  return m;
}

void MicroModel::set_parameters(std::vector<Tensor<float>> params) {
  const auto shapes = parameter_shapes();
  if (params.size() != shapes.size()) {
    throw Error(Errc::kShapeMismatch, "expected " + std::to_string(shapes.size()) + " parameter tensors, got " +
                                          std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (params[i].shape != shapes[i] || !params[i].consistent()) {
      throw Error(Errc::kShapeMismatch, std::string(kParameterNames[i]) + ": expected " +
                                            autodiff::shape_string(shapes[i]) + ", got " +
                                            autodiff::shape_string(params[i].shape));
    }
    params[i].requires_grad = false;
    params[i].grad.reset();
  }
  params_ = std::move(params);
}

template <typename T>
MicroGraph<T> MicroModel::build_graph(bool train) const {
  MicroGraph<T> m;
  auto& g = m.graph;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor<T> t = cast<T>(params_[i]);
    t.requires_grad = train;
    m.params[i] = g.parameter(std::move(t), std::string(kParameterNames[i]));
  }
  m.input = g.input(Shape{static_cast<std::size_t>(config_.input.channels),
                          static_cast<std::size_t>(config_.input.height),
                          static_cast<std::size_t>(config_.input.width)});
  g.set_requires_grad(m.input, !train);
  // Inputs live in [0, 1]; centring them keeps early SGD steps well scaled.
  const NodeId offset = g.constant(Tensor<T>(g.shape_of(m.input), T(-0.5)), "input_offset");
  NodeId x = g.add(m.input, offset, "centred");
  const autodiff::Conv2dOptions same{1, 1};
  x = g.conv2d(x, m.params[0], m.params[1], same, "conv1");
  x = g.relu(x, "relu1");
  x = g.max_pool2d(x, {}, "pool1");
  x = g.conv2d(x, m.params[2], m.params[3], same, "conv2");
  m.activation = g.relu(x, std::string(kTargetActivation));
  x = g.max_pool2d(m.activation, {}, "pool2");
  m.logits = g.dense(x, m.params[4], m.params[5], "logits");
  m.loss = g.cross_entropy(m.logits, 0, "loss");
  g.set_output(train ? m.loss : m.logits);
  return m;
}

template MicroGraph<float> MicroModel::build_graph<float>(bool) const;
template MicroGraph<double> MicroModel::build_graph<double>(bool) const;

std::unique_ptr<Session> MicroModel::open_session() const {
  if (config_.precision == Precision::kFloat64) return std::make_unique<MicroSession<double>>(*this, config_.num_classes);
  return std::make_unique<MicroSession<float>>(*this, config_.num_classes);
}

void MicroModel::symmetrize_lr() {
  for (std::size_t i : {0u, 2u}) {
    auto& w = params_[i];
    const std::size_t planes = w.shape[0] * w.shape[1];
    for (std::size_t p = 0; p < planes; ++p) {
      float* k = w.data.data() + p * 9;
      for (int r = 0; r < 3; ++r) {
        const float avg = 0.5f * (k[r * 3] + k[r * 3 + 2]);
        k[r * 3] = avg;
        k[r * 3 + 2] = avg;
      }
    }
  }
  // Dense input is the flattened (c2, h, w) pooled map; pair column x with w-1-x.
  auto& fc = params_[4];
  const std::size_t c2 = static_cast<std::size_t>(config_.conv2_channels);
  const std::size_t h = pooled(pooled(static_cast<std::size_t>(config_.input.height)));
  const std::size_t w = pooled(pooled(static_cast<std::size_t>(config_.input.width)));
  const std::size_t in = c2 * h * w;
  for (std::size_t o = 0; o < fc.shape[0]; ++o) {
    float* row = fc.data.data() + o * in;
    for (std::size_t c = 0; c < c2; ++c) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w / 2; ++x) {
          float& a = row[(c * h + y) * w + x];
          float& b = row[(c * h + y) * w + (w - 1 - x)];
          const float avg = 0.5f * (a + b);
          a = avg;
          b = avg;
        }
      }
    }
  }
}

}  // namespace cose::model
