// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

// Hand-written classifiers with closed-form gradients.

#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "cose/model/classifier.hpp"

namespace cose::testing {

/// logits[k] = w[k] . x + b[k]
class LinearModel final : public model::Classifier {
 public:
  LinearModel(model::InputShape shape, std::vector<std::vector<double>> w, std::vector<double> b)
      : shape_(shape), w_(std::move(w)), b_(std::move(b)) {}

  model::InputShape input_shape() const override { return shape_; }
  int num_classes() const override { return static_cast<int>(w_.size()); }
  std::unique_ptr<model::Session> open_session() const override { return std::make_unique<S>(*this); }

  const std::vector<double>& weights(int k) const { return w_[k]; }

 private:
  struct S final : model::Session {
    explicit S(const LinearModel& m) : m(m) {}
    std::vector<double> logits(const Image& x) override {
      std::vector<double> out(m.b_);
      for (std::size_t k = 0; k < out.size(); ++k) {
        for (std::size_t i = 0; i < x.data.size(); ++i) out[k] += m.w_[k][i] * x.data[i];
      }
      return out;
    }
    model::GradientResult gradient(const Image& x, int target, bool) override {
      model::GradientResult r;
      r.logits = logits(x);
      r.input_grad = m.w_[target];
      return r;
    }
    const LinearModel& m;
  };
  model::InputShape shape_;
  std::vector<std::vector<double>> w_;
  std::vector<double> b_;
};

/// Ignores its input; exposes a fixed activation and activation gradient.
class FixedActivationModel final : public model::Classifier {
 public:
  FixedActivationModel(model::InputShape shape, int classes, int c, int h, int w, std::vector<double> activation,
                       std::vector<double> activation_grad)
      : shape_(shape), classes_(classes), c_(c), h_(h), w_(w), a_(std::move(activation)), g_(std::move(activation_grad)) {}

  model::InputShape input_shape() const override { return shape_; }
  int num_classes() const override { return classes_; }
  bool has_conv_activation() const override { return true; }
  std::unique_ptr<model::Session> open_session() const override { return std::make_unique<S>(*this); }

 private:
  struct S final : model::Session {
    explicit S(const FixedActivationModel& m) : m(m) {}
    std::vector<double> logits(const Image&) override { return std::vector<double>(m.classes_, 0.0); }
    model::GradientResult gradient(const Image& x, int, bool with_activation) override {
      model::GradientResult r;
      r.logits = logits(x);
      r.input_grad.assign(x.data.size(), 0.0);
      if (with_activation) {
        r.act_channels = m.c_;
        r.act_height = m.h_;
        r.act_width = m.w_;
        r.activation = m.a_;
        r.activation_grad = m.g_;
      }
      return r;
    }
    const FixedActivationModel& m;
  };
  model::InputShape shape_;
  int classes_, c_, h_, w_;
  std::vector<double> a_, g_;
};

/// Black-box model defined by a logit function; gradients are not available.
class FunctionModel final : public model::Classifier {
 public:
  using Fn = std::function<std::vector<double>(const Image&)>;
  FunctionModel(model::InputShape shape, int classes, Fn fn) : shape_(shape), classes_(classes), fn_(std::move(fn)) {}

  model::InputShape input_shape() const override { return shape_; }
  int num_classes() const override { return classes_; }
  std::unique_ptr<model::Session> open_session() const override { return std::make_unique<S>(*this); }

 private:
  struct S final : model::Session {
    explicit S(const FunctionModel& m) : m(m) {}
    std::vector<double> logits(const Image& x) override { return m.fn_(x); }
    model::GradientResult gradient(const Image& x, int, bool) override {
      model::GradientResult r;
      r.logits = logits(x);
      r.input_grad.assign(x.data.size(), 0.0);
      return r;
    }
    const FunctionModel& m;
  };
  model::InputShape shape_;
  int classes_;
  Fn fn_;
};

}  // namespace cose::testing
