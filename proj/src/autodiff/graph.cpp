// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cose/autodiff/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cose/error.hpp"
#include "cose/kernels/kernels.hpp"

namespace cose::autodiff {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
  out << ']';
  return out.str();
}

std::string_view op_name(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kParameter: return "parameter";
    case OpKind::kConstant: return "constant";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kRelu: return "relu";
    case OpKind::kMaxPool2d: return "max_pool2d";
    case OpKind::kAvgPool2d: return "avg_pool2d";
    case OpKind::kDense: return "dense";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kCrossEntropy: return "cross_entropy";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kGaussianBlur: return "gaussian_blur";
  }
  return "unknown";
}

namespace {

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  if constexpr (std::is_same_v<T, float>) {
    return kernels::active().dot_f32(a, b, n);
  } else {
    T s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  }
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  if constexpr (std::is_same_v<T, float>) {
    kernels::active().axpy_f32(alpha, x, y, n);
  } else {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
  }
}

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (static_cast<std::size_t>(i) >= n) return n - 1;
  return static_cast<std::size_t>(i);
}

[[noreturn]] void fail(Errc code, const std::string& node, const std::string& msg) {
  throw Error(code, "node '" + node + "': " + msg);
}

}  // namespace

template <typename T>
const typename Graph<T>::Node& Graph<T>::node(NodeId id) const {
  if (id.index >= nodes_.size()) throw Error(Errc::kInvalidGraph, "unknown node id");
  return nodes_[id.index];
}

template <typename T>
typename Graph<T>::Node& Graph<T>::node(NodeId id) {
  if (id.index >= nodes_.size()) throw Error(Errc::kInvalidGraph, "unknown node id");
  return nodes_[id.index];
}

template <typename T>
std::string Graph<T>::unique_name(std::string name, OpKind kind) const {
  if (name.empty()) name = std::string(op_name(kind)) + "_" + std::to_string(nodes_.size());
  if (by_name_.count(name)) throw Error(Errc::kInvalidGraph, "duplicate node name '" + name + "'");
  return name;
}

template <typename T>
NodeId Graph<T>::push(Node n) {
  n.name = unique_name(std::move(n.name), n.kind);
  n.grad.assign(n.value.size(), T{0});
  const std::size_t index = nodes_.size();
  by_name_.emplace(n.name, index);
  nodes_.push_back(std::move(n));
  refresh_needs_grad();
  forward_valid_ = false;
  return NodeId{index};
}

template <typename T>
void Graph<T>::refresh_needs_grad() {
  for (Node& n : nodes_) {
    n.needs_grad = n.requires_grad && (n.kind == OpKind::kInput || n.kind == OpKind::kParameter);
    for (std::size_t p : n.parents) n.needs_grad = n.needs_grad || nodes_[p].needs_grad;
  }
}

template <typename T>
NodeId Graph<T>::input(Shape shape, std::string name) {
  if (input_) throw Error(Errc::kInvalidGraph, "graph already declares an input");
  if (shape.empty() || numel(shape) == 0) throw Error(Errc::kInvalidGraph, "empty input shape");
  Node n{};
  n.kind = OpKind::kInput;
  n.name = std::move(name);
  n.value = Tensor<T>(std::move(shape));
  n.requires_grad = true;
  const NodeId id = push(std::move(n));
  input_ = id.index;
  return id;
}

template <typename T>
NodeId Graph<T>::parameter(Tensor<T> value, std::string name) {
  if (!value.consistent() || value.size() == 0) {
    throw Error(Errc::kInvalidGraph, "parameter '" + name + "' has inconsistent shape");
  }
  Node n{};
  n.kind = OpKind::kParameter;
  n.name = std::move(name);
  n.requires_grad = value.requires_grad;
  n.value = std::move(value);
  n.value.grad.reset();
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::constant(Tensor<T> value, std::string name) {
  if (!value.consistent()) throw Error(Errc::kInvalidGraph, "constant has inconsistent shape");
  Node n{};
  n.kind = OpKind::kConstant;
  n.name = std::move(name);
  n.value = std::move(value);
  n.value.requires_grad = false;
  n.value.grad.reset();
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::conv2d(NodeId x, NodeId weight, std::optional<NodeId> bias,
                        Conv2dOptions options, std::string name) {
  const Shape& xs = shape_of(x);
  const Shape& ws = shape_of(weight);
  const std::string label = name.empty() ? "conv2d" : name;
  if (xs.size() != 3) fail(Errc::kShapeMismatch, label, "input must be CxHxW, got " + shape_string(xs));
  if (ws.size() != 4) fail(Errc::kShapeMismatch, label, "weight must be OxCxKxK, got " + shape_string(ws));
  if (ws[1] != xs[0]) {
    fail(Errc::kShapeMismatch, label,
         "weight expects " + std::to_string(ws[1]) + " channels, input has " + std::to_string(xs[0]));
  }
  if (ws[2] != ws[3] || ws[2] == 0) fail(Errc::kInvalidGraph, label, "kernel must be square and non-empty");
  if (options.stride == 0) fail(Errc::kInvalidGraph, label, "stride must be >= 1");
  const std::size_t k = ws[2];
  if (options.padding >= k) fail(Errc::kInvalidGraph, label, "padding must be smaller than the kernel");
  if (xs[1] + 2 * options.padding < k || xs[2] + 2 * options.padding < k) {
    fail(Errc::kInvalidGraph, label, "kernel larger than padded input");
  }
  if (bias && shape_of(*bias) != Shape{ws[0]}) {
    fail(Errc::kShapeMismatch, label, "bias must have shape [" + std::to_string(ws[0]) + "]");
  }
  const std::size_t ho = (xs[1] + 2 * options.padding - k) / options.stride + 1;
  const std::size_t wo = (xs[2] + 2 * options.padding - k) / options.stride + 1;
  Node n{};
  n.kind = OpKind::kConv2d;
  n.name = std::move(name);
  n.parents = {x.index, weight.index};
  if (bias) n.parents.push_back(bias->index);
  n.conv = options;
  n.value = Tensor<T>(Shape{ws[0], ho, wo});
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::relu(NodeId x, std::string name) {
  Node n{};
  n.kind = OpKind::kRelu;
  n.name = std::move(name);
  n.parents = {x.index};
  n.value = Tensor<T>(shape_of(x));
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::max_pool2d(NodeId x, Pool2dOptions options, std::string name) {
  const Shape& xs = shape_of(x);
  const std::string label = name.empty() ? "max_pool2d" : name;
  if (xs.size() != 3) fail(Errc::kShapeMismatch, label, "input must be CxHxW, got " + shape_string(xs));
  if (options.kernel == 0 || options.stride == 0) fail(Errc::kInvalidGraph, label, "kernel and stride must be >= 1");
  if (options.kernel > xs[1] || options.kernel > xs[2]) fail(Errc::kInvalidGraph, label, "kernel larger than input");
  Node n{};
  n.kind = OpKind::kMaxPool2d;
  n.name = std::move(name);
  n.parents = {x.index};
  n.pool = options;
  n.value = Tensor<T>(Shape{xs[0], (xs[1] - options.kernel) / options.stride + 1,
                            (xs[2] - options.kernel) / options.stride + 1});
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::avg_pool2d(NodeId x, Pool2dOptions options, std::string name) {
  NodeId id = max_pool2d(x, options, std::move(name));
  nodes_[id.index].kind = OpKind::kAvgPool2d;
  return id;
}

template <typename T>
NodeId Graph<T>::dense(NodeId x, NodeId weight, std::optional<NodeId> bias, std::string name) {
  const Shape& ws = shape_of(weight);
  const std::string label = name.empty() ? "dense" : name;
  const std::size_t in = numel(shape_of(x));
  if (ws.size() != 2 || ws[1] != in) {
    fail(Errc::kShapeMismatch, label,
         "weight " + shape_string(ws) + " incompatible with input of " + std::to_string(in) + " values");
  }
  if (bias && shape_of(*bias) != Shape{ws[0]}) {
    fail(Errc::kShapeMismatch, label, "bias must have shape [" + std::to_string(ws[0]) + "]");
  }
  Node n{};
  n.kind = OpKind::kDense;
  n.name = std::move(name);
  n.parents = {x.index, weight.index};
  if (bias) n.parents.push_back(bias->index);
  n.value = Tensor<T>(Shape{ws[0]});
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::softmax(NodeId x, std::string name) {
  Node n{};
  n.kind = OpKind::kSoftmax;
  n.name = std::move(name);
  n.parents = {x.index};
  n.value = Tensor<T>(shape_of(x));
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::cross_entropy(NodeId logits, std::size_t label, std::string name) {
  const std::size_t k = numel(shape_of(logits));
  if (label >= k) {
    fail(Errc::kInvalidGraph, name.empty() ? "cross_entropy" : name, "label out of range");
  }
  Node n{};
  n.kind = OpKind::kCrossEntropy;
  n.name = std::move(name);
  n.parents = {logits.index};
  n.label = label;
  n.value = Tensor<T>(Shape{1});
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::add(NodeId a, NodeId b, std::string name) {
  if (shape_of(a) != shape_of(b)) {
    fail(Errc::kShapeMismatch, name.empty() ? "add" : name,
         shape_string(shape_of(a)) + " vs " + shape_string(shape_of(b)));
  }
  Node n{};
  n.kind = OpKind::kAdd;
  n.name = std::move(name);
  n.parents = {a.index, b.index};
  n.value = Tensor<T>(shape_of(a));
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::mul(NodeId a, NodeId b, std::string name) {
  NodeId id = add(a, b, std::move(name));
  nodes_[id.index].kind = OpKind::kMul;
  return id;
}

template <typename T>
NodeId Graph<T>::gaussian_blur(NodeId x, double sigma, std::string name) {
  const Shape& xs = shape_of(x);
  const std::string label = name.empty() ? "gaussian_blur" : name;
  if (xs.size() != 3) fail(Errc::kShapeMismatch, label, "input must be CxHxW");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail(Errc::kInvalidGraph, label, "sigma must be finite and >= 0");
  Node n{};
  n.kind = OpKind::kGaussianBlur;
  n.name = std::move(name);
  n.parents = {x.index};
  n.sigma = sigma;
  const auto taps = gaussian_taps(sigma);
  n.blur_kernel.assign(taps.begin(), taps.end());
  n.value = Tensor<T>(xs);
  return push(std::move(n));
}

template <typename T>
void Graph<T>::set_output(NodeId id) {
  node(id);
  output_ = id.index;
  forward_valid_ = false;
}

template <typename T>
NodeId Graph<T>::output() const {
  if (!output_) throw Error(Errc::kInvalidGraph, "graph has no output");
  return NodeId{*output_};
}

template <typename T>
void Graph<T>::set_label(NodeId id, std::size_t label) {
  Node& n = node(id);
  if (n.kind != OpKind::kCrossEntropy) fail(Errc::kInvalidGraph, n.name, "not a cross_entropy node");
  if (label >= nodes_[n.parents[0]].value.size()) fail(Errc::kInvalidGraph, n.name, "label out of range");
  n.label = label;
  forward_valid_ = false;
}

template <typename T>
void Graph<T>::set_requires_grad(NodeId id, bool requires_grad) {
  Node& n = node(id);
  if (n.kind != OpKind::kInput && n.kind != OpKind::kParameter) {
    fail(Errc::kInvalidGraph, n.name, "requires_grad applies to inputs and parameters only");
  }
  n.requires_grad = requires_grad;
  n.value.requires_grad = requires_grad;
  refresh_needs_grad();
}

template <typename T>
const Tensor<T>& Graph<T>::forward(const Tensor<T>& in) {
  if (!input_) throw Error(Errc::kInvalidGraph, "graph has no input");
  if (!output_) throw Error(Errc::kInvalidGraph, "graph has no output");
  Node& input_node = nodes_[*input_];
  if (in.shape != input_node.value.shape || !in.consistent()) {
    fail(Errc::kShapeMismatch, input_node.name,
         "expected " + shape_string(input_node.value.shape) + ", got " + shape_string(in.shape));
  }
  input_node.value.data = in.data;
  for (Node& n : nodes_) forward_node(n);
  forward_valid_ = true;
  return nodes_[*output_].value;
}

template <typename T>
void Graph<T>::backward(const Tensor<T>& seed) {
  if (!forward_valid_) throw Error(Errc::kBackwardBeforeForward, "backward() called before forward()");
  Node& out = nodes_[*output_];
  if (seed.shape != out.value.shape || !seed.consistent()) {
    fail(Errc::kShapeMismatch, out.name,
         "seed " + shape_string(seed.shape) + " does not match output " + shape_string(out.value.shape));
  }
  for (Node& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), T{0});
  out.grad = seed.data;
  for (std::size_t i = *output_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.needs_grad) backward_node(n);
  }
  for (Node& n : nodes_) {
    if ((n.kind == OpKind::kInput || n.kind == OpKind::kParameter) && n.requires_grad) {
      n.value.grad = n.grad;
    }
  }
}

template <typename T>
void Graph<T>::forward_node(Node& n) {
  auto& out = n.value.data;
  auto parent = [&](std::size_t i) -> const Tensor<T>& { return nodes_[n.parents[i]].value; };
  switch (n.kind) {
    case OpKind::kInput:
    case OpKind::kParameter:
    case OpKind::kConstant:
      return;
    case OpKind::kConv2d: {
      const Tensor<T>& x = parent(0);
      const Tensor<T>& w = parent(1);
      const std::size_t c = x.shape[0], h = x.shape[1], wd = x.shape[2];
      const std::size_t o = w.shape[0], k = w.shape[2];
      const std::size_t ho = n.value.shape[1], wo = n.value.shape[2];
      const std::size_t ckk = c * k * k;
      const std::size_t pad = n.conv.padding, stride = n.conv.stride;
      n.scratch.assign(ho * wo * ckk, T{0});
      for (std::size_t oy = 0; oy < ho; ++oy) {
        for (std::size_t ox = 0; ox < wo; ++ox) {
          T* col = n.scratch.data() + (oy * wo + ox) * ckk;
          for (std::size_t ci = 0; ci < c; ++ci) {
            for (std::size_t ky = 0; ky < k; ++ky) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) continue;
                col[(ci * k + ky) * k + kx] = x.data[(ci * h + iy) * wd + ix];
              }
            }
          }
        }
      }
      const std::size_t positions = ho * wo;
      for (std::size_t oc = 0; oc < o; ++oc) {
        const T b = n.parents.size() > 2 ? parent(2).data[oc] : T{0};
        const T* wrow = w.data.data() + oc * ckk;
        for (std::size_t p = 0; p < positions; ++p) {
          out[oc * positions + p] = dot(wrow, n.scratch.data() + p * ckk, ckk) + b;
        }
      }
      return;
    }
    case OpKind::kRelu: {
      const auto& x = parent(0).data;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > T{0} ? x[i] : T{0};
      return;
    }
    case OpKind::kMaxPool2d:
    case OpKind::kAvgPool2d: {
      const Tensor<T>& x = parent(0);
      const std::size_t c = x.shape[0], h = x.shape[1], wd = x.shape[2];
      const std::size_t ho = n.value.shape[1], wo = n.value.shape[2];
      const std::size_t k = n.pool.kernel, s = n.pool.stride;
      const bool is_max = n.kind == OpKind::kMaxPool2d;
      if (is_max) n.argmax.assign(out.size(), 0);
      const T inv = T{1} / static_cast<T>(k * k);
      for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t oy = 0; oy < ho; ++oy) {
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const std::size_t oi = (ci * ho + oy) * wo + ox;
            T best = -std::numeric_limits<T>::infinity();
            std::size_t best_i = 0;
            T sum = 0;
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) {
                const std::size_t ii = (ci * h + oy * s + ky) * wd + ox * s + kx;
                const T v = x.data[ii];
                sum += v;
                if (v > best) {
                  best = v;
                  best_i = ii;
                }
              }
            }
            if (is_max) {
              out[oi] = best;
              n.argmax[oi] = best_i;
            } else {
              out[oi] = sum * inv;
            }
          }
        }
      }
      return;
    }
    case OpKind::kDense: {
      const Tensor<T>& x = parent(0);
      const Tensor<T>& w = parent(1);
      const std::size_t in = x.size();
      for (std::size_t o = 0; o < out.size(); ++o) {
        const T b = n.parents.size() > 2 ? parent(2).data[o] : T{0};
        out[o] = dot(w.data.data() + o * in, x.data.data(), in) + b;
      }
      return;
    }
    case OpKind::kSoftmax: {
      const auto& x = parent(0).data;
      const T mx = *std::max_element(x.begin(), x.end());
      T total = 0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::exp(x[i] - mx);
        total += out[i];
      }
      for (T& v : out) v /= total;
      return;
    }
    case OpKind::kCrossEntropy: {
      const auto& x = parent(0).data;
      const T mx = *std::max_element(x.begin(), x.end());
      T total = 0;
      n.scratch.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        n.scratch[i] = std::exp(x[i] - mx);
        total += n.scratch[i];
      }
      for (T& v : n.scratch) v /= total;
      out[0] = -(x[n.label] - mx - std::log(total));
      return;
    }
    case OpKind::kAdd: {
      const auto& a = parent(0).data;
      const auto& b = parent(1).data;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
      return;
    }
    case OpKind::kMul: {
      const auto& a = parent(0).data;
      const auto& b = parent(1).data;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
      return;
    }
    case OpKind::kGaussianBlur: {
      const Tensor<T>& x = parent(0);
      const std::size_t c = x.shape[0], h = x.shape[1], wd = x.shape[2];
      const std::size_t taps = n.blur_kernel.size();
      const auto r = static_cast<std::ptrdiff_t>(taps / 2);
      n.scratch.assign(x.size(), T{0});
      for (std::size_t ci = 0; ci < c; ++ci) {
        const T* src = x.data.data() + ci * h * wd;
        T* tmp = n.scratch.data() + ci * h * wd;
        T* dst = out.data() + ci * h * wd;
        for (std::size_t y = 0; y < h; ++y) {
          for (std::size_t xx = 0; xx < wd; ++xx) {
            T s = 0;
            for (std::size_t k = 0; k < taps; ++k) {
              s += n.blur_kernel[k] * src[y * wd + clamp_index(static_cast<std::ptrdiff_t>(xx + k) - r, wd)];
            }
            tmp[y * wd + xx] = s;
          }
        }
        for (std::size_t y = 0; y < h; ++y) {
          for (std::size_t xx = 0; xx < wd; ++xx) {
            T s = 0;
            for (std::size_t k = 0; k < taps; ++k) {
              s += n.blur_kernel[k] * tmp[clamp_index(static_cast<std::ptrdiff_t>(y + k) - r, h) * wd + xx];
            }
            dst[y * wd + xx] = s;
          }
        }
      }
      return;
    }
  }
}

template <typename T>
void Graph<T>::backward_node(Node& n) {
  const auto& g = n.grad;
  auto parent = [&](std::size_t i) -> Node& { return nodes_[n.parents[i]]; };
  switch (n.kind) {
    case OpKind::kInput:
    case OpKind::kParameter:
    case OpKind::kConstant:
      return;
    case OpKind::kConv2d: {
      Node& xn = parent(0);
      Node& wn = parent(1);
      const std::size_t c = xn.value.shape[0], h = xn.value.shape[1], wd = xn.value.shape[2];
      const std::size_t o = wn.value.shape[0], k = wn.value.shape[2];
      const std::size_t ho = n.value.shape[1], wo = n.value.shape[2];
      const std::size_t ckk = c * k * k, positions = ho * wo;
      const std::size_t pad = n.conv.padding, stride = n.conv.stride;
      if (n.parents.size() > 2 && parent(2).needs_grad) {
        auto& gb = parent(2).grad;
        for (std::size_t oc = 0; oc < o; ++oc) {
          T s = 0;
          for (std::size_t p = 0; p < positions; ++p) s += g[oc * positions + p];
          gb[oc] += s;
        }
      }
      if (wn.needs_grad) {
        for (std::size_t oc = 0; oc < o; ++oc) {
          T* gw = wn.grad.data() + oc * ckk;
          for (std::size_t p = 0; p < positions; ++p) {
            const T gv = g[oc * positions + p];
            if (gv != T{0}) axpy(gv, n.scratch.data() + p * ckk, gw, ckk);
          }
        }
      }
      if (xn.needs_grad) {
        std::vector<T> dcol(ckk);
        for (std::size_t oy = 0; oy < ho; ++oy) {
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const std::size_t p = oy * wo + ox;
            std::fill(dcol.begin(), dcol.end(), T{0});
            for (std::size_t oc = 0; oc < o; ++oc) {
              const T gv = g[oc * positions + p];
              if (gv != T{0}) axpy(gv, wn.value.data.data() + oc * ckk, dcol.data(), ckk);
            }
            for (std::size_t ci = 0; ci < c; ++ci) {
              for (std::size_t ky = 0; ky < k; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t kx = 0; kx < k; ++kx) {
                  const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
                  if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) continue;
                  xn.grad[(ci * h + iy) * wd + ix] += dcol[(ci * k + ky) * k + kx];
                }
              }
            }
          }
        }
      }
      return;
    }
    case OpKind::kRelu: {
      Node& xn = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (xn.value.data[i] > T{0}) xn.grad[i] += g[i];
      }
      return;
    }
    case OpKind::kMaxPool2d: {
      Node& xn = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i) xn.grad[n.argmax[i]] += g[i];
      return;
    }
    case OpKind::kAvgPool2d: {
      Node& xn = parent(0);
      const std::size_t c = xn.value.shape[0], h = xn.value.shape[1], wd = xn.value.shape[2];
      const std::size_t ho = n.value.shape[1], wo = n.value.shape[2];
      const std::size_t k = n.pool.kernel, s = n.pool.stride;
      const T inv = T{1} / static_cast<T>(k * k);
      for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t oy = 0; oy < ho; ++oy) {
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const T gv = g[(ci * ho + oy) * wo + ox] * inv;
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) xn.grad[(ci * h + oy * s + ky) * wd + ox * s + kx] += gv;
            }
          }
        }
      }
      return;
    }
    case OpKind::kDense: {
      Node& xn = parent(0);
      Node& wn = parent(1);
      const std::size_t in = xn.value.size();
      for (std::size_t o = 0; o < g.size(); ++o) {
        if (g[o] == T{0}) continue;
        if (wn.needs_grad) axpy(g[o], xn.value.data.data(), wn.grad.data() + o * in, in);
        if (xn.needs_grad) axpy(g[o], wn.value.data.data() + o * in, xn.grad.data(), in);
      }
      if (n.parents.size() > 2 && parent(2).needs_grad) {
        for (std::size_t o = 0; o < g.size(); ++o) parent(2).grad[o] += g[o];
      }
      return;
    }
    case OpKind::kSoftmax: {
      Node& xn = parent(0);
      const auto& y = n.value.data;
      T inner = 0;
      for (std::size_t i = 0; i < y.size(); ++i) inner += g[i] * y[i];
      for (std::size_t i = 0; i < y.size(); ++i) xn.grad[i] += y[i] * (g[i] - inner);
      return;
    }
    case OpKind::kCrossEntropy: {
      Node& xn = parent(0);
      for (std::size_t i = 0; i < n.scratch.size(); ++i) {
        const T target = i == n.label ? T{1} : T{0};
        xn.grad[i] += g[0] * (n.scratch[i] - target);
      }
      return;
    }
    case OpKind::kAdd: {
      for (std::size_t p = 0; p < 2; ++p) {
        Node& pn = parent(p);
        if (!pn.needs_grad) continue;
        for (std::size_t i = 0; i < g.size(); ++i) pn.grad[i] += g[i];
      }
      return;
    }
    case OpKind::kMul: {
      Node& a = parent(0);
      Node& b = parent(1);
      if (a.needs_grad) {
        for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += g[i] * b.value.data[i];
      }
      if (b.needs_grad) {
        for (std::size_t i = 0; i < g.size(); ++i) b.grad[i] += g[i] * a.value.data[i];
      }
      return;
    }
    case OpKind::kGaussianBlur: {
      Node& xn = parent(0);
      const std::size_t c = xn.value.shape[0], h = xn.value.shape[1], wd = xn.value.shape[2];
      const std::size_t taps = n.blur_kernel.size();
      const auto r = static_cast<std::ptrdiff_t>(taps / 2);
      std::vector<T> gtmp(h * wd);
      for (std::size_t ci = 0; ci < c; ++ci) {
        const T* gout = g.data() + ci * h * wd;
        T* gin = xn.grad.data() + ci * h * wd;
        std::fill(gtmp.begin(), gtmp.end(), T{0});
        for (std::size_t y = 0; y < h; ++y) {
          for (std::size_t xx = 0; xx < wd; ++xx) {
            for (std::size_t k = 0; k < taps; ++k) {
              gtmp[clamp_index(static_cast<std::ptrdiff_t>(y + k) - r, h) * wd + xx] +=
                  n.blur_kernel[k] * gout[y * wd + xx];
            }
          }
        }
        for (std::size_t y = 0; y < h; ++y) {
          for (std::size_t xx = 0; xx < wd; ++xx) {
            for (std::size_t k = 0; k < taps; ++k) {
              gin[y * wd + clamp_index(static_cast<std::ptrdiff_t>(xx + k) - r, wd)] +=
                  n.blur_kernel[k] * gtmp[y * wd + xx];
            }
          }
        }
      }
      return;
    }
  }
}

template <typename T>
const Tensor<T>& Graph<T>::value(NodeId id) const {
  return node(id).value;
}

template <typename T>
std::span<const T> Graph<T>::grad(NodeId id) const {
  const Node& n = node(id);
  if (!n.needs_grad) fail(Errc::kInvalidGraph, n.name, "node does not carry a gradient");
  return n.grad;
}

template <typename T>
NodeId Graph<T>::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) throw Error(Errc::kInvalidGraph, "no node named '" + std::string(name) + "'");
  return NodeId{it->second};
}

template <typename T>
bool Graph<T>::contains(std::string_view name) const {
  return by_name_.count(std::string(name)) != 0;
}

template <typename T>
const Shape& Graph<T>::shape_of(NodeId id) const {
  return node(id).value.shape;
}

template <typename T>
OpKind Graph<T>::kind_of(NodeId id) const {
  return node(id).kind;
}

template <typename T>
const std::string& Graph<T>::name_of(NodeId id) const {
  return node(id).name;
}

template <typename T>
std::vector<NodeId> Graph<T>::parameters() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == OpKind::kParameter) out.push_back(NodeId{i});
  }
  return out;
}

template <typename T>
const Tensor<T>& Graph<T>::parameter_value(NodeId id) const {
  const Node& n = node(id);
  if (n.kind != OpKind::kParameter) fail(Errc::kInvalidGraph, n.name, "not a parameter");
  return n.value;
}

template <typename T>
Tensor<T>& Graph<T>::mutable_parameter(NodeId id) {
  Node& n = node(id);
  if (n.kind != OpKind::kParameter) fail(Errc::kInvalidGraph, n.name, "not a parameter");
  forward_valid_ = false;
  return n.value;
}

template <typename T>
bool Graph<T>::has_op(OpKind kind) const {
  return std::any_of(nodes_.begin(), nodes_.end(), [&](const Node& n) { return n.kind == kind; });
}

template <typename T>
std::size_t Graph<T>::branch_signature() const {
  std::size_t h = 1469598103934665603ull;
  auto mix = [&h](std::size_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  for (const Node& n : nodes_) {
    if (n.kind == OpKind::kRelu) {
      for (T v : nodes_[n.parents[0]].value.data) mix(v > T{0} ? 1u : 0u);
    } else if (n.kind == OpKind::kMaxPool2d) {
      for (std::size_t i : n.argmax) mix(i);
    }
  }
  return h;
}

template class Graph<float>;
template class Graph<double>;

}  // namespace cose::autodiff
