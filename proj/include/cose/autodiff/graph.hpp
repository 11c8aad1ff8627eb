// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cose/autodiff/tensor.hpp"
#include "cose/gaussian.hpp"

namespace cose::autodiff {

struct NodeId {
  std::size_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class OpKind {
  kInput,
  kParameter,
  kConstant,
  kConv2d,
  kRelu,
  kMaxPool2d,
  kAvgPool2d,
  kDense,
  kSoftmax,
  kCrossEntropy,
  kAdd,
  kMul,
  kGaussianBlur,
};

std::string_view op_name(OpKind kind) noexcept;

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

struct Pool2dOptions {
  std::size_t kernel = 2;
  std::size_t stride = 2;
};

/// Static reverse-mode tape. Nodes are appended in topological order;
/// shapes are inferred and validated as the graph is built. Tensors are
/// laid out as (channels, rows, columns) for the image primitives.
///
/// A Graph is single-threaded. Independent graphs may run concurrently.
template <typename T>
class Graph {
 public:
  NodeId input(Shape shape, std::string name = "input");
  NodeId parameter(Tensor<T> value, std::string name);
  NodeId constant(Tensor<T> value, std::string name = {});

  NodeId conv2d(NodeId x, NodeId weight, std::optional<NodeId> bias, Conv2dOptions options = {},
                std::string name = {});
  NodeId relu(NodeId x, std::string name = {});
  NodeId max_pool2d(NodeId x, Pool2dOptions options = {}, std::string name = {});
  NodeId avg_pool2d(NodeId x, Pool2dOptions options = {}, std::string name = {});
  // weight is (out, numel(x)); x is flattened.
  NodeId dense(NodeId x, NodeId weight, std::optional<NodeId> bias, std::string name = {});
  NodeId softmax(NodeId x, std::string name = {});
  // Scalar -log softmax(logits)[label].
  NodeId cross_entropy(NodeId logits, std::size_t label, std::string name = {});
  NodeId add(NodeId a, NodeId b, std::string name = {});
  NodeId mul(NodeId a, NodeId b, std::string name = {});
  // Separable Gaussian over each channel plane, edge-replicated borders.
  NodeId gaussian_blur(NodeId x, double sigma, std::string name = {});

  void set_output(NodeId node);
  NodeId output() const;
  void set_label(NodeId cross_entropy_node, std::size_t label);
  void set_requires_grad(NodeId node, bool requires_grad);

  /// Evaluates every node. Retains all activations for backward().
  const Tensor<T>& forward(const Tensor<T>& input);

  /// Propagates `seed` (shape of the output) back through the tape. Fills
  /// grad on every requires_grad input/parameter and every intermediate
  /// sitting downstream of one.
  void backward(const Tensor<T>& seed);

  const Tensor<T>& value(NodeId node) const;
  const Tensor<T>& value(std::string_view name) const { return value(find(name)); }
  std::span<const T> grad(NodeId node) const;
  std::span<const T> grad(std::string_view name) const { return grad(find(name)); }

  NodeId find(std::string_view name) const;
  bool contains(std::string_view name) const;
  const Shape& shape_of(NodeId node) const;
  OpKind kind_of(NodeId node) const;
  const std::string& name_of(NodeId node) const;
  std::size_t size() const { return nodes_.size(); }

  std::vector<NodeId> parameters() const;
  const Tensor<T>& parameter_value(NodeId node) const;
  // Mutating a parameter invalidates the retained activations.
  Tensor<T>& mutable_parameter(NodeId node);

  bool has_op(OpKind kind) const;

  /// Hash of the piecewise-linear branch choices from the last forward():
  /// ReLU input signs and max-pool winners. Equal signatures at two points
  /// mean the network is smooth between them.
  std::size_t branch_signature() const;

 private:
  struct Node {
    OpKind kind;
    std::string name;
    std::vector<std::size_t> parents;
    Tensor<T> value;
    std::vector<T> grad;
    bool requires_grad = false;
    bool needs_grad = false;
    Conv2dOptions conv;
    Pool2dOptions pool;
    std::size_t label = 0;
    double sigma = 0.0;
    std::vector<T> blur_kernel;
    std::vector<std::size_t> argmax;  // max-pool winners
    std::vector<T> scratch;           // im2col / softmax cache
  };

  NodeId push(Node node);
  void refresh_needs_grad();
  const Node& node(NodeId id) const;
  Node& node(NodeId id);
  std::string unique_name(std::string name, OpKind kind) const;

  void forward_node(Node& n);
  void backward_node(Node& n);

  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::size_t> by_name_;
  std::optional<std::size_t> input_;
  std::optional<std::size_t> output_;
  bool forward_valid_ = false;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace cose::autodiff
