// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "e2egrec/tensor.hpp"

namespace e2eg {

/// A named trainable leaf. `grad` accumulates across backward passes until
/// zeroed explicitly.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
  void zero_grad() { grad.fill(0.0); }
};

/// Insertion-ordered owning collection of parameters. Pointers returned by
/// add()/get() stay valid for the lifetime of the set.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Tensor value);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  Parameter* find(const std::string& name);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  void zero_grad();
  std::size_t size() const noexcept { return items_.size(); }
  std::size_t total_numel() const;

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  /// Deep copy (values and grads).
  ParameterSet clone() const;

 private:
  std::vector<std::unique_ptr<Parameter>> items_;
  std::map<std::string, std::size_t> index_;
};

using GradientMap = std::map<std::string, Tensor>;

enum class OpKind {
  kConstant,
  kParameter,
  kStopGradient,
  kMatMul,
  kAdd,
  kSub,
  kAddRowBias,
  kMul,
  kScale,
  kScaleRows,
  kConcatCols,
  kSliceCols,
  kReshape,
  kSigmoid,
  kRelu,
  kSoftplus,
  kRowSoftmax,
  kSumAxis,
  kMeanAxis,
  kSumAll,
  kSqFrobenius,
  kBce,
  kWeightedSum,
  kStack,
  kUnstack,
  kGather,
  kSpMM,
};

const char* op_name(OpKind kind);

class ComputeGraph;

/// Handle to a node in a ComputeGraph.
struct Var {
  ComputeGraph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Records forward operations in topological order and runs reverse-mode
/// accumulation from a scalar root. Confined to one thread.
class ComputeGraph {
 public:
  using BackwardFn = std::function<void(ComputeGraph&, std::size_t self)>;

  ComputeGraph() = default;
  ComputeGraph(const ComputeGraph&) = delete;
  ComputeGraph& operator=(const ComputeGraph&) = delete;

  Var constant(Tensor value);
  Var parameter(Parameter& p);

  /// Reverse-mode pass from `root` (must hold exactly one element). Node
  /// gradients are recomputed from scratch; parameter gradients accumulate
  /// unless `accumulate_params` is false (probe passes).
  void backward(Var root, bool accumulate_params = true);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  /// Gradient of the last backward root w.r.t. node `id`; zeros if the node
  /// was unreachable.
  Tensor grad(Var v) const;
  OpKind kind(Var v) const { return nodes_.at(v.id).kind; }
  const std::vector<std::size_t>& inputs(Var v) const { return nodes_.at(v.id).inputs; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Used by op implementations.
  Var push(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward);
  Tensor& grad_slot(std::size_t id);
  bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const Tensor& out_grad(std::size_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> inputs;
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
};

/// Differentiable operations. All inputs must belong to the same graph.
/// Shape mismatches throw ShapeError naming the op and the offending shapes.
namespace ops {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// a (m x n) + bias broadcast over rows; bias has shape [n] or [1, n].
Var add_row_bias(Var a, Var bias);
Var mul(Var a, Var b);
Var scale(Var a, double c);
/// Row i of a (m x n) multiplied by s[i]; s has shape [m] or [m, 1].
Var scale_rows(Var a, Var s);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var reshape(Var a, Shape shape);
Var sigmoid(Var a);
Var relu(Var a);
/// ln(1 + e^x), computed stably.
Var softplus(Var a);
Var row_softmax(Var a);
/// Reductions drop the reduced axis.
Var sum_axis(Var a, std::size_t axis);
Var mean_axis(Var a, std::size_t axis);
Var sum_all(Var a);
Var sq_frobenius(Var a);
/// Mean binary cross-entropy of probabilities against constant labels.
/// Probabilities are clamped to [kBceEps, 1 - kBceEps].
Var bce(Var probs, const Tensor& labels);
inline constexpr double kBceEps = 1e-12;
/// sum_i w_i * x_i over same-shaped inputs.
Var weighted_sum(const std::vector<Var>& xs, const std::vector<double>& weights);
/// T tensors of shape N x d -> N x T x d.
Var stack(const std::vector<Var>& tokens);
/// N x T x d -> N x d (token t).
Var unstack(Var a, std::size_t t);
/// Rows of `table` (V x d) selected by `indices`.
Var gather_rows(Var table, std::vector<std::size_t> indices);
/// Constant sparse matrix times dense a.
Var spmm(std::shared_ptr<const SparseMatrix> m, Var a);
Var stop_gradient(Var a);

}  // namespace ops

/// Central-difference gradient oracle: perturbs every coordinate of every
/// parameter in `params` by +-h and evaluates `objective` (which reads the
/// parameters itself). Parameter values are restored afterwards.
GradientMap finite_difference_gradient(const std::function<double()>& objective, ParameterSet& params,
                                       double h = 1e-5);

GradientMap collect_gradients(const ParameterSet& params);

}  // namespace e2eg
