// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2egrec/autograd.hpp"

#include <algorithm>
#include <cmath>

#include "e2egrec/error.hpp"

namespace e2eg {

// ---------------------------------------------------------------------------
// ParameterSet

Parameter& ParameterSet::add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw Error(ErrorCode::kInvalidArgument, "duplicate parameter '" + name + "'");
  index_[name] = items_.size();
  items_.push_back(std::make_unique<Parameter>(name, std::move(value)));
  return *items_.back();
}

Parameter& ParameterSet::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::kInvalidArgument, "unknown parameter '" + name + "'");
  return *items_[it->second];
}

const Parameter& ParameterSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::kInvalidArgument, "unknown parameter '" + name + "'");
  return *items_[it->second];
}

Parameter* ParameterSet::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : items_[it->second].get();
}

void ParameterSet::zero_grad() {
  for (auto& p : items_) p->zero_grad();
}

std::size_t ParameterSet::total_numel() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p->value.numel();
  return n;
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const auto& p : items_) {
    auto& q = out.add(p->name, p->value);
    q.grad = p->grad;
  }
  return out;
}

GradientMap collect_gradients(const ParameterSet& params) {
  GradientMap out;
  for (const auto& p : params) out.emplace(p->name, p->grad);
  return out;
}

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kParameter: return "parameter";
    case OpKind::kStopGradient: return "stop_gradient";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kAddRowBias: return "add_row_bias";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kScaleRows: return "scale_rows";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kSliceCols: return "slice_cols";
    case OpKind::kReshape: return "reshape";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kRelu: return "relu";
    case OpKind::kSoftplus: return "softplus";
    case OpKind::kRowSoftmax: return "row_softmax";
    case OpKind::kSumAxis: return "sum_axis";
    case OpKind::kMeanAxis: return "mean_axis";
    case OpKind::kSumAll: return "sum_all";
    case OpKind::kSqFrobenius: return "sq_frobenius";
    case OpKind::kBce: return "bce";
    case OpKind::kWeightedSum: return "weighted_sum";
    case OpKind::kStack: return "stack";
    case OpKind::kUnstack: return "unstack";
    case OpKind::kGather: return "gather_rows";
    case OpKind::kSpMM: return "spmm";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// ComputeGraph

const Tensor& Var::value() const { return graph->value(id); }

Var ComputeGraph::constant(Tensor value) { return push(OpKind::kConstant, {}, std::move(value), nullptr); }

Var ComputeGraph::parameter(Parameter& p) {
  Node n{OpKind::kParameter, {}, p.value, Tensor(), false, true, nullptr, &p};
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var ComputeGraph::push(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward) {
  bool rg = false;
  for (auto i : inputs) rg = rg || nodes_.at(i).requires_grad;
  if (kind == OpKind::kStopGradient) rg = false;
  Node n{kind, std::move(inputs), std::move(value), Tensor(), false, rg && backward != nullptr, std::move(backward),
         nullptr};
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Tensor& ComputeGraph::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape(), 0.0);
    n.has_grad = true;
  }
  return n.grad;
}

Tensor ComputeGraph::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (!n.has_grad) return Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void ComputeGraph::backward(Var root, bool accumulate_params) {
  if (root.graph != this) throw Error(ErrorCode::kInvalidArgument, "backward: root belongs to another graph");
  if (nodes_.at(root.id).value.numel() != 1)
    throw ShapeError("backward: root must be scalar, got " + shape_str(nodes_[root.id].value.shape()));
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  grad_slot(root.id).fill(1.0);
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param && accumulate_params) n.param->grad.axpy(1.0, n.grad);
  }
}

// ---------------------------------------------------------------------------
// Operations

namespace ops {
namespace {

ComputeGraph& same_graph(std::initializer_list<Var> vs) {
  ComputeGraph* g = vs.begin()->graph;
  for (const Var& v : vs)
    if (v.graph != g || g == nullptr) throw Error(ErrorCode::kInvalidArgument, "operands belong to different graphs");
  return *g;
}

[[noreturn]] void shape_fail(OpKind kind, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op_name(kind)) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

void require_rank2(OpKind kind, const Tensor& t) {
  if (t.rank() != 2)
    throw ShapeError(std::string(op_name(kind)) + ": expected a matrix, got shape " + shape_str(t.shape()));
}

// C += A * B (row-major, A m x k, B k x n)
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C += A * B^T (A m x k, B n x k)
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * n + j] += s;
    }
  }
}

// C += A^T * B (A m x k, B m x n, C k x n)
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

Var matmul(Var a, Var b) {
  auto& g = same_graph({a, b});
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_rank2(OpKind::kMatMul, A);
  require_rank2(OpKind::kMatMul, B);
  if (A.cols() != B.rows()) shape_fail(OpKind::kMatMul, A.shape(), B.shape());
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor out({m, n});
  gemm_nn(A.data().data(), B.data().data(), out.data().data(), m, k, n);
  return g.push(OpKind::kMatMul, {a.id, b.id}, std::move(out), [m, k, n](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const auto ib = g.inputs(Var{&g, self})[1];
    const Tensor& gy = g.out_grad(self);
    if (g.needs_grad(ia)) gemm_nt(gy.data().data(), g.value(ib).data().data(), g.grad_slot(ia).data().data(), m, n, k);
    if (g.needs_grad(ib)) gemm_tn(g.value(ia).data().data(), gy.data().data(), g.grad_slot(ib).data().data(), m, k, n);
  });
}

namespace {
Var binary_elementwise(OpKind kind, Var a, Var b) {
  auto& g = same_graph({a, b});
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() != B.shape()) shape_fail(kind, A.shape(), B.shape());
  Tensor out(A.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    switch (kind) {
      case OpKind::kAdd: out[i] = A[i] + B[i]; break;
      case OpKind::kSub: out[i] = A[i] - B[i]; break;
      default: out[i] = A[i] * B[i]; break;
    }
  }
  return g.push(kind, {a.id, b.id}, std::move(out), [kind](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const auto ib = g.inputs(Var{&g, self})[1];
    const Tensor& gy = g.out_grad(self);
    if (kind == OpKind::kMul) {
      if (g.needs_grad(ia)) {
        Tensor& ga = g.grad_slot(ia);
        const Tensor& vb = g.value(ib);
        for (std::size_t i = 0; i < gy.numel(); ++i) ga[i] += gy[i] * vb[i];
      }
      if (g.needs_grad(ib)) {
        Tensor& gb = g.grad_slot(ib);
        const Tensor& va = g.value(ia);
        for (std::size_t i = 0; i < gy.numel(); ++i) gb[i] += gy[i] * va[i];
      }
      return;
    }
    if (g.needs_grad(ia)) g.grad_slot(ia).axpy(1.0, gy);
    if (g.needs_grad(ib)) g.grad_slot(ib).axpy(kind == OpKind::kSub ? -1.0 : 1.0, gy);
  });
}
}  // namespace

Var add(Var a, Var b) { return binary_elementwise(OpKind::kAdd, a, b); }
Var sub(Var a, Var b) { return binary_elementwise(OpKind::kSub, a, b); }
Var mul(Var a, Var b) { return binary_elementwise(OpKind::kMul, a, b); }

Var add_row_bias(Var a, Var bias) {
  auto& g = same_graph({a, bias});
  const Tensor& A = a.value();
  const Tensor& B = bias.value();
  require_rank2(OpKind::kAddRowBias, A);
  const bool ok = (B.rank() == 1 && B.dim(0) == A.cols()) || (B.rank() == 2 && B.rows() == 1 && B.cols() == A.cols());
  if (!ok) shape_fail(OpKind::kAddRowBias, A.shape(), B.shape());
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out = A;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) += B[j];
  return g.push(OpKind::kAddRowBias, {a.id, bias.id}, std::move(out), [m, n](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const auto ib = g.inputs(Var{&g, self})[1];
    const Tensor& gy = g.out_grad(self);
    if (g.needs_grad(ia)) g.grad_slot(ia).axpy(1.0, gy);
    if (g.needs_grad(ib)) {
      Tensor& gb = g.grad_slot(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += gy[i * n + j];
    }
  });
}

Var scale(Var a, double c) {
  auto& g = same_graph({a});
  Tensor out = a.value();
  for (auto& v : out.data()) v *= c;
  return g.push(OpKind::kScale, {a.id}, std::move(out), [c](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    g.grad_slot(ia).axpy(c, g.out_grad(self));
  });
}

Var scale_rows(Var a, Var s) {
  auto& g = same_graph({a, s});
  const Tensor& A = a.value();
  const Tensor& S = s.value();
  require_rank2(OpKind::kScaleRows, A);
  const bool ok = (S.rank() == 1 && S.dim(0) == A.rows()) || (S.rank() == 2 && S.rows() == A.rows() && S.cols() == 1);
  if (!ok) shape_fail(OpKind::kScaleRows, A.shape(), S.shape());
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out = A;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) *= S[i];
  return g.push(OpKind::kScaleRows, {a.id, s.id}, std::move(out), [m, n](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const auto is = g.inputs(Var{&g, self})[1];
    const Tensor& gy = g.out_grad(self);
    if (g.needs_grad(ia)) {
      Tensor& ga = g.grad_slot(ia);
      const Tensor& vs = g.value(is);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += gy[i * n + j] * vs[i];
    }
    if (g.needs_grad(is)) {
      Tensor& gs = g.grad_slot(is);
      const Tensor& va = g.value(ia);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gs[i] += gy[i * n + j] * va[i * n + j];
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  auto& g = *parts[0].graph;
  const std::size_t m = parts[0].value().rank() == 2 ? parts[0].value().rows() : 0;
  std::vector<std::size_t> ids, widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.graph != &g) throw Error(ErrorCode::kInvalidArgument, "operands belong to different graphs");
    require_rank2(OpKind::kConcatCols, p.value());
    if (p.value().rows() != m) shape_fail(OpKind::kConcatCols, parts[0].shape(), p.shape());
    ids.push_back(p.id);
    widths.push_back(p.value().cols());
    total += p.value().cols();
  }
  Tensor out({m, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& P = parts[k].value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out.at(i, off + j) = P.at(i, j);
    off += widths[k];
  }
  return g.push(OpKind::kConcatCols, ids, std::move(out), [m, total, widths](ComputeGraph& g, std::size_t self) {
    const auto& in = g.inputs(Var{&g, self});
    const Tensor& gy = g.out_grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < in.size(); ++k) {
      if (g.needs_grad(in[k])) {
        Tensor& gk = g.grad_slot(in[k]);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) gk[i * widths[k] + j] += gy[i * total + off + j];
      }
      off += widths[k];
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  auto& g = same_graph({a});
  const Tensor& A = a.value();
  require_rank2(OpKind::kSliceCols, A);
  if (count == 0 || begin + count > A.cols())
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of bounds for shape " + shape_str(A.shape()));
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out({m, count});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) out.at(i, j) = A.at(i, begin + j);
  return g.push(OpKind::kSliceCols, {a.id}, std::move(out), [m, n, begin, count](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const Tensor& gy = g.out_grad(self);
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < count; ++j) ga[i * n + begin + j] += gy[i * count + j];
  });
}

Var reshape(Var a, Shape shape) {
  auto& g = same_graph({a});
  if (shape_numel(shape) != a.value().numel()) shape_fail(OpKind::kReshape, a.shape(), shape);
  std::vector<double> data(a.value().data().begin(), a.value().data().end());
  Tensor out(std::move(shape), std::move(data));
  return g.push(OpKind::kReshape, {a.id}, std::move(out), [](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const Tensor& gy = g.out_grad(self);
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < gy.numel(); ++i) ga[i] += gy[i];
  });
}

Var sigmoid(Var a) {
  auto& g = same_graph({a});
  Tensor out = a.value();
  for (auto& v : out.data()) v = stable_sigmoid(v);
  return g.push(OpKind::kSigmoid, {a.id}, std::move(out), [](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const Tensor& gy = g.out_grad(self);
    const Tensor& y = g.value(self);
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < gy.numel(); ++i) ga[i] += gy[i] * y[i] * (1.0 - y[i]);
  });
}

Var relu(Var a) {
  auto& g = same_graph({a});
  Tensor out = a.value();
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return g.push(OpKind::kRelu, {a.id}, std::move(out), [](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const Tensor& gy = g.out_grad(self);
    const Tensor& x = g.value(ia);
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < gy.numel(); ++i)
      if (x[i] > 0.0) ga[i] += gy[i];
  });
}

Var softplus(Var a) {
  auto& g = same_graph({a});
  Tensor out = a.value();
  for (auto& v : out.data()) v = stable_softplus(v);
  return g.push(OpKind::kSoftplus, {a.id}, std::move(out), [](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const Tensor& gy = g.out_grad(self);
    const Tensor& x = g.value(ia);
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < gy.numel(); ++i) ga[i] += gy[i] * stable_sigmoid(x[i]);
  });
}

Var row_softmax(Var a) {
  auto& g = same_graph({a});
  const Tensor& A = a.value();
  require_rank2(OpKind::kRowSoftmax, A);
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double mx = A.at(i, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, A.at(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += (out.at(i, j) = std::exp(A.at(i, j) - mx));
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) /= s;
  }
  return g.push(OpKind::kRowSoftmax, {a.id}, std::move(out), [m, n](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const Tensor& gy = g.out_grad(self);
    const Tensor& y = g.value(self);
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += gy[i * n + j] * y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += y[i * n + j] * (gy[i * n + j] - dot);
    }
  });
}

namespace {
// Splits a shape around `axis` into (outer, len, inner) strides.
struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
  Shape reduced;
};

AxisSplit split_axis(OpKind kind, const Shape& s, std::size_t axis) {
  if (axis >= s.size())
    throw ShapeError(std::string(op_name(kind)) + ": axis " + std::to_string(axis) + " out of range for " +
                     shape_str(s));
  AxisSplit r;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i < axis) r.outer *= s[i];
    if (i > axis) r.inner *= s[i];
    if (i != axis) r.reduced.push_back(s[i]);
  }
  r.len = s[axis];
  return r;
}

Var reduce_axis(OpKind kind, Var a, std::size_t axis) {
  auto& g = same_graph({a});
  const Tensor& A = a.value();
  const AxisSplit sp = split_axis(kind, A.shape(), axis);
  const double w = kind == OpKind::kMeanAxis ? 1.0 / static_cast<double>(sp.len) : 1.0;
  Tensor out(sp.reduced);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t l = 0; l < sp.len; ++l)
      for (std::size_t i = 0; i < sp.inner; ++i) out[o * sp.inner + i] += w * A[(o * sp.len + l) * sp.inner + i];
  return g.push(kind, {a.id}, std::move(out), [sp, w](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const Tensor& gy = g.out_grad(self);
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t l = 0; l < sp.len; ++l)
        for (std::size_t i = 0; i < sp.inner; ++i) ga[(o * sp.len + l) * sp.inner + i] += w * gy[o * sp.inner + i];
  });
}
}  // namespace

Var sum_axis(Var a, std::size_t axis) { return reduce_axis(OpKind::kSumAxis, a, axis); }
Var mean_axis(Var a, std::size_t axis) { return reduce_axis(OpKind::kMeanAxis, a, axis); }

Var sum_all(Var a) {
  auto& g = same_graph({a});
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return g.push(OpKind::kSumAll, {a.id}, Tensor::scalar(s), [](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const double gy = g.out_grad(self)[0];
    for (auto& v : g.grad_slot(ia).data()) v += gy;
  });
}

Var sq_frobenius(Var a) {
  auto& g = same_graph({a});
  double s = 0.0;
  for (double v : a.value().data()) s += v * v;
  return g.push(OpKind::kSqFrobenius, {a.id}, Tensor::scalar(s), [](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const double gy = g.out_grad(self)[0];
    g.grad_slot(ia).axpy(2.0 * gy, g.value(ia));
  });
}

Var bce(Var probs, const Tensor& labels) {
  auto& g = same_graph({probs});
  const Tensor& P = probs.value();
  if (P.numel() != labels.numel()) shape_fail(OpKind::kBce, P.shape(), labels.shape());
  const std::size_t n = P.numel();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(P[i], kBceEps, 1.0 - kBceEps);
    s -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return g.push(OpKind::kBce, {probs.id}, Tensor::scalar(s / static_cast<double>(n)),
                [labels, n](ComputeGraph& g, std::size_t self) {
                  const auto ip = g.inputs(Var{&g, self})[0];
                  const double gy = g.out_grad(self)[0] / static_cast<double>(n);
                  const Tensor& P = g.value(ip);
                  Tensor& gp = g.grad_slot(ip);
                  for (std::size_t i = 0; i < n; ++i) {
                    const double p = std::clamp(P[i], kBceEps, 1.0 - kBceEps);
                    gp[i] += gy * (-labels[i] / p + (1.0 - labels[i]) / (1.0 - p));
                  }
                });
}

Var weighted_sum(const std::vector<Var>& xs, const std::vector<double>& weights) {
  if (xs.empty() || xs.size() != weights.size()) throw ShapeError("weighted_sum: need equal, nonzero counts");
  auto& g = *xs[0].graph;
  Tensor out(xs[0].shape());
  std::vector<std::size_t> ids;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (xs[k].graph != &g) throw Error(ErrorCode::kInvalidArgument, "operands belong to different graphs");
    if (xs[k].shape() != out.shape()) shape_fail(OpKind::kWeightedSum, out.shape(), xs[k].shape());
    out.axpy(weights[k], xs[k].value());
    ids.push_back(xs[k].id);
  }
  return g.push(OpKind::kWeightedSum, ids, std::move(out), [weights](ComputeGraph& g, std::size_t self) {
    const auto& in = g.inputs(Var{&g, self});
    const Tensor& gy = g.out_grad(self);
    for (std::size_t k = 0; k < in.size(); ++k)
      if (g.needs_grad(in[k])) g.grad_slot(in[k]).axpy(weights[k], gy);
  });
}

Var stack(const std::vector<Var>& tokens) {
  if (tokens.empty()) throw ShapeError("stack: no inputs");
  auto& g = *tokens[0].graph;
  const Shape s0 = tokens[0].shape();
  if (s0.size() != 2) throw ShapeError("stack: expected matrices, got " + shape_str(s0));
  const std::size_t n = s0[0], d = s0[1], t = tokens.size();
  Tensor out({n, t, d});
  std::vector<std::size_t> ids;
  for (std::size_t k = 0; k < t; ++k) {
    if (tokens[k].graph != &g) throw Error(ErrorCode::kInvalidArgument, "operands belong to different graphs");
    if (tokens[k].shape() != s0) shape_fail(OpKind::kStack, s0, tokens[k].shape());
    const Tensor& X = tokens[k].value();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) out[(i * t + k) * d + j] = X[i * d + j];
    ids.push_back(tokens[k].id);
  }
  return g.push(OpKind::kStack, ids, std::move(out), [n, t, d](ComputeGraph& g, std::size_t self) {
    const auto& in = g.inputs(Var{&g, self});
    const Tensor& gy = g.out_grad(self);
    for (std::size_t k = 0; k < t; ++k) {
      if (!g.needs_grad(in[k])) continue;
      Tensor& gk = g.grad_slot(in[k]);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) gk[i * d + j] += gy[(i * t + k) * d + j];
    }
  });
}

Var unstack(Var a, std::size_t t) {
  auto& g = same_graph({a});
  const Tensor& A = a.value();
  if (A.rank() != 3 || t >= A.dim(1))
    throw ShapeError("unstack: token " + std::to_string(t) + " invalid for shape " + shape_str(A.shape()));
  const std::size_t n = A.dim(0), T = A.dim(1), d = A.dim(2);
  Tensor out({n, d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = A[(i * T + t) * d + j];
  return g.push(OpKind::kUnstack, {a.id}, std::move(out), [n, T, d, t](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const Tensor& gy = g.out_grad(self);
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) ga[(i * T + t) * d + j] += gy[i * d + j];
  });
}

Var gather_rows(Var table, std::vector<std::size_t> indices) {
  auto& g = same_graph({table});
  const Tensor& W = table.value();
  require_rank2(OpKind::kGather, W);
  if (indices.empty()) throw ShapeError("gather_rows: empty index list");
  const std::size_t d = W.cols();
  Tensor out({indices.size(), d});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= W.rows())
      throw ShapeError("gather_rows: index " + std::to_string(indices[r]) + " out of range for table " +
                       shape_str(W.shape()));
    for (std::size_t j = 0; j < d; ++j) out.at(r, j) = W.at(indices[r], j);
  }
  return g.push(OpKind::kGather, {table.id}, std::move(out),
                [idx = std::move(indices), d](ComputeGraph& g, std::size_t self) {
                  const auto it = g.inputs(Var{&g, self})[0];
                  const Tensor& gy = g.out_grad(self);
                  Tensor& gt = g.grad_slot(it);
                  for (std::size_t r = 0; r < idx.size(); ++r)
                    for (std::size_t j = 0; j < d; ++j) gt[idx[r] * d + j] += gy[r * d + j];
                });
}

Var spmm(std::shared_ptr<const SparseMatrix> m, Var a) {
  auto& g = same_graph({a});
  const Tensor& A = a.value();
  require_rank2(OpKind::kSpMM, A);
  if (m->cols != A.rows()) shape_fail(OpKind::kSpMM, Shape{m->rows, m->cols}, A.shape());
  const std::size_t d = A.cols();
  Tensor out({m->rows, d});
  for (std::size_t r = 0; r < m->rows; ++r)
    for (std::size_t k = m->offsets[r]; k < m->offsets[r + 1]; ++k) {
      const double w = m->values[k];
      const std::size_t c = m->indices[k];
      for (std::size_t j = 0; j < d; ++j) out[r * d + j] += w * A[c * d + j];
    }
  return g.push(OpKind::kSpMM, {a.id}, std::move(out), [m, d](ComputeGraph& g, std::size_t self) {
    const auto ia = g.inputs(Var{&g, self})[0];
    const Tensor& gy = g.out_grad(self);
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t r = 0; r < m->rows; ++r)
      for (std::size_t k = m->offsets[r]; k < m->offsets[r + 1]; ++k) {
        const double w = m->values[k];
        const std::size_t c = m->indices[k];
        for (std::size_t j = 0; j < d; ++j) ga[c * d + j] += w * gy[r * d + j];
      }
  });
}

Var stop_gradient(Var a) {
  auto& g = same_graph({a});
  return g.push(OpKind::kStopGradient, {a.id}, a.value(), nullptr);
}

}  // namespace ops

GradientMap finite_difference_gradient(const std::function<double()>& objective, ParameterSet& params, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "finite_difference_gradient: step must be positive");
  GradientMap out;
  for (auto& p : params) {
    Tensor grad(p->value.shape());
    for (std::size_t i = 0; i < p->value.numel(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double fp = objective();
      p->value[i] = orig - h;
      const double fm = objective();
      p->value[i] = orig;
      grad[i] = (fp - fm) / (2.0 * h);
    }
    out.emplace(p->name, std::move(grad));
  }
  return out;
}

}  // namespace e2eg
