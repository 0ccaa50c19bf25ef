// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2egrec/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "e2egrec/error.hpp"

namespace e2eg {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {
  if (shape_.size() > 3) throw ShapeError("tensor rank > 3: " + shape_str(shape_));
  for (auto d : shape_)
    if (d == 0) throw ShapeError("tensor dimensions must be positive: " + shape_str(shape_));
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() > 3) throw ShapeError("tensor rank > 3: " + shape_str(shape_));
  for (auto d : shape_)
    if (d == 0) throw ShapeError("tensor dimensions must be positive: " + shape_str(shape_));
  if (shape_numel(shape_) != data_.size())
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " + shape_str(shape_));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

double Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape_));
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::norm() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double Tensor::max_abs_diff(const Tensor& other) const {
  if (shape_ != other.shape_)
    throw ShapeError("max_abs_diff: " + shape_str(shape_) + " vs " + shape_str(other.shape_));
  double m = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) m = std::max(m, std::abs(data_[i] - other.data_[i]));
  return m;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::axpy(double scale, const Tensor& other) {
  if (shape_ != other.shape_) throw ShapeError("axpy: " + shape_str(shape_) + " vs " + shape_str(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

Tensor SparseMatrix::to_dense() const {
  Tensor t({std::max<std::size_t>(rows, 1), std::max<std::size_t>(cols, 1)});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) t.at(r, indices[k]) += values[k];
  return t;
}

SparseMatrix SparseMatrix::transposed() const {
  SparseMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.offsets.assign(cols + 1, 0);
  for (auto c : indices) ++t.offsets[c + 1];
  for (std::size_t c = 0; c < cols; ++c) t.offsets[c + 1] += t.offsets[c];
  t.indices.resize(nnz());
  t.values.resize(nnz());
  std::vector<std::size_t> cursor(t.offsets.begin(), t.offsets.end() - 1);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      const std::size_t dst = cursor[indices[k]]++;
      t.indices[dst] = r;
      t.values[dst] = values[k];
    }
  }
  return t;
}

}  // namespace e2eg
