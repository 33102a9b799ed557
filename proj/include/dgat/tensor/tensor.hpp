// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dgat/common/error.hpp"
#include "dgat/common/rng.hpp"

namespace dgat {

// Dense 2-D matrix of f64, row-major. Scalars are 1x1, row vectors 1xN.
// Zero-row tensors are legal (empty edge sets).
class Tensor {
public:
  Tensor() = default;
  Tensor(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        v_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw ShapeError("negative tensor dimension");
  }

  static Tensor zeros(int rows, int cols) { return Tensor(rows, cols, 0.0); }

  static Tensor from_rows(int rows, int cols, std::vector<double> values) {
    Tensor t;
    t.rows_ = rows;
    t.cols_ = cols;
    if (values.size() != static_cast<std::size_t>(rows) * cols)
      throw ShapeError("from_rows: value count does not match shape");
    t.v_ = std::move(values);
    return t;
  }

  static Tensor row(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return from_rows(1, n, std::move(values));
  }

  // Gaussian init scaled by 1/sqrt(fan_in) (Xavier-style).
  static Tensor glorot(int rows, int cols, Rng &rng) {
    Tensor t(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows > 0 ? rows : 1));
    for (double &x : t.v_) x = rng.normal() * scale;
    return t;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }

  double &at(int r, int c) { return v_[static_cast<std::size_t>(r) * cols_ + c]; }
  double at(int r, int c) const {
    return v_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double *row_ptr(int r) { return v_.data() + static_cast<std::size_t>(r) * cols_; }
  const double *row_ptr(int r) const {
    return v_.data() + static_cast<std::size_t>(r) * cols_;
  }
  std::vector<double> &data() { return v_; }
  const std::vector<double> &data() const { return v_; }

  bool same_shape(const Tensor &other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  std::string shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  bool all_finite() const {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> v_;
};

inline void check_finite(const Tensor &t, const char *op) {
  if (!t.all_finite())
    throw NumericError(std::string("non-finite value produced by ") + op);
}

} // namespace dgat
