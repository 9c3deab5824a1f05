// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chunkmem {

/// Dense row-major matrix of doubles.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Mat identity(std::size_t n);
  static Mat zeros(std::size_t rows, std::size_t cols) { return Mat(rows, cols); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool all_finite() const;

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Dense vector of doubles.
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t dim) : data_(dim, 0.0) {}
  explicit Vec(std::vector<double> data) : data_(std::move(data)) {}

  std::size_t dim() const { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  friend bool operator==(const Vec&, const Vec&) = default;

 private:
  std::vector<double> data_;
};

Mat matmul(const Mat& a, const Mat& b);

/// a · bᵀ without materializing the transpose.
Mat matmul_transposed(const Mat& a, const Mat& b);

/// Row-wise softmax with per-row max subtraction. Throws on non-finite input.
Mat softmax_rows(const Mat& m);

/// Column means. Throws on a matrix with zero rows.
Vec mean_pool_rows(const Mat& m);

/// softmax(q · kᵀ · scale) · v
Mat sdp_attention(const Mat& q, const Mat& k, const Mat& v, double scale);

/// Default attention scale 1/sqrt(head_dim).
double default_scale(std::size_t head_dim);

double dot(std::span<const double> a, std::span<const double> b);

/// Stacks matrices with equal column counts top to bottom. Zero-row parts are
/// skipped regardless of their column count.
Mat concat_rows(std::span<const Mat* const> parts);

}  // namespace chunkmem
