// Copyright 2026 The chunkmem Authors
// SPDX-License-Identifier: Apache-2.0

#include "chunkmem/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chunkmem/error.hpp"

namespace chunkmem {

namespace {

std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorKind::kShape, "data length " + std::to_string(data_.size()) +
                                       " does not match " + std::to_string(rows_) + "x" +
                                       std::to_string(cols_));
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Mat::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kShape, "dot of lengths " + std::to_string(a.size()) + " and " +
                                       std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::kShape, "matmul " + shape_str(a) + " by " + shape_str(b));
  }
  Mat out(a.rows(), b.cols());
  // i-k-j order keeps the inner loop contiguous in both b and out.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Mat matmul_transposed(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorKind::kShape, "matmul_transposed " + shape_str(a) + " by " + shape_str(b));
  }
  Mat out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto a_row = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a_row, b.row(j));
  }
  return out;
}

Mat softmax_rows(const Mat& m) {
  if (!m.all_finite()) throw Error(ErrorKind::kNonFinite, "softmax input contains NaN or Inf");
  Mat out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto in = m.row(r);
    auto o = out.row(r);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      o[c] = std::exp(in[c] - mx);
      sum += o[c];
    }
    for (double& x : o) x /= sum;
  }
  return out;
}

Vec mean_pool_rows(const Mat& m) {
  if (m.rows() == 0) throw Error(ErrorKind::kEmptyInput, "mean pool over zero rows");
  Vec out(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += row[c];
  }
  const double inv = 1.0 / static_cast<double>(m.rows());
  for (std::size_t c = 0; c < m.cols(); ++c) out[c] *= inv;
  return out;
}

double default_scale(std::size_t head_dim) { return 1.0 / std::sqrt(static_cast<double>(head_dim)); }

Mat sdp_attention(const Mat& q, const Mat& k, const Mat& v, double scale) {
  if (q.cols() != k.cols()) {
    throw Error(ErrorKind::kShape, "attention q " + shape_str(q) + " vs k " + shape_str(k));
  }
  if (k.rows() != v.rows()) {
    throw Error(ErrorKind::kShape, "attention k " + shape_str(k) + " vs v " + shape_str(v));
  }
  if (k.rows() == 0) throw Error(ErrorKind::kEmptyInput, "attention over zero keys");
  Mat logits = matmul_transposed(q, k);
  for (double& x : logits.data()) x *= scale;
  return matmul(softmax_rows(logits), v);
}

Mat concat_rows(std::span<const Mat* const> parts) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool have_cols = false;
  for (const Mat* p : parts) {
    if (p->rows() == 0) continue;  // an empty block carries no column count
    if (!have_cols) {
      cols = p->cols();
      have_cols = true;
    } else if (p->cols() != cols) {
      throw Error(ErrorKind::kShape, "concat_rows column mismatch " + std::to_string(cols) +
                                         " vs " + std::to_string(p->cols()));
    }
    rows += p->rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const Mat* p : parts) data.insert(data.end(), p->data().begin(), p->data().end());
  return Mat(rows, cols, std::move(data));
}

}  // namespace chunkmem
