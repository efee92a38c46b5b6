#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfz {

/// Raised when operand shapes are incompatible. The message names both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a caller breaks an API contract (stale caches, misaligned state).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Dense row-major matrix of 64-bit reals.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  std::string shape_string() const;

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Products. All kernels accumulate over the inner index in ascending order,
// so results do not depend on how rows are distributed across threads.
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ · b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a · bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double factor);
void add_in_place(Matrix& target, const Matrix& delta, double factor = 1.0);

/// Adds a 1×cols row to every row of `a`.
Matrix add_row_broadcast(const Matrix& a, const Matrix& row);
/// 1×cols matrix of column sums.
Matrix column_sums(const Matrix& a);
Matrix column_means(const Matrix& a);

/// Row-wise softmax using max-shifted exponentials.
Matrix softmax_rows(const Matrix& logits);
/// Row-wise log Σ exp, one entry per row.
std::vector<double> logsumexp_rows(const Matrix& logits);

Matrix hconcat(const Matrix& left, const Matrix& right);
Matrix slice_cols(const Matrix& a, std::size_t begin, std::size_t count);
Matrix select_rows(const Matrix& a, std::span<const std::size_t> indices);
Matrix vstack(const Matrix& top, const Matrix& bottom);

bool all_finite(const Matrix& a) noexcept;
double sum(const Matrix& a) noexcept;
double squared_norm(const Matrix& a) noexcept;
double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

std::string shape_string(std::size_t rows, std::size_t cols);

}  // namespace cfz
