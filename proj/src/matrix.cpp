#include "cfz/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cfz/parallel.hpp"

namespace cfz {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

}  // namespace

std::string shape_string(std::size_t rows, std::size_t cols) {
  std::ostringstream os;
  os << '(' << rows << 'x' << cols << ')';
  return os.str();
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                     " does not match shape " + cfz::shape_string(rows, cols));
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Matrix::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

std::string Matrix::shape_string() const { return cfz::shape_string(rows_, cols_); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + a.shape_string() + " x " +
                     b.shape_string());
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  const std::size_t out_cols = b.cols();
  parallel_rows(a.rows(), inner * out_cols, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double* crow = c.row(i).data();
      const double* arow = a.row(i).data();
      for (std::size_t k = 0; k < inner; ++k) {
        const double aik = arow[k];
        if (aik == 0.0) continue;
        const double* brow = b.row(k).data();
        for (std::size_t j = 0; j < out_cols; ++j) crow[j] += aik * brow[j];
      }
    }
  });
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: row counts differ, " + a.shape_string() + "^T x " +
                     b.shape_string());
  }
  Matrix c(a.cols(), b.cols());
  const std::size_t n = a.rows();
  const std::size_t out_cols = b.cols();
  parallel_rows(a.cols(), n * out_cols, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = 0; r < n; ++r) {
      const double* arow = a.row(r).data();
      const double* brow = b.row(r).data();
      for (std::size_t i = begin; i < end; ++i) {
        const double ari = arow[i];
        if (ari == 0.0) continue;
        double* crow = c.row(i).data();
        for (std::size_t j = 0; j < out_cols; ++j) crow[j] += ari * brow[j];
      }
    }
  });
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: column counts differ, " + a.shape_string() + " x " +
                     b.shape_string() + "^T");
  }
  Matrix c(a.rows(), b.rows());
  const std::size_t inner = a.cols();
  parallel_rows(a.rows(), inner * b.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double* arow = a.row(i).data();
      for (std::size_t j = 0; j < b.rows(); ++j) {
        const double* brow = b.row(j).data();
        double acc = 0.0;
        for (std::size_t k = 0; k < inner; ++k) acc += arow[k] * brow[k];
        c(i, j) = acc;
      }
    }
  });
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix c = a;
  add_in_place(c, b);
  return c;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix c = a;
  add_in_place(c, b, -1.0);
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix c = a;
  auto cv = c.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < cv.size(); ++i) cv[i] *= bv[i];
  return c;
}

Matrix scaled(const Matrix& a, double factor) {
  Matrix c = a;
  for (double& v : c.values()) v *= factor;
  return c;
}

void add_in_place(Matrix& target, const Matrix& delta, double factor) {
  require_same_shape(target, delta, "add_in_place");
  auto tv = target.values();
  auto dv = delta.values();
  if (factor == 1.0) {
    for (std::size_t i = 0; i < tv.size(); ++i) tv[i] += dv[i];
  } else {
    for (std::size_t i = 0; i < tv.size(); ++i) tv[i] += factor * dv[i];
  }
}

Matrix add_row_broadcast(const Matrix& a, const Matrix& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row_broadcast: expected row " + shape_string(1, a.cols()) + ", got " +
                     row.shape_string());
  }
  Matrix c = a;
  const auto rv = row.values();
  for (std::size_t i = 0; i < c.rows(); ++i) {
    auto cr = c.row(i);
    for (std::size_t j = 0; j < cr.size(); ++j) cr[j] += rv[j];
  }
  return c;
}

Matrix column_sums(const Matrix& a) {
  Matrix s(1, a.cols());
  auto sv = s.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ar = a.row(i);
    for (std::size_t j = 0; j < ar.size(); ++j) sv[j] += ar[j];
  }
  return s;
}

Matrix column_means(const Matrix& a) {
  if (a.rows() == 0) throw ShapeError("column_means: no rows");
  return scaled(column_sums(a), 1.0 / static_cast<double>(a.rows()));
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto in = logits.row(i);
    auto out = p.row(i);
    const double shift = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp(in[j] - shift);
      total += out[j];
    }
    for (double& v : out) v /= total;
  }
  return p;
}

std::vector<double> logsumexp_rows(const Matrix& logits) {
  std::vector<double> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto in = logits.row(i);
    const double shift = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (double v : in) total += std::exp(v - shift);
    out[i] = shift + std::log(total);
  }
  return out;
}

Matrix hconcat(const Matrix& left, const Matrix& right) {
  if (left.rows() != right.rows()) {
    throw ShapeError("hconcat: row counts differ, " + left.shape_string() + " | " +
                     right.shape_string());
  }
  Matrix c(left.rows(), left.cols() + right.cols());
  for (std::size_t i = 0; i < c.rows(); ++i) {
    auto out = c.row(i);
    std::copy(left.row(i).begin(), left.row(i).end(), out.begin());
    std::copy(right.row(i).begin(), right.row(i).end(), out.begin() + left.cols());
  }
  return c;
}

Matrix slice_cols(const Matrix& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") exceed " + a.shape_string());
  }
  Matrix c(a.rows(), count);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto in = a.row(i);
    std::copy(in.begin() + begin, in.begin() + begin + count, c.row(i).begin());
  }
  return c;
}

Matrix select_rows(const Matrix& a, std::span<const std::size_t> indices) {
  Matrix c(indices.size(), a.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= a.rows()) {
      throw ShapeError("select_rows: row " + std::to_string(indices[i]) + " outside " +
                       a.shape_string());
    }
    const auto in = a.row(indices[i]);
    std::copy(in.begin(), in.end(), c.row(i).begin());
  }
  return c;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.empty()) return bottom;
  if (bottom.empty()) return top;
  if (top.cols() != bottom.cols()) {
    throw ShapeError("vstack: column counts differ, " + top.shape_string() + " / " +
                     bottom.shape_string());
  }
  std::vector<double> data(top.values().begin(), top.values().end());
  data.insert(data.end(), bottom.values().begin(), bottom.values().end());
  return Matrix(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

bool all_finite(const Matrix& a) noexcept {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double v) { return std::isfinite(v); });
}

double sum(const Matrix& a) noexcept {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s;
}

double squared_norm(const Matrix& a) noexcept {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace cfz
