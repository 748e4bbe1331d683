#pragma once

#include <cstddef>
#include <initializer_list>
#include <variant>
#include <vector>

namespace gbd {

// Dense row-major matrix. Everything here is sized for design problems of a
// few dozen runs and model terms; no sparse or blocked paths.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix column(const std::vector<double>& v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_at_b(const Matrix& a, const Matrix& b);  // aᵀ·b
Matrix add(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double c);
double max_abs_diff(const Matrix& a, const Matrix& b);
double norm1(const Matrix& m);  // max absolute column sum

struct SingularReport {
  std::size_t pivot_index = 0;
  double pivot_value = 0.0;
};

// Cholesky factor L (lower triangular, positive diagonal) with
// log_det = 2 * sum(log(diag(L))) of the factorized matrix.
class SpdFactorization {
 public:
  std::size_t dimension() const { return lower_.rows(); }
  const Matrix& factor() const { return lower_; }
  double log_det() const { return log_det_; }

 private:
  friend std::variant<SpdFactorization, SingularReport> spd_factorize(const Matrix&);
  Matrix lower_;
  double log_det_ = 0.0;
};

using SpdResult = std::variant<SpdFactorization, SingularReport>;

inline const SpdFactorization* spd_ok(const SpdResult& r) {
  return std::get_if<SpdFactorization>(&r);
}

// Factorizes (m + mᵀ)/2; m must be square, finite, and symmetric within
// 1e-10 relative. A pivot at or below 1e-12 * max(diag) yields a
// SingularReport with the failing pivot index instead of a factor.
SpdResult spd_factorize(const Matrix& m);

// Solves (L Lᵀ) x = rhs for an n×k right-hand side.
Matrix solve_spd(const SpdFactorization& f, const Matrix& rhs);

// xᵀ Σ⁻¹ x, where sigma_factor factorizes Σ. Symmetrized exactly.
Matrix gram(const Matrix& x, const SpdFactorization& sigma_factor);

// Σ⁻¹ as an explicit matrix (solve against the identity).
Matrix spd_inverse(const SpdFactorization& f);

}  // namespace gbd
