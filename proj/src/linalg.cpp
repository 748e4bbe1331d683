#include "gbd/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace gbd {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix Matrix::column(const std::vector<double>& v) {
  Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

bool Matrix::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_at_b: dimension mismatch");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aki * b(k, j);
    }
  return c;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("add: dimension mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < c.values().size(); ++i) c.values()[i] += b.values()[i];
  return c;
}

Matrix scale(const Matrix& m, double c) {
  Matrix s = m;
  for (double& v : s.values()) v *= c;
  return s;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("max_abs_diff: dimension mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i)
    d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

double norm1(const Matrix& m) {
  double best = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += std::abs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

SpdResult spd_factorize(const Matrix& m) {
  const std::size_t n = m.rows();
  if (n == 0 || m.cols() != n) throw std::invalid_argument("spd_factorize: matrix not square");
  if (!m.all_finite()) throw std::invalid_argument("spd_factorize: non-finite entries");

  double scale_m = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scale_m = std::max(scale_m, std::abs(m(i, j)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-10 * std::max(1.0, scale_m))
        throw std::invalid_argument("spd_factorize: matrix not symmetric");

  // work on the symmetrized copy; guards asymmetry accumulated in products
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));

  // Symmetric diagonal equilibration before pivoting. Criterion matrices mix
  // O(n) primary entries with O(1/tau^2) prior entries; a pivot tolerance
  // tied to the raw max diagonal would flag well-conditioned primary blocks
  // as singular whenever tau is small. After scaling, every diagonal is 1 and
  // the tolerance is applied per column.
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(a(i, i) > 0.0)) return SingularReport{i, a(i, i)};
    d[i] = std::sqrt(a(i, i));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= d[i] * d[j];
  constexpr double pd_tolerance = 1e-12;  // max diagonal is exactly 1

  SpdFactorization f;
  f.lower_ = Matrix(n, n);
  Matrix& l = f.lower_;
  double log_det = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > pd_tolerance)) return SingularReport{j, pivot};
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    log_det += 2.0 * std::log(ljj);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  // undo the scaling: L = diag(d) L~ reconstructs the input
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) l(i, j) *= d[i];
    log_det += 2.0 * std::log(d[i]);
  }
  f.log_det_ = log_det;
  return f;
}

Matrix solve_spd(const SpdFactorization& f, const Matrix& rhs) {
  const std::size_t n = f.dimension();
  if (rhs.rows() != n) throw std::invalid_argument("solve_spd: dimension mismatch");
  const Matrix& l = f.factor();
  Matrix x = rhs;
  // L y = rhs
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    // Lᵀ x = y
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, c);
      x(ii, c) = s / l(ii, ii);
    }
  }
  return x;
}

Matrix gram(const Matrix& x, const SpdFactorization& sigma_factor) {
  const std::size_t n = x.rows();
  if (sigma_factor.dimension() != n) throw std::invalid_argument("gram: dimension mismatch");
  const Matrix& l = sigma_factor.factor();
  // y = L⁻¹ x, then g = yᵀy
  Matrix y = x;
  for (std::size_t c = 0; c < y.cols(); ++c)
    for (std::size_t i = 0; i < n; ++i) {
      double s = y(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y(k, c);
      y(i, c) = s / l(i, i);
    }
  Matrix g = matmul_at_b(y, y);
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = i + 1; j < g.cols(); ++j) {
      const double v = 0.5 * (g(i, j) + g(j, i));
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

Matrix spd_inverse(const SpdFactorization& f) {
  return solve_spd(f, Matrix::identity(f.dimension()));
}

}  // namespace gbd
