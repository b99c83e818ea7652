#pragma once

// Minimal dense row-major matrix/vector kit. System dimensions here are tiny
// (n = 1..4 in the shipped experiments), so clarity beats blocking.

#include <cmath>
#include <vector>

#include "errors.hpp"

namespace fsnde {

using Vec = std::vector<double>;

struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix zeros(int r, int c) { return Matrix(r, c); }

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  Matrix& operator+=(const Matrix& o) {
    for (size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
    return *this;
  }
  Matrix& operator*=(double s) {
    for (double& v : a) v *= s;
    return *this;
  }
  bool square() const { return rows == cols; }
};

inline Matrix operator+(Matrix lhs, const Matrix& rhs) { return lhs += rhs; }

inline Matrix operator-(const Matrix& lhs, const Matrix& rhs) {
  Matrix r = lhs;
  for (size_t i = 0; i < r.a.size(); ++i) r.a[i] -= rhs.a[i];
  return r;
}

inline Matrix operator*(const Matrix& m, double s) {
  Matrix r = m;
  r *= s;
  return r;
}
inline Matrix operator*(double s, const Matrix& m) { return m * s; }

inline Matrix operator*(const Matrix& x, const Matrix& y) {
  if (x.cols != y.rows) throw DimensionMismatch("matrix product: inner dimensions differ");
  Matrix r(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      const double v = x(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < y.cols; ++j) r(i, j) += v * y(k, j);
    }
  return r;
}

inline Vec operator*(const Matrix& m, const Vec& v) {
  if (m.cols != static_cast<int>(v.size()))
    throw DimensionMismatch("matrix-vector product: dimensions differ");
  Vec r(m.rows, 0.0);
  for (int i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
    r[i] = s;
  }
  return r;
}

inline Matrix transpose(const Matrix& m) {
  Matrix r(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) r(j, i) = m(i, j);
  return r;
}

inline double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.a) s += v * v;
  return std::sqrt(s);
}

inline Vec& axpy(Vec& y, double a, const Vec& x) {
  for (size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
  return y;
}

inline Vec operator+(Vec lhs, const Vec& rhs) {
  for (size_t i = 0; i < lhs.size(); ++i) lhs[i] += rhs[i];
  return lhs;
}
inline Vec operator-(const Vec& lhs, const Vec& rhs) {
  Vec r = lhs;
  for (size_t i = 0; i < r.size(); ++i) r[i] -= rhs[i];
  return r;
}
inline Vec operator*(double s, Vec v) {
  for (double& x : v) x *= s;
  return v;
}

inline double norm2(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double norm_inf(const Vec& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::fabs(x));
  return s;
}

// Operator 2-norm by power iteration on A^T A: 50 iterations, relative
// tolerance 1e-10. The start vector is mildly graded so it is not
// accidentally orthogonal to the dominant singular direction.
inline double op2_norm(const Matrix& m) {
  if (m.rows == 0 || m.cols == 0) return 0.0;
  const Matrix b = transpose(m) * m;
  const int n = b.rows;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = 1.0 + 1e-3 * i;
  double nv = norm2(v);
  for (double& x : v) x /= nv;
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    Vec w = b * v;
    const double nw = norm2(w);
    if (nw == 0.0) return 0.0;
    const double prev = lambda;
    lambda = nw;
    for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
    if (it > 0 && std::fabs(lambda - prev) <= 1e-10 * lambda) break;
  }
  return std::sqrt(lambda);
}

// Jacobi eigen-decomposition of a symmetric matrix: s = V diag(w) V^T.
inline void jacobi_eigen_sym(const Matrix& s, Vec& w, Matrix& v) {
  const int n = s.rows;
  Matrix a = s;
  v = Matrix::identity(n);
  for (int sweep = 0; sweep < 128; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-14 * (1.0 + frobenius_norm(a))) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
  }
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) w[i] = a(i, i);
}

// Symmetric PSD square root; tiny negative eigenvalues (roundoff) clamp to 0.
inline Matrix sqrtm_spd(const Matrix& s) {
  Vec w;
  Matrix v;
  jacobi_eigen_sym(s, w, v);
  const int n = s.rows;
  Matrix r(n, n);
  for (int k = 0; k < n; ++k) {
    const double sw = w[k] > 0.0 ? std::sqrt(w[k]) : 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r(i, j) += sw * v(i, k) * v(j, k);
  }
  return r;
}

}  // namespace fsnde
