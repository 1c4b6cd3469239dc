#pragma once

// Small dense vector/matrix primitives. Everything is double precision and
// sized explicitly; no broadcasting, no views.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lrad {

using Vector = std::vector<double>;

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // row-major

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

inline void check_same_dim(const Vector& x, const Vector& y, const char* what) {
  if (x.size() != y.size()) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

inline double dot(const Vector& x, const Vector& y) {
  check_same_dim(x, y, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double squared_norm(const Vector& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

inline double norm(const Vector& x) { return std::sqrt(squared_norm(x)); }

inline double squared_distance(const Vector& x, const Vector& y) {
  check_same_dim(x, y, "squared_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

// y += c * x
inline void axpy(double c, const Vector& x, Vector& y) {
  check_same_dim(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline Vector scaled(const Vector& x, double c) {
  Vector y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = c * x[i];
  return y;
}

inline bool all_finite(const Vector& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

inline Vector mean_of(const std::vector<Vector>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_of: empty list");
  Vector m(xs.front().size(), 0.0);
  for (const Vector& x : xs) axpy(1.0, x, m);
  for (double& v : m) v /= static_cast<double>(xs.size());
  return m;
}

}  // namespace lrad
