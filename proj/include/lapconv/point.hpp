#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace lapconv {

inline constexpr std::size_t kMaxAmbient = 4;
inline constexpr std::size_t kMaxIntrinsic = 3;

/// Ambient coordinates in R^m, zero-padded up to kMaxAmbient.
using Point = std::array<double, kMaxAmbient>;

/// Coefficients of a tangent vector in an orthonormal frame (R^d, zero-padded).
using Local = std::array<double, kMaxIntrinsic>;

/// Symmetric ambient matrix (Hessians).
using AmbientMatrix = std::array<Point, kMaxAmbient>;

inline double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kMaxAmbient; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }

inline Point operator+(Point a, const Point& b) {
  for (std::size_t i = 0; i < kMaxAmbient; ++i) a[i] += b[i];
  return a;
}

inline Point operator-(Point a, const Point& b) {
  for (std::size_t i = 0; i < kMaxAmbient; ++i) a[i] -= b[i];
  return a;
}

inline Point operator*(double s, Point a) {
  for (auto& c : a) c *= s;
  return a;
}

/// Euclidean distance in the ambient space. Every neighbor search and
/// estimator goes through this one function so ties resolve identically.
inline double chord_distance(const Point& x, const Point& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < kMaxAmbient; ++i) {
    const double t = x[i] - y[i];
    s += t * t;
  }
  return std::sqrt(s);
}

inline double local_norm(const Local& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

inline double quadratic_form(const AmbientMatrix& m, const Point& u, const Point& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < kMaxAmbient; ++i)
    for (std::size_t j = 0; j < kMaxAmbient; ++j) s += u[i] * m[i][j] * v[j];
  return s;
}

} // namespace lapconv
