#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "deltabound/errors.hpp"

namespace deltabound {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vector scaled(std::span<const double> a, double s) {
  Vector out(a.begin(), a.end());
  for (auto& v : out) v *= s;
  return out;
}

// Returns a / ||a||; throws ZeroDirection when ||a|| is zero or not finite.
inline Vector normalized(std::span<const double> a) {
  const double n = norm(a);
  if (!(n > 0.0) || !std::isfinite(n)) throw ZeroDirection("cannot normalize a zero-length direction");
  return scaled(a, 1.0 / n);
}

// x0 + radius * dir / ||dir||
inline Vector point_along(std::span<const double> x0, std::span<const double> dir, double radius) {
  const double n = norm(dir);
  if (!(n > 0.0)) throw ZeroDirection("direction has zero norm");
  if (x0.size() != dir.size()) throw DimensionMismatch("point_along: size mismatch");
  Vector p(x0.begin(), x0.end());
  axpy(radius / n, dir, p);
  return p;
}

}  // namespace deltabound
