#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include "deltabound/errors.hpp"
#include "deltabound/oracle.hpp"

namespace deltabound {

// Analytic two-dimensional classifiers; the attacked point is the origin.
enum class Toy2D { f1, f2, f3, f4 };

inline Toy2D parse_toy2d(std::string_view s) {
  if (s == "f1") return Toy2D::f1;
  if (s == "f2") return Toy2D::f2;
  if (s == "f3") return Toy2D::f3;
  if (s == "f4") return Toy2D::f4;
  throw InvalidArgument("unknown toy function '" + std::string(s) + "' (expected f1, f2, f3 or f4)");
}

inline double toy2d_value(Toy2D fn, double x, double y) {
  switch (fn) {
    case Toy2D::f1: return x + y + 0.1;
    case Toy2D::f2: return std::sin(100.0 * x + 100.0 * y + 1.0);
    case Toy2D::f3: {
      const double a = std::sin(20.0 * x + 0.5);
      const double b = std::cos(10.0 * y + 0.1);
      return a * a + b * b - 0.7;
    }
    case Toy2D::f4: {
      double s = 0.0;
      for (int a = 0; a <= 10; ++a) {
        s += std::sin(15.0 * (a + 5) * x + 1.0) + std::sin(15.0 * (a + 2) * y + 4.0);
      }
      return s;
    }
  }
  return 0.0;
}

// Label 1 where fn(x, y) <= 0, else 0.
inline Label toy2d_classify(Toy2D fn, double x, double y) { return toy2d_value(fn, x, y) <= 0.0 ? 1 : 0; }

inline LabelFn toy2d_label_fn(Toy2D fn) {
  return [fn](std::span<const double> p) {
    if (p.size() != 2) throw DimensionMismatch("toy classifiers are defined on R^2");
    return toy2d_classify(fn, p[0], p[1]);
  };
}

}  // namespace deltabound
