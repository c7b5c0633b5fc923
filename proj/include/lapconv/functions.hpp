#pragma once

#include "lapconv/kernels.hpp"
#include "lapconv/manifolds.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lapconv {

/// A C^3 test function on a catalog manifold, given as a smooth ambient
/// extension with closed-form intrinsic gradient and Laplace-Beltrami values.
class TestFunction {
public:
  struct Constant {
    double value;
  };
  /// f(x) = <a, x>.
  struct Linear {
    Point a;
  };
  /// f(x) = prod_{k in idx} x^k / R^l with distinct indices: a degree-l
  /// spherical harmonic (sphere only).
  struct CoordinateProduct {
    std::vector<int> indices;
  };
  /// f = cos(k1 theta_1 + k2 theta_2) (torus only).
  struct TorusWave {
    int k1;
    int k2;
  };
  using Family = std::variant<Constant, Linear, CoordinateProduct, TorusWave>;

  static TestFunction constant(const Manifold& m, double value);
  static TestFunction linear(const Manifold& m, const Point& a);
  /// x^axis (ambient coordinate function).
  static TestFunction coordinate(const Manifold& m, int axis);
  static TestFunction coordinate_product(const Manifold& m, std::vector<int> indices);
  /// Degree-l harmonic x^0 x^1 ... x^{l-1} / R^l on a sphere with l <= d+1.
  static TestFunction sphere_harmonic(const Manifold& m, int degree);
  static TestFunction torus_wave(const Manifold& m, int k1, int k2);

  double operator()(const Point& x) const;
  Point grad_ambient(const Point& x) const;
  AmbientMatrix hess_ambient(const Point& x) const;
  /// Closed-form intrinsic gradient, as an ambient tangent vector.
  Point grad_manifold(const Point& x) const;
  /// Closed-form Laplace-Beltrami value.
  double laplace_beltrami(const Point& x) const;
  /// sup over M of |f|.
  double sup_bound() const;
  /// Bound on the third derivatives along M.
  double third_derivative_bound() const;

  bool is_constant() const { return std::holds_alternative<Constant>(family_); }
  std::string id() const;
  const Manifold& manifold() const { return manifold_; }
  const Family& family() const { return family_; }

private:
  TestFunction(Manifold m, Family f) : manifold_(std::move(m)), family_(std::move(f)) {}
  Manifold manifold_;
  Family family_;
};

/// Sampling density p with respect to the volume measure.
class Density {
public:
  static Density uniform(const Manifold& m);
  /// p proportional to 1 + beta x^1 / s, s = R on spheres and r1 on the torus.
  static Density tilted(const Manifold& m, double beta);
  /// General density; `unnormalized` must integrate to 1/normalizer.
  static Density custom(std::string id, std::function<double(const Point&)> unnormalized,
                        std::function<Point(const Point&)> grad_manifold_unnormalized,
                        double normalizer, std::optional<double> unnormalized_max,
                        std::optional<double> unnormalized_min);

  double operator()(const Point& x) const { return normalizer_ * unnormalized_(x); }
  double unnormalized(const Point& x) const { return unnormalized_(x); }
  Point grad_manifold(const Point& x) const { return normalizer_ * grad_(x); }

  std::optional<double> p_min() const;
  std::optional<double> p_max() const;
  std::optional<double> unnormalized_max() const { return q_max_; }
  double normalizer() const { return normalizer_; }
  const std::string& id() const { return id_; }
  bool is_uniform() const { return uniform_; }

private:
  Density() = default;
  std::string id_;
  std::function<double(const Point&)> unnormalized_;
  std::function<Point(const Point&)> grad_;
  double normalizer_ = 1.0;
  std::optional<double> q_max_;
  std::optional<double> q_min_;
  bool uniform_ = false;
};

/// A f(x) = c0 (<grad p, grad f> + p Lap f / 2) with a precomputed c0.
double limit_operator(const Density& p, const TestFunction& f, double c0_value, const Point& x);

double limit_operator(const Manifold& m, const Density& p, const TestFunction& f, const Kernel& kernel,
                      const Point& x);

/// Tangential projection of an ambient gradient.
Point manifold_grad(const Manifold& m, const Point& x, const Point& ambient_gradient);
Point manifold_grad(const Manifold& m, const TestFunction& f, const Point& x);

/// Closed-form Laplace-Beltrami value of a catalog test function.
double manifold_laplacian(const Manifold& m, const TestFunction& f, const Point& x);

/// The same quantity from ambient derivatives:
/// sum_i f''(x)(e_i, e_i) + <grad f(x), sum_i E_x''(0)(e_i, e_i)>.
double manifold_laplacian_from_ambient(const Manifold& m, const TestFunction& f, const Point& x);

} // namespace lapconv
