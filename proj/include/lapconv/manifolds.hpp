#pragma once

#include "lapconv/point.hpp"

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lapconv {

class Rng;

/// Round sphere S^d of the given radius in R^{d+1} (d = 1 is the circle).
struct SphereShape {
  int d;
  double radius;
};

/// Flat torus S^1(r1) x S^1(r2) in R^4.
struct TorusShape {
  double r1;
  double r2;
};

/// Orthonormal basis of T_xM, stored as ambient vectors.
struct Frame {
  std::array<Point, kMaxIntrinsic> e{};
  int dim = 0;

  /// Ambient vector sum_i v_i e_i.
  Point embed(const Local& v) const {
    Point out{};
    for (int i = 0; i < dim; ++i) out = out + v[i] * e[i];
    return out;
  }
};

/// Orthonormal basis of the normal space at x.
struct NormalSpace {
  std::array<Point, 2> n{};
  int count = 0;
};

/// Geodesic t -> E_x(t u) from x with unit frame direction u, prepared for
/// repeated evaluation.
struct Ray {
  Point origin{};
  Point tangent{};  // frame.embed(u)
  Local u{};
  std::array<double, 2> angles{};  // torus only
};

/// A catalog manifold with closed-form geometry.
///
/// Normal coordinates at x are taken with respect to tangent_frame(x), so
/// exp_map(x, v) is E_x(v) = exp_x(sum_i v_i e_i) and the geodesic distance
/// from x to E_x(v) equals |v| on the ball of radius injectivity_bound().
class Manifold {
public:
  static Manifold sphere(int d, double radius = 1.0);
  static Manifold circle(double radius = 1.0) { return sphere(1, radius); }
  static Manifold flat_torus(double r1 = 1.0, double r2 = 1.0);

  /// "s1", "s2", "s3" (radius list of length <= 1) or "torus" (two radii).
  static Manifold from_name(std::string_view name, std::span<const double> radii);

  std::string name() const;
  std::vector<double> radii() const;
  const std::variant<SphereShape, TorusShape>& shape() const { return shape_; }
  bool is_sphere() const { return std::holds_alternative<SphereShape>(shape_); }

  int dim() const;
  int ambient_dim() const;
  double volume() const;
  double diameter_chord() const;
  double max_geodesic_distance() const;

  /// c1: radius of the normal-coordinate ball used everywhere. 0.9 pi R on
  /// spheres, 0.9 pi min(r_i) on the torus.
  double injectivity_bound() const;

  /// Catalog value of the constant c2 bounding the chart deviations
  /// |sqrt det g - 1|, |E_x(v) - x - E_x'(0)v| / |v|^2 and the third-order
  /// remainder / |v|^3.
  double chart_constant() const;

  /// Distance of x from the embedding constraint (0 on the manifold).
  double embedding_residual(const Point& x) const;
  /// Throws DomainError when the residual exceeds tol.
  void require_on_manifold(const Point& x, double tol = 1e-9) const;
  Point project(const Point& x) const;

  double geodesic_distance(const Point& x, const Point& y) const;

  /// E_x(v). Throws DomainError when |v| >= injectivity_bound().
  Point exp_map(const Point& x, const Local& v) const;
  /// E_x(v) for any v; past the cut locus this is no longer a chart.
  Point exp_map_unbounded(const Point& x, const Local& v) const;
  Ray ray(const Point& x, const Frame& frame, const Local& u) const;
  /// E_x(t u); no injectivity check.
  Point ray_point(const Ray& ray, double t) const;
  /// Columns dE_x(v)/dv_i, i < d.
  std::array<Point, kMaxIntrinsic> exp_map_differential(const Point& x, const Local& v) const;
  /// Second derivative E_x''(0)(v, v).
  Point exp_map_second_derivative(const Point& x, const Local& v) const;
  /// Mean curvature vector sum_i E_x''(0)(e_i, e_i).
  Point mean_curvature(const Point& x) const;

  Frame tangent_frame(const Point& x) const;
  NormalSpace normal_space(const Point& x) const;
  Point tangent_projection(const Point& x, const Point& g) const;

  /// sqrt(det g^x(v)) as a function of r = |v|. Throws for r >= c1.
  double metric_det_normal(double r) const;

  /// One draw from the normalized volume measure.
  Point sample_uniform(Rng& rng) const;

  /// Angles (theta_1, theta_2) of a torus point.
  std::array<double, 2> torus_angles(const Point& x) const;
  Point torus_point(double theta1, double theta2) const;

private:
  explicit Manifold(std::variant<SphereShape, TorusShape> shape) : shape_(shape) {}
  std::variant<SphereShape, TorusShape> shape_;
};

} // namespace lapconv
