#include "lapconv/quadrature.hpp"

#include "lapconv/errors.hpp"
#include "lapconv/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lapconv {

namespace {

constexpr double kPi = std::numbers::pi;

double ray_distance(const Manifold& m, const Ray& ray, DistanceKind kind, double t) {
  if (kind == DistanceKind::geodesic) return t;
  return chord_distance(ray.origin, m.ray_point(ray, t));
}

double crossing(const Manifold& m, const Ray& ray, DistanceKind kind, double target, double c1) {
  if (kind == DistanceKind::geodesic) return std::min(target, c1);
  if (ray_distance(m, ray, kind, c1) <= target) return c1;
  // Chord <= geodesic, so the crossing lies at or beyond target.
  double lo = std::min(target, c1), hi = c1;
  for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ray_distance(m, ray, kind, mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace

std::vector<Direction> sphere_directions(int d, int angular) {
  std::vector<Direction> dirs;
  if (d == 1) {
    dirs.push_back({{1.0, 0.0, 0.0}, 1.0});
    dirs.push_back({{-1.0, 0.0, 0.0}, 1.0});
  } else if (d == 2) {
    if (angular < 1) throw DomainError("sphere_directions: angular node count must be positive");
    for (int j = 0; j < angular; ++j) {
      const double a = 2.0 * kPi * (j + 0.5) / angular;
      dirs.push_back({{std::cos(a), std::sin(a), 0.0}, 2.0 * kPi / angular});
    }
  } else if (d == 3) {
    if (angular < 2) throw DomainError("sphere_directions: angular node count must be >= 2");
    const GaussLegendreRule& gl = gauss_legendre(angular / 2);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double c = gl.nodes[i];
      const double s = std::sqrt(1.0 - c * c);
      for (int j = 0; j < angular; ++j) {
        const double a = 2.0 * kPi * (j + 0.5) / angular;
        dirs.push_back({{s * std::cos(a), s * std::sin(a), c}, gl.weights[i] * 2.0 * kPi / angular});
      }
    }
  } else {
    throw DomainError("sphere_directions: dimension must be 1, 2 or 3");
  }
  return dirs;
}

double ray_crossing(const Manifold& m, const Point& x, const Frame& frame, const Local& u, DistanceKind kind,
                    double target) {
  return crossing(m, m.ray(x, frame, u), kind, target, m.injectivity_bound());
}

BallIntegral integrate_ball(const Manifold& m, const Point& x, DistanceKind kind, double h,
                            std::span<const double> arg_breaks, double arg_max, const BallRule& rule,
                            const BallIntegrand& g) {
  if (!(h > 0.0)) throw DomainError("integrate_ball: h must be positive");
  const int d = m.dim();
  const double c1 = m.injectivity_bound();
  const Frame frame = m.tangent_frame(x);
  const GaussLegendreRule& gl = gauss_legendre(rule.radial_nodes);

  CompensatedSum total, total_abs;
  BallIntegral out;
  std::vector<double> edges;
  for (const Direction& dir : sphere_directions(d, rule.angular_nodes)) {
    const Ray ray = m.ray(x, frame, dir.u);
    const double r_max = crossing(m, ray, kind, arg_max * h, c1);
    edges.assign(1, 0.0);
    for (double a : arg_breaks) {
      if (!(a > 0.0) || a >= arg_max) continue;
      const double r = crossing(m, ray, kind, a * h, c1);
      if (r > edges.back() && r < r_max) edges.push_back(r);
    }
    edges.push_back(r_max);

    CompensatedSum ray_sum, ray_abs;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
      const double lo = edges[p], hi = edges[p + 1];
      const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
      if (!(half > 0.0)) continue;
      for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const double r = mid + half * gl.nodes[k];
        const Point y = m.ray_point(ray, r);
        const double dist = kind == DistanceKind::geodesic ? r : chord_distance(x, y);
        const double jac = m.metric_det_normal(r) * std::pow(r, d - 1);
        const double val = g(y, dist / h) * jac * half * gl.weights[k];
        ray_sum += val;
        ray_abs += std::abs(val);
        ++out.evaluations;
      }
    }
    total += dir.weight * ray_sum.value();
    total_abs += dir.weight * ray_abs.value();
  }
  out.value = total.value();
  out.abs_value = total_abs.value();
  return out;
}

} // namespace lapconv
