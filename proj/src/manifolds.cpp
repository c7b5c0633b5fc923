#include "lapconv/manifolds.hpp"

#include "lapconv/errors.hpp"
#include "lapconv/numerics.hpp"
#include "lapconv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace lapconv {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double factor_norm(const Point& x, int factor) {
  return std::hypot(x[2 * factor], x[2 * factor + 1]);
}

// Unit radial direction of torus factor i at x, embedded in R^4.
Point factor_radial(const Point& x, int factor) {
  Point n{};
  const double r = factor_norm(x, factor);
  n[2 * factor] = x[2 * factor] / r;
  n[2 * factor + 1] = x[2 * factor + 1] / r;
  return n;
}

Point factor_tangent(const Point& x, int factor) {
  Point e{};
  const double r = factor_norm(x, factor);
  e[2 * factor] = -x[2 * factor + 1] / r;
  e[2 * factor + 1] = x[2 * factor] / r;
  return e;
}

} // namespace

Manifold Manifold::sphere(int d, double radius) {
  if (d < 1 || d > 3) throw DomainError("sphere dimension must be 1, 2 or 3");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("sphere radius must be positive");
  return Manifold(SphereShape{d, radius});
}

Manifold Manifold::flat_torus(double r1, double r2) {
  if (!(r1 > 0.0) || !(r2 > 0.0) || !std::isfinite(r1) || !std::isfinite(r2))
    throw DomainError("torus radii must be positive");
  return Manifold(TorusShape{r1, r2});
}

Manifold Manifold::from_name(std::string_view name, std::span<const double> radii) {
  auto radius_at = [&](std::size_t i) { return i < radii.size() ? radii[i] : 1.0; };
  if (name == "s1" || name == "circle" || name == "s2" || name == "sphere" || name == "s3") {
    if (radii.size() > 1) throw ConfigError("sphere takes a single radius");
    const int d = (name == "s1" || name == "circle") ? 1 : (name == "s3" ? 3 : 2);
    if (!(radius_at(0) > 0.0)) throw ConfigError("sphere radius must be positive");
    return sphere(d, radius_at(0));
  }
  if (name == "torus" || name == "t2") {
    if (radii.size() != 0 && radii.size() != 2) throw ConfigError("torus takes two radii");
    if (!(radius_at(0) > 0.0) || !(radius_at(1) > 0.0)) throw ConfigError("torus radii must be positive");
    return flat_torus(radius_at(0), radius_at(1));
  }
  throw ConfigError("unknown manifold '" + std::string(name) + "'");
}

std::string Manifold::name() const {
  return std::visit(Overloaded{[](const SphereShape& s) { return "s" + std::to_string(s.d); },
                               [](const TorusShape&) { return std::string("torus"); }},
                    shape_);
}

std::vector<double> Manifold::radii() const {
  return std::visit(Overloaded{[](const SphereShape& s) { return std::vector<double>{s.radius}; },
                               [](const TorusShape& t) { return std::vector<double>{t.r1, t.r2}; }},
                    shape_);
}

int Manifold::dim() const {
  return std::visit(Overloaded{[](const SphereShape& s) { return s.d; }, [](const TorusShape&) { return 2; }},
                    shape_);
}

int Manifold::ambient_dim() const {
  return std::visit(Overloaded{[](const SphereShape& s) { return s.d + 1; }, [](const TorusShape&) { return 4; }},
                    shape_);
}

double Manifold::volume() const {
  return std::visit(
      Overloaded{[](const SphereShape& s) { return unit_sphere_area(s.d + 1) * std::pow(s.radius, s.d); },
                 [](const TorusShape& t) { return 4.0 * kPi * kPi * t.r1 * t.r2; }},
      shape_);
}

double Manifold::diameter_chord() const {
  return std::visit(Overloaded{[](const SphereShape& s) { return 2.0 * s.radius; },
                               [](const TorusShape& t) { return 2.0 * std::hypot(t.r1, t.r2); }},
                    shape_);
}

double Manifold::max_geodesic_distance() const {
  return std::visit(Overloaded{[](const SphereShape& s) { return kPi * s.radius; },
                               [](const TorusShape& t) { return kPi * std::hypot(t.r1, t.r2); }},
                    shape_);
}

double Manifold::injectivity_bound() const {
  return std::visit(Overloaded{[](const SphereShape& s) { return 0.9 * kPi * s.radius; },
                               [](const TorusShape& t) { return 0.9 * kPi * std::min(t.r1, t.r2); }},
                    shape_);
}

double Manifold::chart_constant() const {
  return std::visit(Overloaded{[](const SphereShape& s) {
                                 const double r = s.radius;
                                 return std::max({1.0 / (2.0 * r), (s.d - 1) / (6.0 * r * r), 1.0 / (6.0 * r * r)});
                               },
                               [](const TorusShape& t) {
                                 const double r = std::min(t.r1, t.r2);
                                 return std::max(1.0 / (2.0 * r), 1.0 / (6.0 * r * r));
                               }},
                    shape_);
}

double Manifold::embedding_residual(const Point& x) const {
  return std::visit(Overloaded{[&](const SphereShape& s) {
                                 double pad = 0.0;
                                 for (std::size_t i = s.d + 1; i < kMaxAmbient; ++i) pad = std::max(pad, std::abs(x[i]));
                                 return std::max(std::abs(norm(x) - s.radius), pad);
                               },
                               [&](const TorusShape& t) {
                                 return std::max(std::abs(factor_norm(x, 0) - t.r1),
                                                 std::abs(factor_norm(x, 1) - t.r2));
                               }},
                    shape_);
}

void Manifold::require_on_manifold(const Point& x, double tol) const {
  const double res = embedding_residual(x);
  if (!(res <= tol)) {
    std::ostringstream msg;
    msg << "point is off " << name() << " (residual " << res << ")";
    throw DomainError(msg.str());
  }
}

Point Manifold::project(const Point& x) const {
  return std::visit(Overloaded{[&](const SphereShape& s) {
                                 Point y{};
                                 for (int i = 0; i <= s.d; ++i) y[i] = x[i];
                                 const double r = norm(y);
                                 if (r == 0.0) throw DomainError("cannot project the origin onto a sphere");
                                 return (s.radius / r) * y;
                               },
                               [&](const TorusShape& t) {
                                 const auto a = torus_angles(x);
                                 (void)t;
                                 return torus_point(a[0], a[1]);
                               }},
                    shape_);
}

std::array<double, 2> Manifold::torus_angles(const Point& x) const {
  return {std::atan2(x[1], x[0]), std::atan2(x[3], x[2])};
}

Point Manifold::torus_point(double theta1, double theta2) const {
  const auto* t = std::get_if<TorusShape>(&shape_);
  if (!t) throw DomainError("torus_point called on a sphere");
  return {t->r1 * std::cos(theta1), t->r1 * std::sin(theta1), t->r2 * std::cos(theta2),
          t->r2 * std::sin(theta2)};
}

double Manifold::geodesic_distance(const Point& x, const Point& y) const {
  require_on_manifold(x);
  require_on_manifold(y);
  return std::visit(Overloaded{[&](const SphereShape& s) {
                                 // Equal to R * arccos(<x,y>/R^2) but stable near 0 and pi.
                                 const double angle = 2.0 * std::atan2(norm(x - y), norm(x + y));
                                 return s.radius * angle;
                               },
                               [&](const TorusShape& t) {
                                 const auto a = torus_angles(x);
                                 const auto b = torus_angles(y);
                                 const double w1 = std::abs(std::remainder(b[0] - a[0], 2.0 * kPi));
                                 const double w2 = std::abs(std::remainder(b[1] - a[1], 2.0 * kPi));
                                 return std::hypot(t.r1 * w1, t.r2 * w2);
                               }},
                    shape_);
}

Frame Manifold::tangent_frame(const Point& x) const {
  return std::visit(
      Overloaded{[&](const SphereShape& s) {
                   const int m = s.d + 1;
                   const Point n = (1.0 / norm(x)) * x;
                   // Canonical axes, least aligned with the normal first.
                   std::array<int, kMaxAmbient> order{};
                   std::iota(order.begin(), order.begin() + m, 0);
                   std::stable_sort(order.begin(), order.begin() + m,
                                    [&](int a, int b) { return std::abs(n[a]) < std::abs(n[b]); });
                   Frame f;
                   for (int k = 0; k < m && f.dim < s.d; ++k) {
                     Point e{};
                     e[order[k]] = 1.0;
                     if (std::abs(n[order[k]]) > 0.9) continue;
                     e = e - dot(e, n) * n;
                     for (int j = 0; j < f.dim; ++j) e = e - dot(e, f.e[j]) * f.e[j];
                     const double len = norm(e);
                     if (len < 1e-3) continue;
                     f.e[f.dim++] = (1.0 / len) * e;
                   }
                   return f;
                 },
                 [&](const TorusShape&) {
                   Frame f;
                   f.dim = 2;
                   f.e[0] = factor_tangent(x, 0);
                   f.e[1] = factor_tangent(x, 1);
                   return f;
                 }},
      shape_);
}

NormalSpace Manifold::normal_space(const Point& x) const {
  NormalSpace ns;
  if (is_sphere()) {
    ns.count = 1;
    ns.n[0] = (1.0 / norm(x)) * x;
  } else {
    ns.count = 2;
    ns.n[0] = factor_radial(x, 0);
    ns.n[1] = factor_radial(x, 1);
  }
  return ns;
}

Point Manifold::tangent_projection(const Point& x, const Point& g) const {
  const NormalSpace ns = normal_space(x);
  Point out = g;
  for (int i = 0; i < ns.count; ++i) out = out - dot(g, ns.n[i]) * ns.n[i];
  return out;
}

Point Manifold::exp_map(const Point& x, const Local& v) const {
  if (!(local_norm(v) < injectivity_bound()))
    throw DomainError("exp_map: tangent vector outside the normal-coordinate ball");
  return exp_map_unbounded(x, v);
}

Point Manifold::exp_map_unbounded(const Point& x, const Local& v) const {
  return std::visit(Overloaded{[&](const SphereShape& s) {
                                 const double r = local_norm(v);
                                 if (r == 0.0) return x;
                                 const Frame f = tangent_frame(x);
                                 const Point u = f.embed(v);
                                 const double t = r / s.radius;
                                 return std::cos(t) * x + (s.radius * std::sin(t) / r) * u;
                               },
                               [&](const TorusShape& t) {
                                 const auto a = torus_angles(x);
                                 return torus_point(a[0] + v[0] / t.r1, a[1] + v[1] / t.r2);
                               }},
                    shape_);
}

Ray Manifold::ray(const Point& x, const Frame& frame, const Local& u) const {
  Ray out;
  out.origin = x;
  out.tangent = frame.embed(u);
  out.u = u;
  if (!is_sphere()) out.angles = torus_angles(x);
  return out;
}

Point Manifold::ray_point(const Ray& ray, double t) const {
  return std::visit(Overloaded{[&](const SphereShape& s) {
                                 const double a = t / s.radius;
                                 return std::cos(a) * ray.origin + (s.radius * std::sin(a)) * ray.tangent;
                               },
                               [&](const TorusShape& tor) {
                                 return torus_point(ray.angles[0] + t * ray.u[0] / tor.r1,
                                                    ray.angles[1] + t * ray.u[1] / tor.r2);
                               }},
                    shape_);
}

std::array<Point, kMaxIntrinsic> Manifold::exp_map_differential(const Point& x, const Local& v) const {
  std::array<Point, kMaxIntrinsic> cols{};
  const Frame f = tangent_frame(x);
  std::visit(Overloaded{[&](const SphereShape& s) {
                          const double r = local_norm(v);
                          if (r == 0.0) {
                            for (int j = 0; j < s.d; ++j) cols[j] = f.e[j];
                            return;
                          }
                          const double t = r / s.radius;
                          const Point w = (1.0 / r) * f.embed(v);
                          const double stretch = s.radius * std::sin(t) / r;
                          const Point radial = (-std::sin(t) / s.radius) * x + (std::cos(t) - stretch) * w;
                          for (int j = 0; j < s.d; ++j) cols[j] = (v[j] / r) * radial + stretch * f.e[j];
                        },
                        [&](const TorusShape& t) {
                          const auto a = torus_angles(x);
                          const Point y = torus_point(a[0] + v[0] / t.r1, a[1] + v[1] / t.r2);
                          cols[0] = factor_tangent(y, 0);
                          cols[1] = factor_tangent(y, 1);
                        }},
             shape_);
  return cols;
}

Point Manifold::exp_map_second_derivative(const Point& x, const Local& v) const {
  return std::visit(Overloaded{[&](const SphereShape& s) {
                                 const double r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                                 return (-r2 / (s.radius * s.radius)) * x;
                               },
                               [&](const TorusShape& t) {
                                 return (-v[0] * v[0] / t.r1) * factor_radial(x, 0) +
                                        (-v[1] * v[1] / t.r2) * factor_radial(x, 1);
                               }},
                    shape_);
}

Point Manifold::mean_curvature(const Point& x) const {
  Point h{};
  const int d = dim();
  for (int i = 0; i < d; ++i) {
    Local e{};
    e[i] = 1.0;
    h = h + exp_map_second_derivative(x, e);
  }
  return h;
}

double Manifold::metric_det_normal(double r) const {
  if (!(r >= 0.0) || !(r < injectivity_bound()))
    throw DomainError("metric_det_normal: radius outside [0, c1)");
  return std::visit(Overloaded{[&](const SphereShape& s) {
                                 if (r == 0.0) return 1.0;
                                 const double t = r / s.radius;
                                 return std::pow(std::sin(t) / t, s.d - 1);
                               },
                               [](const TorusShape&) { return 1.0; }},
                    shape_);
}

Point Manifold::sample_uniform(Rng& rng) const {
  return std::visit(Overloaded{[&](const SphereShape& s) {
                                 Point g{};
                                 double len = 0.0;
                                 do {
                                   for (int i = 0; i <= s.d; ++i) g[i] = rng.normal();
                                   len = norm(g);
                                 } while (len < 1e-12);
                                 return (s.radius / len) * g;
                               },
                               [&](const TorusShape&) {
                                 const double a = 2.0 * kPi * rng.uniform();
                                 const double b = 2.0 * kPi * rng.uniform();
                                 return torus_point(a, b);
                               }},
                    shape_);
}

} // namespace lapconv
