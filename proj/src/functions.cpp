#include "lapconv/functions.hpp"

#include "lapconv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace lapconv {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double sphere_radius(const Manifold& m) { return std::get<SphereShape>(m.shape()).radius; }

// Gradient and Hessian of theta = atan2(x[2i+1], x[2i]) in R^4.
void angle_derivatives(const Point& x, int factor, Point& grad, AmbientMatrix& hess) {
  const int a = 2 * factor;
  const int b = a + 1;
  const double rho2 = x[a] * x[a] + x[b] * x[b];
  const double rho4 = rho2 * rho2;
  grad = {};
  hess = {};
  grad[a] = -x[b] / rho2;
  grad[b] = x[a] / rho2;
  hess[a][a] = 2.0 * x[a] * x[b] / rho4;
  hess[b][b] = -hess[a][a];
  hess[a][b] = hess[b][a] = (x[b] * x[b] - x[a] * x[a]) / rho4;
}

} // namespace

TestFunction TestFunction::constant(const Manifold& m, double value) { return {m, Constant{value}}; }

TestFunction TestFunction::linear(const Manifold& m, const Point& a) {
  for (int i = m.ambient_dim(); i < static_cast<int>(kMaxAmbient); ++i)
    if (a[i] != 0.0) throw DomainError("linear test function has coefficients past the ambient dimension");
  return {m, Linear{a}};
}

TestFunction TestFunction::coordinate(const Manifold& m, int axis) {
  if (axis < 0 || axis >= m.ambient_dim()) throw DomainError("coordinate axis out of range");
  Point a{};
  a[axis] = 1.0;
  return linear(m, a);
}

TestFunction TestFunction::coordinate_product(const Manifold& m, std::vector<int> indices) {
  if (!m.is_sphere()) throw DomainError("coordinate products are harmonic only on spheres");
  if (indices.empty()) throw DomainError("coordinate product needs at least one index");
  std::set<int> seen;
  for (int k : indices) {
    if (k < 0 || k >= m.ambient_dim()) throw DomainError("coordinate product index out of range");
    if (!seen.insert(k).second) throw DomainError("coordinate product indices must be distinct");
  }
  return {m, CoordinateProduct{std::move(indices)}};
}

TestFunction TestFunction::sphere_harmonic(const Manifold& m, int degree) {
  if (degree < 1 || degree > m.ambient_dim()) throw DomainError("harmonic degree out of range");
  std::vector<int> idx(static_cast<std::size_t>(degree));
  for (int i = 0; i < degree; ++i) idx[i] = i;
  return coordinate_product(m, std::move(idx));
}

TestFunction TestFunction::torus_wave(const Manifold& m, int k1, int k2) {
  if (m.is_sphere()) throw DomainError("torus waves are defined on the torus only");
  return {m, TorusWave{k1, k2}};
}

double TestFunction::operator()(const Point& x) const {
  return std::visit(Overloaded{[](const Constant& c) { return c.value; },
                               [&](const Linear& l) { return dot(l.a, x); },
                               [&](const CoordinateProduct& p) {
                                 const double r = sphere_radius(manifold_);
                                 double v = 1.0;
                                 for (int k : p.indices) v *= x[k] / r;
                                 return v;
                               },
                               [&](const TorusWave& w) {
                                 const auto a = manifold_.torus_angles(x);
                                 return std::cos(w.k1 * a[0] + w.k2 * a[1]);
                               }},
                    family_);
}

Point TestFunction::grad_ambient(const Point& x) const {
  return std::visit(Overloaded{[](const Constant&) { return Point{}; },
                               [](const Linear& l) { return l.a; },
                               [&](const CoordinateProduct& p) {
                                 const double r = sphere_radius(manifold_);
                                 Point g{};
                                 for (int j : p.indices) {
                                   double v = 1.0 / r;
                                   for (int k : p.indices)
                                     if (k != j) v *= x[k] / r;
                                   g[j] = v;
                                 }
                                 return g;
                               },
                               [&](const TorusWave& w) {
                                 const auto a = manifold_.torus_angles(x);
                                 Point g1, g2;
                                 AmbientMatrix h1, h2;
                                 angle_derivatives(x, 0, g1, h1);
                                 angle_derivatives(x, 1, g2, h2);
                                 const double s = std::sin(w.k1 * a[0] + w.k2 * a[1]);
                                 return (-s) * (static_cast<double>(w.k1) * g1 + static_cast<double>(w.k2) * g2);
                               }},
                    family_);
}

AmbientMatrix TestFunction::hess_ambient(const Point& x) const {
  AmbientMatrix h{};
  std::visit(Overloaded{[](const Constant&) {}, [](const Linear&) {},
                        [&](const CoordinateProduct& p) {
                          const double r = sphere_radius(manifold_);
                          for (int i : p.indices)
                            for (int j : p.indices) {
                              if (i == j) continue;
                              double v = 1.0 / (r * r);
                              for (int k : p.indices)
                                if (k != i && k != j) v *= x[k] / r;
                              h[i][j] = v;
                            }
                        },
                        [&](const TorusWave& w) {
                          const auto a = manifold_.torus_angles(x);
                          Point g1, g2;
                          AmbientMatrix h1, h2;
                          angle_derivatives(x, 0, g1, h1);
                          angle_derivatives(x, 1, g2, h2);
                          const double phi = w.k1 * a[0] + w.k2 * a[1];
                          const Point gphi = static_cast<double>(w.k1) * g1 + static_cast<double>(w.k2) * g2;
                          for (std::size_t i = 0; i < kMaxAmbient; ++i)
                            for (std::size_t j = 0; j < kMaxAmbient; ++j)
                              h[i][j] = -std::cos(phi) * gphi[i] * gphi[j] -
                                        std::sin(phi) * (w.k1 * h1[i][j] + w.k2 * h2[i][j]);
                        }},
             family_);
  return h;
}

Point TestFunction::grad_manifold(const Point& x) const {
  return std::visit(Overloaded{[](const Constant&) { return Point{}; },
                               [&](const TorusWave& w) {
                                 const auto t = std::get<TorusShape>(manifold_.shape());
                                 const auto a = manifold_.torus_angles(x);
                                 const Frame f = manifold_.tangent_frame(x);
                                 const double s = std::sin(w.k1 * a[0] + w.k2 * a[1]);
                                 return (-s) * ((w.k1 / t.r1) * f.e[0] + (w.k2 / t.r2) * f.e[1]);
                               },
                               [&](const auto&) { return manifold_.tangent_projection(x, grad_ambient(x)); }},
                    family_);
}

double TestFunction::laplace_beltrami(const Point& x) const {
  return std::visit(
      Overloaded{[](const Constant&) { return 0.0; },
                 [&](const Linear& l) {
                   return std::visit(Overloaded{[&](const SphereShape& s) {
                                                  return -s.d * dot(l.a, x) / (s.radius * s.radius);
                                                },
                                                [&](const TorusShape& t) {
                                                  const double f1 = l.a[0] * x[0] + l.a[1] * x[1];
                                                  const double f2 = l.a[2] * x[2] + l.a[3] * x[3];
                                                  return -f1 / (t.r1 * t.r1) - f2 / (t.r2 * t.r2);
                                                }},
                                     manifold_.shape());
                 },
                 [&](const CoordinateProduct& p) {
                   const auto s = std::get<SphereShape>(manifold_.shape());
                   const double l = static_cast<double>(p.indices.size());
                   return -l * (l + s.d - 1.0) * (*this)(x) / (s.radius * s.radius);
                 },
                 [&](const TorusWave& w) {
                   const auto t = std::get<TorusShape>(manifold_.shape());
                   const double lambda = w.k1 * w.k1 / (t.r1 * t.r1) + w.k2 * w.k2 / (t.r2 * t.r2);
                   return -lambda * (*this)(x);
                 }},
      family_);
}

double TestFunction::sup_bound() const {
  return std::visit(Overloaded{[](const Constant& c) { return std::abs(c.value); },
                               [&](const Linear& l) {
                                 return std::visit(
                                     Overloaded{[&](const SphereShape& s) { return norm(l.a) * s.radius; },
                                                [&](const TorusShape& t) {
                                                  return std::hypot(l.a[0], l.a[1]) * t.r1 +
                                                         std::hypot(l.a[2], l.a[3]) * t.r2;
                                                }},
                                     manifold_.shape());
                               },
                               [](const CoordinateProduct&) { return 1.0; },
                               [](const TorusWave&) { return 1.0; }},
                    family_);
}

double TestFunction::third_derivative_bound() const {
  return std::visit(Overloaded{[](const Constant&) { return 0.0; }, [](const Linear&) { return 0.0; },
                               [&](const CoordinateProduct& p) {
                                 const double l = static_cast<double>(p.indices.size());
                                 const double r = sphere_radius(manifold_);
                                 return std::max(0.0, l * (l - 1.0) * (l - 2.0)) / (r * r * r);
                               },
                               [&](const TorusWave& w) {
                                 const auto t = std::get<TorusShape>(manifold_.shape());
                                 return std::pow(std::abs(w.k1) / t.r1 + std::abs(w.k2) / t.r2, 3);
                               }},
                    family_);
}

std::string TestFunction::id() const {
  std::ostringstream out;
  std::visit(Overloaded{[&](const Constant& c) { out << "constant(" << c.value << ")"; },
                        [&](const Linear& l) {
                          out << "linear(";
                          for (int i = 0; i < manifold_.ambient_dim(); ++i) out << (i ? ";" : "") << l.a[i];
                          out << ")";
                        },
                        [&](const CoordinateProduct& p) {
                          out << "product(";
                          for (std::size_t i = 0; i < p.indices.size(); ++i) out << (i ? ";" : "") << p.indices[i];
                          out << ")";
                        },
                        [&](const TorusWave& w) { out << "wave(" << w.k1 << ";" << w.k2 << ")"; }},
             family_);
  return out.str();
}

Density Density::uniform(const Manifold& m) {
  Density p;
  p.id_ = "uniform";
  p.unnormalized_ = [](const Point&) { return 1.0; };
  p.grad_ = [](const Point&) { return Point{}; };
  p.normalizer_ = 1.0 / m.volume();
  p.q_max_ = 1.0;
  p.q_min_ = 1.0;
  p.uniform_ = true;
  return p;
}

Density Density::tilted(const Manifold& m, double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("tilt beta must lie in [0, 1)");
  const double scale = m.radii().front();
  Density p;
  std::ostringstream id;
  id << "tilted(" << beta << ")";
  p.id_ = id.str();
  p.unnormalized_ = [beta, scale](const Point& x) { return 1.0 + beta * x[0] / scale; };
  p.grad_ = [m, beta, scale](const Point& x) {
    Point e{};
    e[0] = beta / scale;
    return m.tangent_projection(x, e);
  };
  p.normalizer_ = 1.0 / m.volume();
  p.q_max_ = 1.0 + beta;
  p.q_min_ = 1.0 - beta;
  p.uniform_ = beta == 0.0;
  return p;
}

Density Density::custom(std::string id, std::function<double(const Point&)> unnormalized,
                        std::function<Point(const Point&)> grad_manifold_unnormalized, double normalizer,
                        std::optional<double> unnormalized_max, std::optional<double> unnormalized_min) {
  if (!(normalizer > 0.0)) throw DomainError("density normalizer must be positive");
  Density p;
  p.id_ = std::move(id);
  p.unnormalized_ = std::move(unnormalized);
  p.grad_ = std::move(grad_manifold_unnormalized);
  p.normalizer_ = normalizer;
  p.q_max_ = unnormalized_max;
  p.q_min_ = unnormalized_min;
  return p;
}

std::optional<double> Density::p_min() const {
  if (!q_min_) return std::nullopt;
  return normalizer_ * *q_min_;
}

std::optional<double> Density::p_max() const {
  if (!q_max_) return std::nullopt;
  return normalizer_ * *q_max_;
}

double limit_operator(const Density& p, const TestFunction& f, double c0_value, const Point& x) {
  if (f.is_constant()) return 0.0;
  return c0_value * (dot(p.grad_manifold(x), f.grad_manifold(x)) + 0.5 * p(x) * f.laplace_beltrami(x));
}

double limit_operator(const Manifold& m, const Density& p, const TestFunction& f, const Kernel& kernel,
                      const Point& x) {
  m.require_on_manifold(x);
  return limit_operator(p, f, c0(kernel, m.dim()), x);
}

Point manifold_grad(const Manifold& m, const Point& x, const Point& ambient_gradient) {
  m.require_on_manifold(x);
  return m.tangent_projection(x, ambient_gradient);
}

Point manifold_grad(const Manifold& m, const TestFunction& f, const Point& x) {
  return manifold_grad(m, x, f.grad_ambient(x));
}

double manifold_laplacian(const Manifold& m, const TestFunction& f, const Point& x) {
  m.require_on_manifold(x);
  return f.laplace_beltrami(x);
}

double manifold_laplacian_from_ambient(const Manifold& m, const TestFunction& f, const Point& x) {
  m.require_on_manifold(x);
  const Frame frame = m.tangent_frame(x);
  const AmbientMatrix h = f.hess_ambient(x);
  double s = dot(f.grad_ambient(x), m.mean_curvature(x));
  for (int i = 0; i < frame.dim; ++i) s += quadratic_form(h, frame.e[i], frame.e[i]);
  return s;
}

} // namespace lapconv
