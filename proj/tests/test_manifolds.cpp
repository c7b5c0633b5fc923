#include "doctest.h"

#include "lapconv/errors.hpp"
#include "lapconv/functions.hpp"
#include "lapconv/rng.hpp"

#include <cmath>
#include <numbers>

using namespace lapconv;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Manifold> catalog() {
  return {Manifold::circle(), Manifold::sphere(2), Manifold::sphere(3), Manifold::flat_torus(1.0, 0.6),
          Manifold::sphere(2, 1.7)};
}

Local random_local(Rng& rng, int d, double max_norm) {
  Local v{};
  double n2 = 0.0;
  for (int i = 0; i < d; ++i) {
    v[i] = rng.normal();
    n2 += v[i] * v[i];
  }
  const double scale = max_norm * rng.uniform() / std::sqrt(n2);
  for (int i = 0; i < d; ++i) v[i] *= scale;
  return v;
}

// Central-difference gradient and Laplacian of f o E_x at 0 (test-side oracle).
template <class F>
Local pullback_gradient(const Manifold& m, const Point& x, F f, double step = 1e-5) {
  Local g{};
  for (int i = 0; i < m.dim(); ++i) {
    Local v{};
    v[i] = step;
    const double fp = f(m.exp_map(x, v));
    v[i] = -step;
    const double fm = f(m.exp_map(x, v));
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

template <class F>
double pullback_laplacian(const Manifold& m, const Point& x, F f, double step = 1e-4) {
  double lap = 0.0;
  const double f0 = f(x);
  for (int i = 0; i < m.dim(); ++i) {
    Local v{};
    v[i] = step;
    const double fp = f(m.exp_map(x, v));
    v[i] = -step;
    const double fm = f(m.exp_map(x, v));
    lap += (fp - 2.0 * f0 + fm) / (step * step);
  }
  return lap;
}

std::vector<TestFunction> functions_for(const Manifold& m) {
  std::vector<TestFunction> out{TestFunction::constant(m, 2.5), TestFunction::coordinate(m, 0)};
  Point a{};
  for (int i = 0; i < m.ambient_dim(); ++i) a[i] = 0.3 * (i + 1) - 0.4;
  out.push_back(TestFunction::linear(m, a));
  if (m.is_sphere()) {
    for (int l = 2; l <= m.ambient_dim() && l <= 3; ++l) out.push_back(TestFunction::sphere_harmonic(m, l));
  } else {
    out.push_back(TestFunction::torus_wave(m, 1, 0));
    out.push_back(TestFunction::torus_wave(m, 2, -1));
  }
  return out;
}

} // namespace

TEST_CASE("chord_distance") {
  CHECK(chord_distance({0, 0, 1, 0}, {0, 0, -1, 0}) == 2.0);
  CHECK(chord_distance({0.6, 0.8, 0, 0}, {0.6, 0.8, 0, 0}) == 0.0);
  CHECK(chord_distance({0, 0, 1, 0}, {1, 0, 0, 0}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("geodesic_distance") {
  const Manifold s2 = Manifold::sphere(2);
  CHECK(s2.geodesic_distance({0, 0, 1, 0}, {0, 0, -1, 0}) == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(s2.geodesic_distance({0, 0, 1, 0}, {0, 0, 1, 0}) == 0.0);
  const double ell = std::sqrt(2.0);
  CHECK(2.0 * std::asin(ell / 2.0) == doctest::Approx(kPi / 2.0).epsilon(1e-15));
  CHECK(s2.geodesic_distance({0, 0, 1, 0}, {1, 0, 0, 0}) == doctest::Approx(kPi / 2.0).epsilon(1e-15));
  CHECK_THROWS_AS(s2.geodesic_distance({0, 0, 1.1, 0}, {1, 0, 0, 0}), DomainError);

  // Torus across the cut: angles 3 and -3 are 2 pi - 6 apart.
  const Manifold t = Manifold::flat_torus(1.0, 2.0);
  const Point a = t.torus_point(3.0, 0.0);
  const Point b = t.torus_point(-3.0, 0.0);
  CHECK(t.geodesic_distance(a, b) == doctest::Approx(2.0 * kPi - 6.0).epsilon(1e-12));
  const Point c = t.torus_point(0.0, 1.0);
  const Point e = t.torus_point(0.5, 2.0);
  CHECK(t.geodesic_distance(c, e) == doctest::Approx(std::hypot(0.5, 2.0)).epsilon(1e-12));
}

TEST_CASE("exp_map") {
  const Manifold s2 = Manifold::sphere(2);
  const Point north{0, 0, 1, 0};
  CHECK(s2.exp_map(north, {}) == north);
  const Point eq = s2.exp_map(north, {kPi / 2.0, 0, 0});
  CHECK(eq[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(eq[1]) < 1e-15);
  CHECK(std::abs(eq[2]) < 1e-15);
  CHECK_THROWS_AS(s2.exp_map(north, {3.0, 0, 0}), DomainError);

  Rng rng(11);
  for (const Manifold& m : catalog()) {
    INFO(m.name());
    for (int trial = 0; trial < 100; ++trial) {
      const Point x = m.sample_uniform(rng);
      const Local v = random_local(rng, m.dim(), 0.99 * m.injectivity_bound());
      const Point y = m.exp_map(x, v);
      CHECK(m.embedding_residual(y) <= 1e-12);
      CHECK(m.geodesic_distance(x, y) == doctest::Approx(local_norm(v)).epsilon(1e-9));
    }
  }
}

TEST_CASE("tangent_frame") {
  const Manifold s2 = Manifold::sphere(2);
  const Frame f = s2.tangent_frame({0, 0, 1, 0});
  REQUIRE(f.dim == 2);
  CHECK(f.e[0] == Point{1, 0, 0, 0});
  CHECK(f.e[1] == Point{0, 1, 0, 0});

  Rng rng(3);
  for (const Manifold& m : catalog()) {
    INFO(m.name());
    for (int trial = 0; trial < 100; ++trial) {
      const Point x = m.sample_uniform(rng);
      const Frame fr = m.tangent_frame(x);
      REQUIRE(fr.dim == m.dim());
      for (int i = 0; i < fr.dim; ++i) {
        for (int j = 0; j < fr.dim; ++j)
          CHECK(std::abs(dot(fr.e[i], fr.e[j]) - (i == j ? 1.0 : 0.0)) <= 1e-12);
        const NormalSpace ns = m.normal_space(x);
        for (int k = 0; k < ns.count; ++k) CHECK(std::abs(dot(fr.e[i], ns.n[k])) <= 1e-12);
      }
      const Frame again = m.tangent_frame(x);
      CHECK(again.e == fr.e);
    }
  }
}

TEST_CASE("metric_det_normal") {
  const Manifold s2 = Manifold::sphere(2);
  CHECK(s2.metric_det_normal(0.0) == 1.0);
  CHECK(Manifold::flat_torus().metric_det_normal(1.3) == 1.0);
  CHECK(s2.metric_det_normal(0.3) == doctest::Approx(std::sin(0.3) / 0.3).epsilon(1e-15));
  CHECK(s2.metric_det_normal(0.3) == doctest::Approx(0.985067).epsilon(1e-6));
  CHECK_THROWS_AS(s2.metric_det_normal(3.0), DomainError);

  // Closed form against sqrt(det J^T J) with J from central differences of exp_map.
  Rng rng(5);
  for (const Manifold& m : catalog()) {
    INFO(m.name());
    for (int trial = 0; trial < 30; ++trial) {
      const Point x = m.sample_uniform(rng);
      const Local v = random_local(rng, m.dim(), 0.8 * m.injectivity_bound());
      const int d = m.dim();
      double g[3][3] = {};
      std::array<Point, 3> cols{};
      const double step = 1e-6;
      for (int i = 0; i < d; ++i) {
        Local vp = v, vm = v;
        vp[i] += step;
        vm[i] -= step;
        cols[i] = (1.0 / (2.0 * step)) * (m.exp_map(x, vp) - m.exp_map(x, vm));
      }
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g[i][j] = dot(cols[i], cols[j]);
      double det = g[0][0];
      if (d == 2) det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
      if (d == 3)
        det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
              g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
      CHECK(m.metric_det_normal(local_norm(v)) == doctest::Approx(std::sqrt(det)).epsilon(1e-7));

      // Analytic differential agrees with the finite-difference columns.
      const auto an = m.exp_map_differential(x, v);
      for (int i = 0; i < d; ++i) CHECK(norm(an[i] - cols[i]) <= 1e-7);
    }
  }
}

TEST_CASE("limit_operator") {
  const Manifold s2 = Manifold::sphere(2);
  const Density unif = Density::uniform(s2);
  const Kernel ind = Kernel::indicator();
  const Point x = s2.project({0.3, -0.5, 0.8, 0});
  CHECK(limit_operator(s2, unif, TestFunction::constant(s2, 3.0), ind, x) == 0.0);
  CHECK(limit_operator(s2, unif, TestFunction::coordinate(s2, 0), ind, x) ==
        doctest::Approx(-x[0] / 16.0).epsilon(1e-14));

  const Manifold t = Manifold::flat_torus(1.0, 0.5);
  const Density tu = Density::uniform(t);
  const Point y = t.torus_point(0.7, -1.2);
  const double p = 1.0 / (4.0 * kPi * kPi * 0.5);
  const double expected = c0(ind, 2) * 0.5 * p * (-std::cos(0.7));
  CHECK(limit_operator(t, tu, TestFunction::coordinate(t, 0), ind, y) == doctest::Approx(expected).epsilon(1e-14));

  // Drift term with the tilted density: <grad p, grad f> for f = x^1 on S^2.
  const Density tilt = Density::tilted(s2, 0.5);
  const double gp_gf = 0.5 / (4.0 * kPi) * (1.0 - x[0] * x[0]);
  const double lap = -2.0 * x[0];
  CHECK(limit_operator(s2, tilt, TestFunction::coordinate(s2, 0), ind, x) ==
        doctest::Approx(kPi / 4.0 * (gp_gf + 0.5 * tilt(x) * lap)).epsilon(1e-13));
}

TEST_CASE("manifold_grad") {
  const Manifold s2 = Manifold::sphere(2);
  const Point north{0, 0, 1, 0};
  const Point g1 = manifold_grad(s2, TestFunction::coordinate(s2, 0), north);
  CHECK(g1 == Point{1, 0, 0, 0});
  const Point g3 = manifold_grad(s2, TestFunction::coordinate(s2, 2), north);
  CHECK(norm(g3) == 0.0);

  // Directional derivative along exp_map.
  Rng rng(17);
  for (const Manifold& m : catalog()) {
    for (const TestFunction& f : functions_for(m)) {
      INFO(m.name(), " ", f.id());
      for (int trial = 0; trial < 20; ++trial) {
        const Point x = m.sample_uniform(rng);
        const Frame fr = m.tangent_frame(x);
        const Local fd = pullback_gradient(m, x, [&](const Point& y) { return f(y); });
        const Point grad = manifold_grad(m, f, x);
        const Point grad_closed = f.grad_manifold(x);
        for (int i = 0; i < m.dim(); ++i) {
          CHECK(std::abs(dot(grad, fr.e[i]) - fd[i]) <= 1e-6);
          CHECK(std::abs(dot(grad_closed, fr.e[i]) - fd[i]) <= 1e-6);
        }
        const NormalSpace ns = m.normal_space(x);
        for (int k = 0; k < ns.count; ++k) CHECK(std::abs(dot(grad_closed, ns.n[k])) <= 1e-10);
      }
    }
  }
}

TEST_CASE("manifold_laplacian") {
  const Manifold s2 = Manifold::sphere(2);
  const Point x = s2.project({0.2, 0.4, -0.7, 0});
  CHECK(manifold_laplacian(s2, TestFunction::coordinate(s2, 0), x) == doctest::Approx(-2.0 * x[0]).epsilon(1e-14));
  const Manifold t = Manifold::flat_torus();
  const Point y = t.torus_point(1.1, 0.3);
  CHECK(manifold_laplacian(t, TestFunction::coordinate(t, 0), y) == doctest::Approx(-std::cos(1.1)).epsilon(1e-14));
  CHECK(manifold_laplacian(t, TestFunction::constant(t, 1.0), y) == 0.0);

  // Closed form vs ambient route vs flat Laplacian of the pullback.
  Rng rng(23);
  for (const Manifold& m : catalog()) {
    for (const TestFunction& f : functions_for(m)) {
      INFO(m.name(), " ", f.id());
      for (int trial = 0; trial < 20; ++trial) {
        const Point p = m.sample_uniform(rng);
        const double closed = manifold_laplacian(m, f, p);
        CHECK(std::abs(manifold_laplacian_from_ambient(m, f, p) - closed) <= 1e-10);
        CHECK(std::abs(pullback_laplacian(m, p, [&](const Point& q) { return f(q); }) - closed) <= 1e-5);
      }
    }
  }
}

TEST_CASE("sphere harmonics are eigenfunctions") {
  Rng rng(29);
  for (const Manifold& m : {Manifold::sphere(2), Manifold::sphere(3, 2.0), Manifold::circle(0.5)}) {
    const auto s = std::get<SphereShape>(m.shape());
    for (int l = 1; l <= std::min(3, m.ambient_dim()); ++l) {
      const TestFunction f = TestFunction::sphere_harmonic(m, l);
      for (int trial = 0; trial < 50; ++trial) {
        const Point x = m.sample_uniform(rng);
        const double expected = -l * (l + s.d - 1.0) * f(x) / (s.radius * s.radius);
        CHECK(std::abs(manifold_laplacian_from_ambient(m, f, x) - expected) <= 1e-10);
      }
    }
  }
}

TEST_CASE("densities: bounds and normalization") {
  Rng rng(31);
  for (const Manifold& m : {Manifold::sphere(2), Manifold::flat_torus(1.0, 0.7), Manifold::circle(2.0)}) {
    for (const Density& p : {Density::uniform(m), Density::tilted(m, 0.5)}) {
      INFO(m.name(), " ", p.id());
      bool within = true;
      for (int i = 0; i < 10000; ++i) {
        const Point x = m.sample_uniform(rng);
        const double v = p(x);
        if (v < *p.p_min() - 1e-15 || v > *p.p_max() + 1e-15) within = false;
      }
      CHECK(within);

      // Product quadrature of p over M.
      double integral = 0.0;
      std::visit(
          [&](const auto& shape) {
            using S = std::decay_t<decltype(shape)>;
            if constexpr (std::is_same_v<S, SphereShape>) {
              const double r = shape.radius;
              if (shape.d == 1) {
                const int n = 400;
                for (int k = 0; k < n; ++k) {
                  const double a = 2.0 * kPi * (k + 0.5) / n;
                  integral += p({r * std::cos(a), r * std::sin(a), 0, 0}) * 2.0 * kPi * r / n;
                }
              } else {
                // z uniform in [-r, r] (Archimedes) times azimuth.
                const int nz = 400, na = 400;
                for (int i = 0; i < nz; ++i)
                  for (int k = 0; k < na; ++k) {
                    const double z = -r + 2.0 * r * (i + 0.5) / nz;
                    const double rho = std::sqrt(r * r - z * z);
                    const double a = 2.0 * kPi * (k + 0.5) / na;
                    integral += p({rho * std::cos(a), rho * std::sin(a), z, 0}) * (2.0 * r / nz) * (2.0 * kPi * r / na);
                  }
              }
            } else {
              const int n = 200;
              for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k) {
                  const Point x = m.torus_point(2.0 * kPi * (i + 0.5) / n, 2.0 * kPi * (k + 0.5) / n);
                  integral += p(x) * (2.0 * kPi * shape.r1 / n) * (2.0 * kPi * shape.r2 / n);
                }
            }
          },
          m.shape());
      CHECK(std::abs(integral - 1.0) <= 1e-6);
    }
  }
  CHECK_THROWS_AS(Density::tilted(Manifold::sphere(2), 1.0), DomainError);
}

TEST_CASE("chord versus geodesic distance") {
  Rng rng(37);
  for (const Manifold& m : catalog()) {
    for (int i = 0; i < 2000; ++i) {
      const Point x = m.sample_uniform(rng);
      const Point y = m.sample_uniform(rng);
      CHECK(chord_distance(x, y) <= m.geodesic_distance(x, y) + 1e-15);
    }
  }
  const Manifold s2 = Manifold::sphere(2);
  for (int i = 0; i < 2000; ++i) {
    const Point x = s2.sample_uniform(rng);
    const double rho = 0.01 + 0.99 * rng.uniform();
    const double phi = 2.0 * kPi * rng.uniform();
    const Point y = s2.exp_map(x, {rho * std::cos(phi), rho * std::sin(phi), 0});
    const double ell = chord_distance(x, y);
    const double ratio = (s2.geodesic_distance(x, y) - ell) / (ell * ell * ell);
    CHECK(ratio > 0.0);
    CHECK(ratio <= 0.05);
  }
  // Small-angle limit: theta - 2 sin(theta/2) ~ theta^3 / 24.
  const Point x{0, 0, 1, 0};
  const Point y = s2.exp_map(x, {0.01, 0, 0});
  const double ell = chord_distance(x, y);
  const double ratio = (s2.geodesic_distance(x, y) - ell) / (ell * ell * ell);
  CHECK(std::abs(ratio - 1.0 / 24.0) <= 0.05 / 24.0);
}

TEST_CASE("chart deviation bounds") {
  Rng rng(41);
  for (const Manifold& m : catalog()) {
    INFO(m.name());
    const double c2 = m.chart_constant();
    for (int i = 0; i < 500; ++i) {
      const Point x = m.sample_uniform(rng);
      const Local v = random_local(rng, m.dim(), 0.999 * m.injectivity_bound());
      const double r = local_norm(v);
      const Point y = m.exp_map(x, v);
      const Point lin = m.tangent_frame(x).embed(v);
      CHECK(norm(y - x) <= r * (1.0 + 1e-12));
      CHECK(norm(y - x - lin) <= c2 * r * r * (1.0 + 1e-12));
      const Point quad = 0.5 * m.exp_map_second_derivative(x, v);
      CHECK(norm(y - x - lin - quad) <= c2 * r * r * r * (1.0 + 1e-12) + 1e-14);
      CHECK(std::abs(m.metric_det_normal(r) - 1.0) <= c2 * r * r + 1e-15);
    }
  }
}
