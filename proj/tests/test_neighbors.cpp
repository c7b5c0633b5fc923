#include "doctest.h"

#include "lapconv/errors.hpp"
#include "lapconv/neighbors.hpp"
#include "lapconv/rng.hpp"
#include "lapconv/sampling.hpp"

#include <algorithm>

using namespace lapconv;

namespace {

std::vector<std::uint32_t> brute_range(const std::vector<Point>& pts, const Point& x, double r) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < pts.size(); ++i)
    if (chord_distance(x, pts[i]) <= r) out.push_back(i);
  return out;
}

double sorted_kth(const std::vector<Point>& pts, const Point& x, std::size_t k) {
  std::vector<double> d;
  for (const Point& p : pts) d.push_back(chord_distance(x, p));
  std::sort(d.begin(), d.end());
  return d[k - 1];
}

} // namespace

TEST_CASE("range_query edge cases") {
  const Manifold s2 = Manifold::sphere(2);
  for (std::size_t n : {50u, 500u}) {
    const SampleCloud cloud = sample(s2, Density::uniform(s2), n, 1);
    const NeighborIndex index(cloud.points, 3);
    CHECK(index.uses_tree() == (n >= NeighborIndex::kBruteForceBelow));
    CHECK(index.range_query({0, 0, 1, 0}, 0.0).empty());
    CHECK(index.range_query({0, 0, 1, 0}, 2.0).size() == n);
    CHECK(index.range_query(cloud.points[3], 0.0) == std::vector<std::uint32_t>{3});
    CHECK_THROWS_AS(index.range_query({0, 0, 1, 0}, -1.0), DomainError);
  }
}

TEST_CASE("range_query equals brute force") {
  Rng rng(8);
  for (const Manifold& m : {Manifold::sphere(2), Manifold::flat_torus(1.0, 0.5), Manifold::sphere(3), Manifold::circle()}) {
    for (std::size_t n : {300u, 2000u}) {
      const SampleCloud cloud = sample(m, Density::tilted(m, 0.4), n, n + 3);
      const NeighborIndex index(cloud.points, m.ambient_dim());
      for (int q = 0; q < 100; ++q) {
        const Point x = q % 2 ? m.sample_uniform(rng) : cloud.points[q];
        const double r = 0.02 + 0.6 * rng.uniform();
        CHECK(index.range_query(x, r) == brute_range(cloud.points, x, r));
        // Radius equal to an exact sample distance: closed ball keeps the tie.
        const double tie = chord_distance(x, cloud.points[(q * 37) % n]);
        CHECK(index.range_query(x, tie) == brute_range(cloud.points, x, tie));
      }
    }
  }
}

TEST_CASE("knn_radius") {
  const std::vector<Point> three{{0.7, 0, 0, 0}, {0.1, 0, 0, 0}, {0.3, 0, 0, 0}};
  const NeighborIndex small(three, 1);
  CHECK(small.knn_radius({0, 0, 0, 0}, 2) == 0.3);
  CHECK(small.knn_radius(three[0], 1) == 0.0);
  CHECK_THROWS_AS(small.knn_radius({0, 0, 0, 0}, 4), DomainError);
  CHECK_THROWS_AS(small.knn_radius({0, 0, 0, 0}, 0), DomainError);

  const Manifold s2 = Manifold::sphere(2);
  Rng rng(4);
  for (std::size_t n : {500u, 3000u}) {
    const SampleCloud cloud = sample(s2, Density::uniform(s2), n, 17);
    const NeighborIndex index(cloud.points, 3);
    for (int q = 0; q < 60; ++q) {
      const Point x = q % 3 ? s2.sample_uniform(rng) : cloud.points[q];
      CHECK(index.knn_radius(x, 25) == sorted_kth(cloud.points, x, 25));
      double prev = 0.0;
      for (std::size_t k : {1u, 2u, 5u, 25u, 100u, 499u}) {
        const double r = index.knn_radius(x, k);
        CHECK(r == sorted_kth(cloud.points, x, k));
        CHECK(r >= prev);
        CHECK(index.range_query(x, r).size() >= k);
        prev = r;
      }
    }
  }
}

TEST_CASE("duplicate points count separately") {
  std::vector<Point> pts(400, Point{1, 0, 0, 0});
  pts.push_back({0, 1, 0, 0});
  const NeighborIndex index(pts, 3);
  CHECK(index.knn_radius({1, 0, 0, 0}, 400) == 0.0);
  CHECK(index.knn_radius({1, 0, 0, 0}, 401) == doctest::Approx(std::sqrt(2.0)));
  CHECK(index.range_query({1, 0, 0, 0}, 0.0).size() == 400);
}

TEST_CASE("construction is deterministic") {
  const Manifold t = Manifold::flat_torus();
  const SampleCloud cloud = sample(t, Density::uniform(t), 1000, 2);
  const NeighborIndex a(cloud.points, 4), b(cloud.points, 4);
  Rng rng(1);
  for (int q = 0; q < 20; ++q) {
    const Point x = t.sample_uniform(rng);
    CHECK(a.range_query(x, 0.5) == b.range_query(x, 0.5));
  }
}
