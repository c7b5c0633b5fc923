#pragma once

#include "lapconv/manifolds.hpp"

#include <functional>
#include <span>
#include <vector>

namespace lapconv {

/// Which distance enters the kernel argument.
enum class DistanceKind { chord, geodesic };

/// Unit direction in R^d with its share of the sphere measure; the weights of
/// a direction set sum to S_{d-1}.
struct Direction {
  Local u{};
  double weight = 0.0;
};

/// d = 1: {+1, -1}. d = 2: `angular` equally spaced angles. d = 3:
/// angular/2 Gauss-Legendre nodes in cos(theta) times `angular` azimuths.
std::vector<Direction> sphere_directions(int d, int angular);

struct BallRule {
  int radial_nodes = 64;   // per radial panel
  int angular_nodes = 128;
};

struct BallIntegral {
  double value = 0.0;
  double abs_value = 0.0;  // same rule applied to |g|
  std::size_t evaluations = 0;
};

/// Integrand g(y, a) at y = E_x(v) with kernel argument a = dist(x, y) / h.
using BallIntegrand = std::function<double(const Point& y, double a)>;

/// Integral of g(E_x(v), dist/h) sqrt(det g(v)) dv over the normal ball
/// |v| < min(c1, radius where dist/h reaches arg_max). Along every ray the
/// radial range is cut into Gauss-Legendre panels at the radii where dist/h
/// equals one of `arg_breaks`, so kernel jumps fall on panel edges. Chord
/// crossings are found by bisection; the chord is increasing along rays
/// inside the catalog normal balls.
BallIntegral integrate_ball(const Manifold& m, const Point& x, DistanceKind kind, double h,
                            std::span<const double> arg_breaks, double arg_max, const BallRule& rule,
                            const BallIntegrand& g);

/// Radius r along direction u with dist(x, E_x(r u)) = target, or c1 when
/// the distance stays below target inside the normal ball.
double ray_crossing(const Manifold& m, const Point& x, const Frame& frame, const Local& u, DistanceKind kind,
                    double target);

} // namespace lapconv
