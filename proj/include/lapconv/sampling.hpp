#pragma once

#include "lapconv/functions.hpp"
#include "lapconv/manifolds.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lapconv {

/// i.i.d. draws X_1..X_n from p dmu.
struct SampleCloud {
  std::string manifold_id;
  std::string density_id;
  std::uint64_t seed = 0;
  int intrinsic_dim = 0;
  int ambient_dim = 0;
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
};

struct SamplingStats {
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  /// Closed-form acceptance probability 1 / (normalizer * vol * q_max).
  double expected_rate = 1.0;

  double rate() const { return proposals == 0 ? 0.0 : static_cast<double>(accepted) / proposals; }
};

/// Points are produced in blocks of kSampleBlock; block b uses
/// Rng::substream(seed, b), so the cloud does not depend on `threads`.
inline constexpr std::size_t kSampleBlock = 1024;

/// Rejection sampler over the uniform base measure with acceptance q / q_max.
/// Throws ConfigError when the density has no upper bound.
SampleCloud sample(const Manifold& m, const Density& p, std::size_t n, std::uint64_t seed, int threads = 1,
                   SamplingStats* stats = nullptr);

/// "s2:1", "torus:1:0.5": name and radii, enough to rebuild the manifold.
std::string manifold_id(const Manifold& m);
Manifold manifold_from_id(const std::string& id);

/// Deterministic quasi-uniform points: Fibonacci lattice on S^2, angle
/// lattice on the circle and (for square counts) on the torus, rank-1
/// lattices otherwise.
std::vector<Point> eval_grid(const Manifold& m, std::size_t count);

/// CSV with a '#' metadata line, a header row and one point per row.
void write_cloud_csv(std::ostream& out, const SampleCloud& cloud);
SampleCloud read_cloud_csv(std::istream& in);

} // namespace lapconv
