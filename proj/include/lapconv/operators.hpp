#pragma once

#include "lapconv/errors.hpp"
#include "lapconv/functions.hpp"
#include "lapconv/kernels.hpp"
#include "lapconv/neighbors.hpp"
#include "lapconv/quadrature.hpp"
#include "lapconv/sampling.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lapconv {

/// The graph estimator cuts the Gaussian at 8h (the dropped mass is below
/// e^-64 relative); the deterministic operators integrate to 12h.
inline constexpr double kGraphGaussianTruncation = 8.0;
inline constexpr double kQuadratureGaussianTruncation = 12.0;

struct Provenance {
  std::string op;  // "graph", "knn", "chord", "geodesic"
  std::string kernel;
  double h_or_k = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string f_id;
  std::string p_id;
};

struct OperatorField {
  std::vector<Point> points;
  std::vector<double> values;
  int ambient_dim = 0;
  Provenance provenance;
};

/// Columns x0..x{m-1}, value, operator, h_or_k, n, seed.
void write_field_csv(std::ostream& out, const OperatorField& field);

/// kNN evaluation point whose k-th neighbor distance is zero.
class DegeneratePointError : public NumericalError {
public:
  DegeneratePointError(std::size_t index, const std::string& what) : NumericalError(what), index_(index) {}
  std::size_t index() const { return index_; }

private:
  std::size_t index_;
};

/// Radius beyond which the graph estimator ignores samples: h times the
/// support radius, or 8h for unbounded kernels.
double graph_cutoff(const Kernel& kernel, double h);

/// A_{h,n} f(x) = (1/(n h^{d+2})) sum_i K(|x - X_i|/h) (f(X_i) - f(x)) for each
/// x in xs and each f in fs; result[j] belongs to fs[j]. Sums run over the
/// neighbors in index order with compensated accumulation.
std::vector<OperatorField> graph_laplacian(const SampleCloud& cloud, const NeighborIndex& index,
                                           const Kernel& kernel, double h, std::span<const TestFunction> fs,
                                           std::span<const Point> xs, int threads = 1);
OperatorField graph_laplacian(const SampleCloud& cloud, const NeighborIndex& index, const Kernel& kernel, double h,
                              const TestFunction& f, std::span<const Point> xs, int threads = 1);

/// kNN Laplacian with R = knn_radius(x, k) and the closed unit ball as kernel.
std::vector<OperatorField> knn_laplacian(const SampleCloud& cloud, const NeighborIndex& index, std::size_t k,
                                         std::span<const TestFunction> fs, std::span<const Point> xs,
                                         int threads = 1);
OperatorField knn_laplacian(const SampleCloud& cloud, const NeighborIndex& index, std::size_t k,
                            const TestFunction& f, std::span<const Point> xs, int threads = 1);

struct QuadratureOptions {
  BallRule coarse{64, 128};
  BallRule fine{128, 256};
  /// Accept when |I_coarse - I_fine| <= tolerance * (integral of |integrand|).
  double tolerance = 1e-4;
};

struct QuadratureResult {
  double value = 0.0;  // fine-level value
  double coarse = 0.0;
  double abs_integral = 0.0;
  std::size_t evaluations = 0;
};

/// (1/h^{d+2}) * integral over the normal ball of K(dist(x,y)/h)(f(y)-f(x)) p(y) dmu(y),
/// at two rule levels. Throws NumericalError when the levels disagree.
QuadratureResult deterministic_operator(const Manifold& m, const Density& p, const Kernel& kernel, double h,
                                        const TestFunction& f, const Point& x, DistanceKind kind,
                                        const QuadratureOptions& options = {});

/// A_h f(x): chord distance in the kernel.
double deterministic_op_chord(const Manifold& m, const Density& p, const Kernel& kernel, double h,
                              const TestFunction& f, const Point& x, const QuadratureOptions& options = {});
/// Ã_h f(x): geodesic distance in the kernel.
double deterministic_op_geodesic(const Manifold& m, const Density& p, const Kernel& kernel, double h,
                                 const TestFunction& f, const Point& x, const QuadratureOptions& options = {});

OperatorField deterministic_field(const Manifold& m, const Density& p, const Kernel& kernel, double h,
                                  const TestFunction& f, std::span<const Point> xs, DistanceKind kind,
                                  int threads = 1, const QuadratureOptions& options = {});

/// Generic two-level normal-ball integral of g(y, a) with kernel-aware panel
/// splits; used by the moment checks.
QuadratureResult two_level_ball_integral(const Manifold& m, const Point& x, DistanceKind kind, double h,
                                         const Kernel& kernel, const BallIntegrand& g,
                                         const QuadratureOptions& options = {});

} // namespace lapconv
