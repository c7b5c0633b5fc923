#pragma once

#include "lapconv/config.hpp"
#include "lapconv/quadrature.hpp"
#include "lapconv/report_io.hpp"

namespace lapconv {

/// sup_x |A_{h_n,n} f - A f| over (n, seed) with h_n = C n^{-1/(d+4)}; log-log
/// slope of the per-n medians.
Report rate_experiment(const RunConfig& config);

/// The same for the kNN Laplacian with k_n = ceil(C n^{4/(d+4)}), plus the
/// window sup over 5 log-spaced bandwidths in [h/kappa, kappa h].
Report knn_rate_experiment(const RunConfig& config);

/// sup_x |R_{n,k}(x) / (V_d^{1/d} p(x)^{-1/d} (k/n)^{1/d}) - 1| per seed.
Report concentration_experiment(const RunConfig& config);

/// Exceedance frequencies of sup_{f, x} |A_{h,n} f - A f| >= C' delta.
Report deviation_experiment(const RunConfig& config);

/// Weighted moment integrals and far-tail integrals over an h grid.
Report moment_bound_experiment(const RunConfig& config);

/// Geometry identities of the manifold catalog, with measured constants.
Report geometry_check_experiment(const RunConfig& config);

/// sup_x |Ã_h f - A f| and |A_h f - Ã_h f| over an h grid halving each step.
Report operator_gap_experiment(const RunConfig& config);

/// Dispatch on config.experiment.
Report run_experiment(const RunConfig& config);

/// (1/h^{d+2}) times the integral of K(dist(x,y)/h) over rho(x,y) >= c1.
double far_tail_integral(const Manifold& m, const Kernel& kernel, double h, DistanceKind kind);

} // namespace lapconv
