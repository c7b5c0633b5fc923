#pragma once

#include "lapconv/functions.hpp"
#include "lapconv/kernels.hpp"
#include "lapconv/manifolds.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lapconv {

inline constexpr const char* kVersion = "0.1.0";

/// Experiment kinds accepted in configs and as CLI subcommands.
const std::vector<std::string>& experiment_kinds();

struct ManifoldSpec {
  std::string name = "s2";
  std::vector<double> radii;  // empty: unit radii
};

struct DensitySpec {
  std::string name = "uniform";  // "uniform" or "tilted"
  double beta = 0.5;
};

struct KernelSpec {
  std::string name = "indicator";  // catalog name or "piecewise"
  std::vector<std::pair<double, double>> steps;
};

/// h = constant * n^exponent, or k = ceil(constant * n^exponent). The
/// default exponent is -1/(d+4) for h and 4/(d+4) for k.
struct RuleSpec {
  double constant = 1.0;
  std::optional<double> exponent;
};

struct DeviationSpec {
  std::size_t n = 8192;
  std::optional<double> h;  // default: h_rule at n
  std::size_t delta_count = 6;
  std::vector<double> deltas;  // explicit grid, overrides delta_count
  double threshold_scale = 0.5;  // C'
};

struct WindowSpec {
  std::optional<double> kappa;  // default (p_max/p_min)^{1/d} + 1
  int count = 5;
};

struct GeometrySpec {
  std::size_t pairs = 2000;
  std::size_t mc_draws = 1000000;
  double lemma_radius = 0.5;
};

struct QuadratureSpec {
  int radial = 64;
  int angular = 128;
  double tolerance = 1e-4;
};

struct RunConfig {
  std::string experiment;
  ManifoldSpec manifold;
  DensitySpec density;
  KernelSpec kernel;
  std::vector<std::string> functions;
  std::vector<std::size_t> n_grid;
  RuleSpec h_rule;
  RuleSpec k_rule;
  std::vector<double> h_grid;
  std::vector<std::uint64_t> seeds;
  std::size_t eval_grid = 200;
  bool include_samples = true;
  DeviationSpec deviation;
  WindowSpec window;
  GeometrySpec geometry;
  QuadratureSpec quadrature;
  int threads = 1;
  std::string output;
};

/// Built-in defaults for an experiment kind (desk-scale settings).
RunConfig default_config(const std::string& experiment);

/// Parses JSON text on top of default_config(experiment). Unknown fields,
/// type mismatches and syntax errors raise ConfigError naming the source,
/// line and field.
RunConfig parse_config(const std::string& text, const std::string& source, const std::string& experiment);

nlohmann::json to_json(const RunConfig& config);

/// Preconditions of the experiment (window condition, kNN admissibility,
/// delta interval, nonempty seeds...). Throws ConfigError.
void validate(const RunConfig& config);

Manifold build_manifold(const ManifoldSpec& spec);
Density build_density(const DensitySpec& spec, const Manifold& m);
Kernel build_kernel(const KernelSpec& spec);

/// "constant:c", "coordinate:i", "linear:a0;a1;..", "harmonic:l", "wave:k1;k2".
TestFunction parse_function(const std::string& spec, const Manifold& m);

/// h = C n^{-1/(d+4)} (or the configured exponent).
double bandwidth(const RuleSpec& rule, std::size_t n, int d);
/// k = ceil(C n^{4/(d+4)}) (or the configured exponent).
std::size_t neighbor_count(const RuleSpec& rule, std::size_t n, int d);

/// log(1/h) / (n h^{d+2}); configs with a value above 1 are rejected.
double window_ratio(double h, std::size_t n, int d);
/// (1/n) (k/n)^{-1-2/d} log(n/k), the finite-n proxy of the kNN condition.
double knn_ratio(std::size_t k, std::size_t n, int d);

} // namespace lapconv
