// One PASS/FAIL line per acceptance criterion; exit status 0 iff all pass.

#include "lapconv/experiments.hpp"
#include "lapconv/neighbors.hpp"
#include "lapconv/numerics.hpp"
#include "lapconv/operators.hpp"
#include "lapconv/rng.hpp"
#include "lapconv/sampling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

using namespace lapconv;

namespace {

constexpr double kPi = std::numbers::pi;

// Pinned tolerances.
constexpr double kC0Tol = 1e-12;
constexpr double kOracleTol = 1e-12;
constexpr double kSlopeLo = -0.30;
constexpr double kSlopeHi = -0.05;
constexpr double kConcentrationMax = 0.2;
constexpr double kHalvingRatio = 1.5;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("criterion %d %s: %s; %s; %.1f s (budget %.0f s)%s\n", id, pass ? "PASS" : "FAIL", title,
              o.detail.c_str(), secs, budget_s, in_time ? "" : " over budget");
  std::fflush(stdout);
}

std::string csv_text(const Report& r) {
  std::ostringstream out;
  for (const Table& t : r.tables) write_csv(out, t);
  return out.str();
}

// Independent oracles: plain double loops with long double accumulation.
double brute_graph(const SampleCloud& c, const Kernel& k, double h, const TestFunction& f, const Point& x) {
  long double s = 0.0L;
  const double fx = f(x);
  for (const Point& y : c.points) {
    double r2 = 0.0;
    for (int i = 0; i < c.ambient_dim; ++i) r2 += (x[i] - y[i]) * (x[i] - y[i]);
    s += static_cast<long double>(k(std::sqrt(r2) / h)) * (f(y) - fx);
  }
  return static_cast<double>(s / (static_cast<long double>(c.size()) * std::pow(h, c.intrinsic_dim + 2)));
}

double brute_knn(const SampleCloud& c, std::size_t k, const TestFunction& f, const Point& x) {
  std::vector<double> dist;
  for (const Point& y : c.points) dist.push_back(chord_distance(x, y));
  std::vector<double> sorted = dist;
  std::sort(sorted.begin(), sorted.end());
  const double r = sorted[k - 1];
  long double s = 0.0L;
  const double fx = f(x);
  for (std::size_t i = 0; i < c.size(); ++i)
    if (dist[i] <= r) s += f(c.points[i]) - fx;
  return static_cast<double>(s / (static_cast<long double>(c.size()) * std::pow(r, c.intrinsic_dim + 2)));
}

Outcome c0_exactness() {
  // S_{d-1} for d = 1, 2, 3: 2, 2 pi, 4 pi.
  const double area[4] = {0.0, 2.0, 2.0 * kPi, 4.0 * kPi};
  double worst = 0.0;
  for (int d = 1; d <= 3; ++d)
    worst = std::max(worst, std::abs(c0(Kernel::indicator(), d) - area[d] / (d * (d + 2.0))));
  const double quarter = std::abs(c0(Kernel::indicator(), 2) - kPi / 4.0);
  worst = std::max(worst, quarter);
  return {worst <= kC0Tol, "max |c0 - S_{d-1}/(d(d+2))| = " + fmt(worst) + " (tol 1e-12)"};
}

Outcome annihilation() {
  const Manifold m = Manifold::sphere(2);
  const Density p = Density::tilted(m, 0.5);
  const SampleCloud cloud = sample(m, p, 10000, 5);
  const NeighborIndex index(cloud.points, m.ambient_dim());
  std::vector<Point> xs = eval_grid(m, 200);
  xs.insert(xs.end(), cloud.points.begin(), cloud.points.begin() + 2000);
  const TestFunction f = TestFunction::constant(m, 3.7);
  double worst = 0.0;
  for (const char* kn : {"indicator", "gaussian", "triangular", "annulus"}) {
    const auto field = graph_laplacian(cloud, index, Kernel::from_name(kn), 0.15, f, xs);
    for (double v : field.values) worst = std::max(worst, std::abs(v));
  }
  for (std::size_t k : {10, 100, 1000}) {
    const auto field = knn_laplacian(cloud, index, k, f, xs);
    for (double v : field.values) worst = std::max(worst, std::abs(v));
  }
  return {worst == 0.0, "max |A(const)| = " + fmt(worst) + " over 4 kernels and 3 k (required exactly 0)"};
}

Outcome oracle_equivalence() {
  Rng rng(2024);
  const std::vector<Manifold> ms{Manifold::circle(), Manifold::sphere(2), Manifold::sphere(3, 1.5),
                                 Manifold::flat_torus(1.0, 0.5)};
  const auto kernels = Kernel::catalog_names();
  double worst = 0.0;
  for (int cfg = 0; cfg < 20; ++cfg) {
    const Manifold& m = ms[cfg % ms.size()];
    const std::size_t n = 500 + static_cast<std::size_t>(rng.uniform() * 1501.0);
    const Density p = cfg % 2 == 0 ? Density::uniform(m) : Density::tilted(m, 0.4);
    const SampleCloud cloud = sample(m, p, n, 100 + cfg);
    const NeighborIndex index(cloud.points, m.ambient_dim());
    const TestFunction f = m.is_sphere() ? TestFunction::coordinate(m, cfg % m.ambient_dim())
                                         : TestFunction::torus_wave(m, 1, cfg % 3);
    std::vector<Point> xs = eval_grid(m, 25);
    xs.insert(xs.end(), cloud.points.begin(), cloud.points.begin() + 25);
    const Kernel kernel = Kernel::from_name(kernels[cfg % kernels.size()]);
    const double h = 0.15 + 0.3 * rng.uniform();
    const std::size_t k = 5 + static_cast<std::size_t>(rng.uniform() * 0.1 * n);
    const auto g = graph_laplacian(cloud, index, kernel, h, f, xs);
    const auto kn = knn_laplacian(cloud, index, k, f, xs);
    for (std::size_t r = 0; r < xs.size(); ++r) {
      const double bg = brute_graph(cloud, kernel, h, f, xs[r]);
      const double bk = brute_knn(cloud, k, f, xs[r]);
      worst = std::max(worst, std::abs(g.values[r] - bg) / std::max(1.0, std::abs(bg)));
      worst = std::max(worst, std::abs(kn.values[r] - bk) / std::max(1.0, std::abs(bk)));
    }
  }
  return {worst <= kOracleTol, "max relative gap to brute force over 20 configs = " + fmt(worst) + " (tol 1e-12)"};
}

Outcome geometry_suite() {
  RunConfig c = default_config("geometry");
  c.functions = {"coordinate:0", "harmonic:2"};
  const Report r = geometry_check_experiment(c);
  const std::vector<std::string> required{"harmonic_eigenvalue",           "metric_identity_at_origin",
                                          "chord_not_above_geodesic",      "small_distance_ratio_times_R2",
                                          "symmetry_integral_gradients", "symmetry_integral_laplacian"};
  bool pass = r.summary["all_pass"].get<bool>();
  std::string detail;
  for (const auto& row : r.summary["checks"]) {
    const std::string name = row["check"];
    if (std::find(required.begin(), required.end(), name) == required.end()) continue;
    detail += name + "=" + fmt(row["measured"].get<double>()) + (row["pass"].get<bool>() ? " " : "(fail) ");
    pass = pass && row["pass"].get<bool>();
  }
  return {pass, detail + "at 1e6 draws; all " + std::to_string(r.summary["checks"].size()) + " checks " +
                    (r.summary["all_pass"].get<bool>() ? "pass" : "do not all pass")};
}

Outcome operator_gap() {
  const Report r = operator_gap_experiment(default_config("operator-gap"));
  const auto& f = r.summary["functions"][0];
  const bool pass = f["geodesic_strictly_decreasing"].get<bool>() && f["chord_strictly_decreasing"].get<bool>() &&
                    f["min_ratio"].get<double>() >= kHalvingRatio;
  return {pass, "gaps strictly decreasing over h = 0.4..0.05, min halving ratio " +
                    fmt(f["min_ratio"].get<double>()) + " (need >= 1.5)"};
}

Outcome statistical_rate(std::string& csv) {
  const Report r = rate_experiment(default_config("rate"));
  csv = csv_text(r);
  const auto& f = r.summary["functions"][0];
  if (f["fit"].is_null()) return {false, "no fit"};
  const double slope = f["fit"]["slope"];
  const bool pass = slope >= kSlopeLo && slope <= kSlopeHi && f["last_below_first"].get<bool>();
  return {pass, "slope " + fmt(slope) + " +- " + fmt(f["fit"]["slope_stderr"].get<double>()) +
                    " (need [-0.30, -0.05]); median n=2^15 " + fmt(f["medians"].back().get<double>()) +
                    " vs n=2^10 " + fmt(f["medians"].front().get<double>())};
}

Outcome concentration() {
  const RunConfig c = default_config("concentration");
  const Report r = concentration_experiment(c);
  const auto med = r.summary["medians"].get<std::vector<double>>();
  const auto at = [&](std::size_t n) {
    return med[static_cast<std::size_t>(std::find(c.n_grid.begin(), c.n_grid.end(), n) - c.n_grid.begin())];
  };
  const bool pass = at(20000) <= kConcentrationMax && at(40000) < at(5000);
  return {pass, "median deviation n=20000 " + fmt(at(20000)) + " (need <= 0.2); n=40000 " + fmt(at(40000)) +
                    " < n=5000 " + fmt(at(5000))};
}

Outcome knn_consistency() {
  const Report r = knn_rate_experiment(default_config("knn-rate"));
  const auto& f = r.summary["functions"][0];
  std::string meds;
  for (double v : f["medians"]) meds += fmt(v) + " ";
  return {f["median_strictly_decreasing"].get<bool>(), "medians over n = 2^12..2^15: " + meds + "(need strictly decreasing)"};
}

Outcome deviation_shape() {
  const Report r = deviation_experiment(default_config("deviation"));
  std::string freqs;
  for (double v : r.summary["frequencies"]) freqs += fmt(v) + " ";
  const auto& rho = r.summary["rank_correlation_log_frequency_delta2"];
  const bool pass = r.summary["frequencies_nonincreasing"].get<bool>() && r.summary["rank_correlation_negative"].get<bool>();
  return {pass, "frequencies " + freqs + "; rank correlation " + (rho.is_null() ? std::string("undefined") : fmt(rho.get<double>())) +
                    " (need nonincreasing and < 0)"};
}

Outcome determinism(const std::string& rate_csv) {
  std::vector<RunConfig> cfgs;
  for (const char* kind : {"rate", "knn-rate", "concentration", "deviation", "moments", "geometry", "operator-gap"}) {
    RunConfig c = default_config(kind);
    if (c.n_grid.size() > 2) c.n_grid = {c.n_grid[0], c.n_grid[1]};
    if (c.seeds.size() > 6) c.seeds.resize(6);
    c.eval_grid = std::min<std::size_t>(c.eval_grid, 40);
    if (c.experiment == "deviation") c.deviation.n = 2048;
    if (c.experiment == "concentration") c.n_grid = {2000, 4000};
    if (c.experiment == "operator-gap") c.h_grid = {0.4, 0.2};
    if (c.experiment == "geometry") c.geometry.mc_draws = 20000;
    cfgs.push_back(c);
  }
  std::size_t compared = 0;
  for (RunConfig c : cfgs) {
    c.threads = 1;
    const std::string a = csv_text(run_experiment(c));
    const std::string b = csv_text(run_experiment(c));
    c.threads = 4;
    const std::string p = csv_text(run_experiment(c));
    if (a != b || a != p) return {false, c.experiment + " differs between reruns or thread counts"};
    compared += 3;
  }
  RunConfig full = default_config("rate");
  full.threads = 4;
  if (csv_text(run_experiment(full)) != rate_csv) return {false, "full rate run differs at 4 threads"};
  return {true, std::to_string(compared + 1) + " runs of 7 experiment kinds byte-identical at 1 and 4 threads"};
}

} // namespace

int main() {
  std::string rate_csv;
  criterion(1, "constant exactness", 1, c0_exactness);
  criterion(2, "annihilation of constants", 5, annihilation);
  criterion(3, "oracle equivalence", 30, oracle_equivalence);
  criterion(4, "geometry suite", 120, geometry_suite);
  criterion(5, "deterministic-operator convergence", 120, operator_gap);
  criterion(6, "statistical rate", 600, [&] { return statistical_rate(rate_csv); });
  criterion(7, "kNN radius concentration", 300, concentration);
  criterion(8, "kNN Laplacian consistency", 600, knn_consistency);
  criterion(9, "deviation shape", 900, deviation_shape);
  criterion(10, "determinism", 900, [&] { return determinism(rate_csv); });
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
