#include "lapconv/operators.hpp"

#include "lapconv/numerics.hpp"
#include "lapconv/parallel.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace lapconv {

namespace {

std::vector<std::vector<double>> values_at_samples(const SampleCloud& cloud, std::span<const TestFunction> fs) {
  std::vector<std::vector<double>> out(fs.size(), std::vector<double>(cloud.size()));
  for (std::size_t j = 0; j < fs.size(); ++j)
    for (std::size_t i = 0; i < cloud.size(); ++i) out[j][i] = fs[j](cloud.points[i]);
  return out;
}

std::vector<OperatorField> empty_fields(const SampleCloud& cloud, std::span<const TestFunction> fs,
                                        std::span<const Point> xs, const std::string& op, const std::string& kernel,
                                        double h_or_k) {
  std::vector<OperatorField> fields(fs.size());
  for (std::size_t j = 0; j < fs.size(); ++j) {
    fields[j].points.assign(xs.begin(), xs.end());
    fields[j].values.assign(xs.size(), 0.0);
    fields[j].ambient_dim = cloud.ambient_dim;
    fields[j].provenance = {op, kernel, h_or_k, cloud.size(), cloud.seed, fs[j].id(), cloud.density_id};
  }
  return fields;
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string(what) + ": non-finite value");
  return v;
}

std::vector<double> kernel_arg_breaks(const Kernel& kernel) {
  std::vector<double> out;
  for (double b : kernel.breakpoints())
    if (b > 0.0) out.push_back(b);
  return out;
}

double kernel_arg_max(const Kernel& kernel) {
  return kernel.support_radius().value_or(kQuadratureGaussianTruncation);
}

} // namespace

void write_field_csv(std::ostream& out, const OperatorField& field) {
  for (int i = 0; i < field.ambient_dim; ++i) out << "x" << i << ",";
  out << "value,operator,h_or_k,n,seed\n";
  const Provenance& pv = field.provenance;
  const std::string tail = "," + pv.op + "," + format_double(pv.h_or_k) + "," + std::to_string(pv.n) + "," +
                           std::to_string(pv.seed) + "\n";
  for (std::size_t r = 0; r < field.points.size(); ++r) {
    for (int i = 0; i < field.ambient_dim; ++i) out << format_double(field.points[r][i]) << ",";
    out << format_double(field.values[r]) << tail;
  }
}

double graph_cutoff(const Kernel& kernel, double h) {
  return h * kernel.support_radius().value_or(kGraphGaussianTruncation);
}

std::vector<OperatorField> graph_laplacian(const SampleCloud& cloud, const NeighborIndex& index,
                                           const Kernel& kernel, double h, std::span<const TestFunction> fs,
                                           std::span<const Point> xs, int threads) {
  if (!(h > 0.0)) throw DomainError("graph_laplacian: h must be positive");
  if (cloud.size() == 0) throw DomainError("graph_laplacian: empty cloud");
  const auto fvals = values_at_samples(cloud, fs);
  auto fields = empty_fields(cloud, fs, xs, "graph", kernel.name(), h);
  const double scale = 1.0 / (static_cast<double>(cloud.size()) * std::pow(h, cloud.intrinsic_dim + 2));
  const double cutoff = graph_cutoff(kernel, h);

  parallel_for(xs.size(), threads, [&](std::size_t r) {
    const Point& x = xs[r];
    const auto nbrs = index.range_query(x, cutoff);
    std::vector<double> w(nbrs.size());
    for (std::size_t t = 0; t < nbrs.size(); ++t) w[t] = kernel(chord_distance(x, cloud.points[nbrs[t]]) / h);
    for (std::size_t j = 0; j < fs.size(); ++j) {
      const double fx = fs[j](x);
      CompensatedSum sum;
      for (std::size_t t = 0; t < nbrs.size(); ++t) sum += w[t] * (fvals[j][nbrs[t]] - fx);
      fields[j].values[r] = checked(scale * sum.value(), "graph_laplacian");
    }
  });
  return fields;
}

OperatorField graph_laplacian(const SampleCloud& cloud, const NeighborIndex& index, const Kernel& kernel, double h,
                              const TestFunction& f, std::span<const Point> xs, int threads) {
  return std::move(graph_laplacian(cloud, index, kernel, h, std::span(&f, 1), xs, threads).front());
}

std::vector<OperatorField> knn_laplacian(const SampleCloud& cloud, const NeighborIndex& index, std::size_t k,
                                         std::span<const TestFunction> fs, std::span<const Point> xs,
                                         int threads) {
  if (k < 1 || k > cloud.size()) throw DomainError("knn_laplacian: k must satisfy 1 <= k <= n");
  const auto fvals = values_at_samples(cloud, fs);
  auto fields = empty_fields(cloud, fs, xs, "knn", "indicator", static_cast<double>(k));
  const double n = static_cast<double>(cloud.size());
  const int d = cloud.intrinsic_dim;

  parallel_for(xs.size(), threads, [&](std::size_t r) {
    const Point& x = xs[r];
    const double radius = index.knn_radius(x, k);
    if (!(radius > 0.0)) {
      std::ostringstream msg;
      msg << "knn_laplacian: degenerate evaluation point " << r << " (k-th neighbor distance is 0)";
      throw DegeneratePointError(r, msg.str());
    }
    const auto nbrs = index.range_query(x, radius);
    const double scale = 1.0 / (n * std::pow(radius, d + 2));
    for (std::size_t j = 0; j < fs.size(); ++j) {
      const double fx = fs[j](x);
      CompensatedSum sum;
      for (std::uint32_t i : nbrs) sum += fvals[j][i] - fx;
      fields[j].values[r] = checked(scale * sum.value(), "knn_laplacian");
    }
  });
  return fields;
}

OperatorField knn_laplacian(const SampleCloud& cloud, const NeighborIndex& index, std::size_t k,
                            const TestFunction& f, std::span<const Point> xs, int threads) {
  return std::move(knn_laplacian(cloud, index, k, std::span(&f, 1), xs, threads).front());
}

QuadratureResult two_level_ball_integral(const Manifold& m, const Point& x, DistanceKind kind, double h,
                                         const Kernel& kernel, const BallIntegrand& g,
                                         const QuadratureOptions& options) {
  const auto breaks = kernel_arg_breaks(kernel);
  const double arg_max = kernel_arg_max(kernel);
  const BallIntegral lo = integrate_ball(m, x, kind, h, breaks, arg_max, options.coarse, g);
  const BallIntegral hi = integrate_ball(m, x, kind, h, breaks, arg_max, options.fine, g);
  if (!std::isfinite(hi.value) || std::abs(hi.value - lo.value) > options.tolerance * hi.abs_value) {
    std::ostringstream msg;
    msg << "quadrature did not converge: h=" << h << " coarse=" << lo.value << " fine=" << hi.value
        << " abs=" << hi.abs_value << " at x=(" << x[0] << "," << x[1] << "," << x[2] << "," << x[3] << ")";
    throw NumericalError(msg.str());
  }
  return {hi.value, lo.value, hi.abs_value, lo.evaluations + hi.evaluations};
}

QuadratureResult deterministic_operator(const Manifold& m, const Density& p, const Kernel& kernel, double h,
                                        const TestFunction& f, const Point& x, DistanceKind kind,
                                        const QuadratureOptions& options) {
  if (!(h > 0.0)) throw DomainError("deterministic operator: h must be positive");
  m.require_on_manifold(x);
  if (f.is_constant()) return {};
  const double fx = f(x);
  const double scale = 1.0 / std::pow(h, m.dim() + 2);
  const BallIntegrand g = [&](const Point& y, double a) { return kernel(a) * (f(y) - fx) * p(y); };
  QuadratureResult res = two_level_ball_integral(m, x, kind, h, kernel, g, options);
  res.value *= scale;
  res.coarse *= scale;
  res.abs_integral *= scale;
  return res;
}

double deterministic_op_chord(const Manifold& m, const Density& p, const Kernel& kernel, double h,
                              const TestFunction& f, const Point& x, const QuadratureOptions& options) {
  return deterministic_operator(m, p, kernel, h, f, x, DistanceKind::chord, options).value;
}

double deterministic_op_geodesic(const Manifold& m, const Density& p, const Kernel& kernel, double h,
                                 const TestFunction& f, const Point& x, const QuadratureOptions& options) {
  return deterministic_operator(m, p, kernel, h, f, x, DistanceKind::geodesic, options).value;
}

OperatorField deterministic_field(const Manifold& m, const Density& p, const Kernel& kernel, double h,
                                  const TestFunction& f, std::span<const Point> xs, DistanceKind kind, int threads,
                                  const QuadratureOptions& options) {
  OperatorField field;
  field.points.assign(xs.begin(), xs.end());
  field.values.assign(xs.size(), 0.0);
  field.ambient_dim = m.ambient_dim();
  field.provenance = {kind == DistanceKind::chord ? "chord" : "geodesic", kernel.name(), h, 0, 0, f.id(), p.id()};
  parallel_for(xs.size(), threads, [&](std::size_t r) {
    field.values[r] = deterministic_operator(m, p, kernel, h, f, xs[r], kind, options).value;
  });
  return field;
}

} // namespace lapconv
