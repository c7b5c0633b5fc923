#include "lapconv/kernels.hpp"

#include "lapconv/errors.hpp"
#include "lapconv/numerics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lapconv {

namespace {

constexpr double kQuadratureTolerance = 1e-10;

// Adaptive Gauss-Kronrod over [lo, hi] (hi may be +inf) split at `cuts`.
template <class F>
double integrate_split(F&& f, double lo, double hi, std::vector<double> cuts) {
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(),
                            [&](double c) { return !(c > lo && c < hi); }),
             cuts.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<double> edges;
  edges.push_back(lo);
  edges.insert(edges.end(), cuts.begin(), cuts.end());
  edges.push_back(hi);

  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  CompensatedSum total;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    double err = 0.0;
    const double piece = GK::integrate(f, edges[i], edges[i + 1], 20, kQuadratureTolerance, &err);
    total += piece;
  }
  const double value = total.value();
  if (!std::isfinite(value)) throw NumericalError("kernel integral does not converge");
  return value;
}

double upper_limit(const Kernel& k) {
  return k.support_radius() ? *k.support_radius() : std::numeric_limits<double>::infinity();
}

} // namespace

Kernel Kernel::piecewise_constant(std::string name, std::vector<std::pair<double, double>> steps) {
  if (steps.empty()) throw ConfigError("piecewise kernel '" + name + "': no steps given");
  double prev = 0.0;
  for (const auto& [b, v] : steps) {
    if (!(b > prev) || !std::isfinite(b))
      throw ConfigError("piecewise kernel '" + name + "': breakpoints must be positive and increasing");
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ConfigError("piecewise kernel '" + name + "': values must be finite and nonnegative");
    prev = b;
  }

  Kernel k;
  k.name_ = std::move(name);
  std::vector<double> breaks;
  std::vector<double> values;
  for (const auto& [b, v] : steps) {
    breaks.push_back(b);
    values.push_back(v);
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double next = i + 1 < values.size() ? values[i + 1] : 0.0;
    if (next != values[i]) k.jumps_.push_back({breaks[i], next - values[i]});
  }
  k.support_ = breaks.back();
  k.sup_ = *std::max_element(values.begin(), values.end());
  k.profile_ = [breaks, values](double a) {
    const auto it = std::lower_bound(breaks.begin(), breaks.end(), a);
    return it == breaks.end() ? 0.0 : values[static_cast<std::size_t>(it - breaks.begin())];
  };
  k.moment_ = [breaks, values](double q) {
    double s = 0.0;
    double lo = 0.0;
    for (std::size_t i = 0; i < breaks.size(); ++i) {
      s += values[i] * (std::pow(breaks[i], q + 1.0) - std::pow(lo, q + 1.0)) / (q + 1.0);
      lo = breaks[i];
    }
    return s;
  };
  return k;
}

Kernel Kernel::indicator() { return piecewise_constant("indicator", {{1.0, 1.0}}); }

Kernel Kernel::annulus() { return piecewise_constant("annulus", {{0.5, 0.0}, {1.0, 1.0}}); }

Kernel Kernel::gaussian() {
  Kernel k;
  k.name_ = "gaussian";
  k.sup_ = 1.0;
  k.profile_ = [](double a) { return std::exp(-a * a); };
  k.variation_density_ = [](double a) { return 2.0 * a * std::exp(-a * a); };
  k.continuous_variation_ = [](double a) { return -std::expm1(-a * a); };
  k.moment_ = [](double q) { return 0.5 * boost::math::tgamma(0.5 * (q + 1.0)); };
  return k;
}

Kernel Kernel::triangular() {
  Kernel k;
  k.name_ = "triangular";
  k.sup_ = 1.0;
  k.support_ = 1.0;
  k.profile_ = [](double a) { return a < 1.0 ? 1.0 - a : 0.0; };
  k.variation_density_ = [](double a) { return a < 1.0 ? 1.0 : 0.0; };
  k.continuous_variation_ = [](double a) { return std::min(a, 1.0); };
  k.moment_ = [](double q) { return 1.0 / ((q + 1.0) * (q + 2.0)); };
  return k;
}

Kernel Kernel::from_name(std::string_view name) {
  if (name == "indicator") return indicator();
  if (name == "gaussian") return gaussian();
  if (name == "triangular") return triangular();
  if (name == "annulus") return annulus();
  throw ConfigError("unknown kernel '" + std::string(name) + "'");
}

std::vector<std::string> Kernel::catalog_names() {
  return {"indicator", "gaussian", "triangular", "annulus"};
}

double Kernel::operator()(double a) const {
  if (!(a >= 0.0)) throw DomainError("kernel '" + name_ + "' evaluated at negative radius");
  return profile_(a);
}

double Kernel::total_variation(double a) const {
  if (!(a >= 0.0)) throw DomainError("total variation requested at negative radius");
  double h = continuous_variation_ ? continuous_variation_(a) : 0.0;
  for (const Jump& j : jumps_)
    if (j.location < a) h += std::abs(j.size);
  return h;
}

double Kernel::total_variation_limit() const {
  double h = continuous_variation_ ? continuous_variation_(std::numeric_limits<double>::infinity()) : 0.0;
  for (const Jump& j : jumps_) h += std::abs(j.size);
  return h;
}

double Kernel::variation_density(double a) const {
  return variation_density_ ? variation_density_(a) : 0.0;
}

std::optional<double> Kernel::closed_form_moment(double q) const {
  if (!moment_) return std::nullopt;
  return moment_(q);
}

std::vector<double> Kernel::breakpoints() const {
  std::vector<double> out;
  for (const Jump& j : jumps_) out.push_back(j.location);
  if (support_) out.push_back(*support_);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double kernel_moment_quadrature(const Kernel& kernel, double q) {
  if (!(q >= 0.0)) throw DomainError("kernel_moment: exponent must be nonnegative");
  return integrate_split([&](double a) { return kernel(a) * std::pow(a, q); }, 0.0,
                         upper_limit(kernel), kernel.breakpoints());
}

double kernel_moment(const Kernel& kernel, double q) {
  if (!(q >= 0.0)) throw DomainError("kernel_moment: exponent must be nonnegative");
  std::optional<double> exact;
  try {
    exact = kernel.closed_form_moment(q);
  } catch (const std::overflow_error&) {
    throw NumericalError("kernel moment overflows for exponent " + std::to_string(q));
  }
  if (exact) {
    if (!std::isfinite(*exact)) throw NumericalError("kernel moment is not finite");
    return *exact;
  }
  return kernel_moment_quadrature(kernel, q);
}

double kernel_tail_moment(const Kernel& kernel, double q, double b) {
  if (!(q >= 0.0) || !(b >= 0.0)) throw DomainError("kernel_tail_moment: negative argument");
  const double hi = upper_limit(kernel);
  if (b >= hi) return 0.0;
  return integrate_split([&](double a) { return kernel(a) * std::pow(a, q); }, b, hi,
                         kernel.breakpoints());
}

double c0(const Kernel& kernel, int d) {
  if (d < 1) throw DomainError("c0: dimension must be >= 1");
  return unit_sphere_area(d) / d * kernel_moment(kernel, d + 1.0);
}

double bv_moment(const Kernel& kernel, double r) {
  if (!(r >= 0.0)) throw DomainError("bv_moment: exponent must be nonnegative");
  CompensatedSum total;
  for (const Jump& j : kernel.jumps()) total += std::pow(j.location, r) * std::abs(j.size);
  if (kernel.has_continuous_variation()) {
    total += integrate_split([&](double a) { return std::pow(a, r) * kernel.variation_density(a); },
                             0.0, upper_limit(kernel), kernel.breakpoints());
  }
  const double value = total.value();
  if (!std::isfinite(value)) throw NumericalError("bv_moment is not finite");
  return value;
}

TailDecayReport tail_decay_check(const Kernel& kernel, int d, std::span<const double> b_grid) {
  if (d < 1) throw DomainError("tail_decay_check: dimension must be >= 1");
  TailDecayReport report;
  for (std::size_t i = 0; i < b_grid.size(); ++i) {
    const double b = b_grid[i];
    if (!(b > 0.0) || (i > 0 && !(b > b_grid[i - 1])))
      throw DomainError("tail_decay_check: grid must be positive and increasing");
    report.rows.push_back({b, kernel(b) * std::pow(b, d + 3.0),
                           b * kernel_tail_moment(kernel, d + 1.0, b)});
  }
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const auto& prev = report.rows[i - 1];
    const auto& cur = report.rows[i];
    if (cur.scaled_value > prev.scaled_value) report.value_nonincreasing = false;
    if (cur.scaled_tail > prev.scaled_tail) report.tail_nonincreasing = false;
    if (!(cur.scaled_value < prev.scaled_value)) report.value_strictly_decreasing = false;
    if (!(cur.scaled_tail < prev.scaled_tail)) report.tail_strictly_decreasing = false;
  }
  return report;
}

} // namespace lapconv
