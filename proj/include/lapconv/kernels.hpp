#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lapconv {

/// Discontinuity of a kernel profile. `size` is the signed step K(a+) - K(a).
struct Jump {
  double location;
  double size;
};

/// A bounded-variation radial profile K : [0, inf) -> [0, inf).
///
/// At a jump the profile takes its left limit, so the indicator of [0,1] has
/// K(1) = 1. The variation function H(a) is the total variation of K on [0,a]
/// under that convention: a jump at c is counted in H(a) only for a > c.
/// The variation is stored exactly as a list of jumps plus the density |K'|
/// of the absolutely continuous part.
class Kernel {
public:
  static Kernel indicator();
  static Kernel gaussian();
  static Kernel triangular();
  static Kernel annulus();

  /// Piecewise-constant kernel from (breakpoint, value) pairs: K equals
  /// value_i on (breakpoint_{i-1}, breakpoint_i], K(0) = value_0, and K = 0
  /// past the last breakpoint. Breakpoints must be positive and increasing.
  static Kernel piecewise_constant(std::string name,
                                   std::vector<std::pair<double, double>> steps);

  /// Catalog lookup: "indicator", "gaussian", "triangular", "annulus".
  static Kernel from_name(std::string_view name);
  static std::vector<std::string> catalog_names();

  const std::string& name() const { return name_; }

  /// K(a). Throws DomainError for a < 0.
  double operator()(double a) const;

  /// H(a), the total variation of K on [0, a].
  double total_variation(double a) const;

  /// H(inf).
  double total_variation_limit() const;

  /// Radius past which K vanishes identically; empty for the Gaussian.
  std::optional<double> support_radius() const { return support_; }

  std::span<const Jump> jumps() const { return jumps_; }

  /// sup_a K(a).
  double sup_norm() const { return sup_; }

  /// Density |K'| of the absolutely continuous part of dH (zero where absent).
  double variation_density(double a) const;
  bool has_continuous_variation() const { return static_cast<bool>(variation_density_); }

  /// Closed-form value of the integral of K(a) a^q over [0, inf), when known.
  std::optional<double> closed_form_moment(double q) const;

  /// Points where the profile or its derivative is not smooth (jumps and the
  /// support edge), ascending. Quadrature splits panels there.
  std::vector<double> breakpoints() const;

private:
  Kernel() = default;

  std::string name_;
  std::function<double(double)> profile_;
  std::function<double(double)> variation_density_;
  std::function<double(double)> continuous_variation_;  // integral of |K'| on [0,a]
  std::function<double(double)> moment_;
  std::vector<Jump> jumps_;
  std::optional<double> support_;
  double sup_ = 0.0;
};

/// Integral of K(a) a^q over [0, inf): closed form when available, otherwise
/// adaptive quadrature split at the kernel breakpoints (relative tolerance
/// 1e-10). A divergent or non-finite result throws NumericalError.
double kernel_moment(const Kernel& kernel, double q);

/// The adaptive-quadrature route of kernel_moment, regardless of closed forms.
double kernel_moment_quadrature(const Kernel& kernel, double q);

/// Integral of K(a) a^q over [b, inf).
double kernel_tail_moment(const Kernel& kernel, double q, double b);

/// c0 = (1/d) S_{d-1} * integral of K(a) a^{d+1}.
double c0(const Kernel& kernel, int d);

/// Integral of a^r dH(a): exact jump contributions plus quadrature over the
/// absolutely continuous part.
double bv_moment(const Kernel& kernel, double r);

struct TailDecayRow {
  double b;
  double scaled_value;  // K(b) b^{d+3}
  double scaled_tail;   // b * integral_b^inf K(a) a^{d+1} da
};

struct TailDecayReport {
  std::vector<TailDecayRow> rows;
  bool value_nonincreasing = true;
  bool tail_nonincreasing = true;
  bool value_strictly_decreasing = true;
  bool tail_strictly_decreasing = true;
};

/// Evaluates both o(1) quantities of the tail estimate on an increasing grid
/// of positive b and flags whether each sequence decreases.
TailDecayReport tail_decay_check(const Kernel& kernel, int d, std::span<const double> b_grid);

} // namespace lapconv
