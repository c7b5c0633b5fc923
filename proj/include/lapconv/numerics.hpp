#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace lapconv {

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Rules are cached per node count; the returned reference stays valid.
const GaussLegendreRule& gauss_legendre(int count);

/// Volume S_{d-1} of the unit sphere in R^d, i.e. 2 pi^{d/2} / Gamma(d/2).
double unit_sphere_area(int d);

/// Volume V_d of the unit ball in R^d.
double unit_ball_volume(int d);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

} // namespace lapconv
