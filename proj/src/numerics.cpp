#include "lapconv/numerics.hpp"

#include "lapconv/errors.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <charconv>
#include <map>
#include <mutex>

namespace lapconv {

const GaussLegendreRule& gauss_legendre(int count) {
  if (count < 1) throw DomainError("gauss_legendre: node count must be positive");
  static std::mutex mutex;
  static std::map<int, GaussLegendreRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(count);
  if (it != cache.end()) return it->second;

  // legendre_p_zeros returns the nonnegative roots in ascending order.
  const auto zeros = boost::math::legendre_p_zeros<double>(count);
  GaussLegendreRule rule;
  auto weight = [count](double x) {
    const double dp = boost::math::legendre_p_prime(count, x);
    return 2.0 / ((1.0 - x * x) * dp * dp);
  };
  for (auto z = zeros.rbegin(); z != zeros.rend(); ++z) {
    if (*z == 0.0) continue;
    rule.nodes.push_back(-*z);
    rule.weights.push_back(weight(*z));
  }
  for (double z : zeros) {
    rule.nodes.push_back(z);
    rule.weights.push_back(weight(z));
  }
  return cache.emplace(count, std::move(rule)).first->second;
}

double unit_sphere_area(int d) {
  if (d < 1) throw DomainError("unit_sphere_area: dimension must be >= 1");
  const double pi = boost::math::constants::pi<double>();
  return 2.0 * std::pow(pi, 0.5 * d) / boost::math::tgamma(0.5 * d);
}

double unit_ball_volume(int d) {
  if (d < 1) throw DomainError("unit_ball_volume: dimension must be >= 1");
  return unit_sphere_area(d) / d;
}

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

} // namespace lapconv
