#pragma once

// 50-digit power-series evaluation of J_nu, used only as a test oracle.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace ibf::testing {

inline double bessel_j_oracle(double nu, double x) {
  using big = boost::multiprecision::cpp_bin_float_50;
  const big half_x = big(x) / 2;
  const big q = -half_x * half_x;
  big term = boost::multiprecision::pow(half_x, big(nu)) / boost::math::tgamma(big(nu) + 1);
  big sum = term;
  for (int k = 1; k < 400; ++k) {
    term *= q / (big(k) * (big(k) + big(nu)));
    sum += term;
    if (k > x && abs(term) < abs(sum) * big("1e-40")) break;
  }
  return static_cast<double>(sum);
}

}  // namespace ibf::testing
