#pragma once

// Bessel functions of the first kind for the integer and half-integer orders
// that isotropic covariance kernels need (nu <= 10, i.e. d <= 16).
//
//   x <= 12, integer nu      ascending series
//   x  > 12, integer nu      Hankel expansion for J_0, J_1, then upward recurrence
//   half-integer nu, x >= nu terminating (closed-form) trigonometric expansion
//   half-integer nu, x <  nu ascending series (nu = 1/2 always closed form)

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "ibf/error.hpp"

namespace ibf {

inline constexpr double kMaxBesselOrder = 10.0;
inline constexpr double kSeriesSplit = 12.0;

namespace detail {

/// Returns 2*nu after checking nu is a supported half-integer multiple.
inline int twice_order(double nu) {
  const double t = 2.0 * nu;
  const long k = std::lround(t);
  if (!(nu >= 0.0) || nu > kMaxBesselOrder || std::abs(t - static_cast<double>(k)) > 1e-12) {
    throw ParameterError("bessel: order must be a multiple of 1/2 in [0, 10]");
  }
  return static_cast<int>(k);
}

inline void check_argument(double x) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw ParameterError("bessel: argument must be finite and >= 0");
  }
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

/// Hankel asymptotic expansion, truncated at the smallest term.
/// Terminates (and is exact) for half-integer orders.
inline double hankel_expansion(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  for (int k = 1; k < 80; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * (mu - odd * odd) / (k * 8.0 * x);
    if (next == 0.0) break;
    if (k > 2 && std::abs(next) > std::abs(term)) break;
    term = next;
    // sign pattern: a1 -> Q(+), a2 -> P(-), a3 -> Q(-), a4 -> P(+), ...
    const int phase = k % 4;
    if (phase == 1) q += term;
    else if (phase == 2) p -= term;
    else if (phase == 3) q -= term;
    else p += term;
    if (std::abs(term) < 1e-18) break;
  }
  const double chi = x - (0.5 * nu + 0.25) * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace detail

/// Ascending power series. Accurate for x <= 12; exposed for cross-checks.
inline double bessel_j_series(double nu, double x) {
  detail::twice_order(nu);
  detail::check_argument(x);
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  const double q = 0.25 * x * x;
  double term = std::pow(0.5 * x, nu) / std::tgamma(nu + 1.0);
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= -q / (k * (k + nu));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum) && k > 0.5 * x) break;
  }
  return sum;
}

/// Closed form J_{n+1/2}(x) = sqrt(2/(pi x)) [P sin(x - n pi/2) + Q cos(x - n pi/2)]
/// with the finite polynomials P, Q in 1/x. Loses relative accuracy for x << n.
inline double bessel_j_half_closed_form(double nu, double x) {
  const int twice = detail::twice_order(nu);
  if (twice % 2 != 1) {
    throw ParameterError("bessel_j_half_closed_form: order must be n + 1/2");
  }
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw ParameterError("bessel_j_half_closed_form: argument must be finite and > 0");
  }
  const int n = (twice - 1) / 2;
  const double inv2x = 1.0 / (2.0 * x);
  double p = 0.0;
  for (int k = 0; 2 * k <= n; ++k) {
    const double c = detail::factorial(n + 2 * k) /
                     (detail::factorial(2 * k) * detail::factorial(n - 2 * k));
    p += ((k % 2) ? -c : c) * std::pow(inv2x, 2 * k);
  }
  double q = 0.0;
  for (int k = 0; 2 * k + 1 <= n; ++k) {
    const double c = detail::factorial(n + 2 * k + 1) /
                     (detail::factorial(2 * k + 1) * detail::factorial(n - 2 * k - 1));
    q += ((k % 2) ? -c : c) * std::pow(inv2x, 2 * k + 1);
  }
  const double phase = x - 0.5 * n * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::sin(phase) + q * std::cos(phase));
}

inline double bessel_j(double nu, double x) {
  const int twice = detail::twice_order(nu);
  detail::check_argument(x);
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  if (twice % 2 == 1) {
    if (twice == 1 || x >= nu) return bessel_j_half_closed_form(nu, x);
    return bessel_j_series(nu, x);
  }
  if (x <= kSeriesSplit) return bessel_j_series(nu, x);
  const int n = twice / 2;
  double jm = detail::hankel_expansion(0.0, x);
  if (n == 0) return jm;
  double j = detail::hankel_expansion(1.0, x);
  for (int k = 1; k < n; ++k) {
    const double next = 2.0 * k / x * j - jm;
    jm = j;
    j = next;
  }
  return j;
}

/// Normalized Bessel function Gamma(nu+1) (2/z)^nu J_nu(z); equals 1 at z = 0.
inline double normalized_bessel(double nu, double z) {
  if (z <= kSeriesSplit) {
    const double q = -0.25 * z * z;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= q / (k * (k + nu));
      sum += term;
      if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }
  return std::tgamma(nu + 1.0) * std::pow(2.0 / z, nu) * bessel_j(nu, z);
}

/// normalized_bessel(nu, z) - 1 without cancellation at small z.
inline double normalized_bessel_m1(double nu, double z) {
  if (z <= kSeriesSplit) {
    const double q = -0.25 * z * z;
    double term = q / (nu + 1.0);
    double sum = term;
    for (int k = 2; k < 200; ++k) {
      term *= q / (k * (k + nu));
      sum += term;
      if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }
  return normalized_bessel(nu, z) - 1.0;
}

/// Positive zeros of J_nu in (lo, hi]: sign changes on a 0.05 grid refined by bisection.
inline std::vector<double> bessel_zeros_in(double nu, double lo, double hi) {
  detail::twice_order(nu);
  std::vector<double> zeros;
  if (!(hi > lo)) return zeros;
  constexpr double step = 0.05;
  double a = std::max(lo, 0.0);
  double fa = bessel_j(nu, a);
  const bool skip_origin = (a == 0.0);
  while (a < hi) {
    const double b = std::min(a + step, hi);
    const double fb = bessel_j(nu, b);
    if (fa == 0.0 && !(skip_origin && a == 0.0) && a > lo) {
      zeros.push_back(a);
    } else if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
      double left = a;
      double right = b;
      double fl = fa;
      for (int it = 0; it < 200 && right - left > 1e-13; ++it) {
        const double mid = 0.5 * (left + right);
        const double fm = bessel_j(nu, mid);
        if (fm == 0.0) {
          left = right = mid;
          break;
        }
        if ((fm < 0.0) == (fl < 0.0)) {
          left = mid;
          fl = fm;
        } else {
          right = mid;
        }
      }
      zeros.push_back(0.5 * (left + right));
    }
    a = b;
    fa = fb;
  }
  if (fa == 0.0 && a > lo && (zeros.empty() || zeros.back() < a)) zeros.push_back(a);
  return zeros;
}

}  // namespace ibf
