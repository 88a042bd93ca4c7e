#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "freebond/errors.hpp"

// Special-function kernel: everything the closed-form families need.
// All functions are pure and deterministic; no global state is touched
// (we avoid the signgam global by computing Gamma signs ourselves).

namespace freebond {

inline constexpr double kPi = 3.14159265358979323846;

/// ln Gamma(x) for x > 0.
inline double ln_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("ln_gamma: requires x > 0");
  return std::lgamma(x);
}

namespace detail {

// ln |Gamma(x)| for any non-pole x; +inf at poles is fine for our use
// (it only ever appears as exp(-inf) = 0 downstream).
inline double ln_abs_gamma(double x) { return std::lgamma(x); }

// Sign of Gamma(x): positive for x > 0, alternating between negative
// integer poles. Returns 0 at poles.
inline int gamma_sign(double x) {
  if (x > 0.0) return 1;
  if (x == std::floor(x)) return 0;  // pole
  // Gamma is negative on (-1,0), positive on (-2,-1), ...
  const double k = std::floor(x);
  return (static_cast<long long>(k) % 2 == 0) ? 1 : -1;
}

}  // namespace detail

/// 1/Gamma(x), entire; exactly 0 at x = 0, -1, -2, ...
inline double gamma_reciprocal(double x) {
  if (std::isnan(x)) throw std::domain_error("gamma_reciprocal: NaN input");
  if (x > 0.0) return std::exp(-std::lgamma(x));
  if (x == std::floor(x)) return 0.0;
  // reflection: 1/Gamma(x) = Gamma(1-x) sin(pi x) / pi
  const double s = std::sin(kPi * x);
  const double lg = std::lgamma(1.0 - x);
  // assemble in logs so the overflow threshold is honest
  const double ln_mag = lg + std::log(std::fabs(s) / kPi);
  double v = std::exp(ln_mag);
  return s < 0.0 ? -v : v;
}

namespace detail {

// Regularized P(a,x) by the ascending series, for x < a+1.
inline double gamma_p_series(double a, double x) {
  if (x <= 0.0) return 0.0;
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 0; n < 600; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-15) {
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw NumericsError("gamma_p_series: no convergence");
}

// Regularized Q(a,x) by the continued fraction (modified Lentz), x >= a+1.
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 600; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) {
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw NumericsError("gamma_q_cf: no convergence");
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a,x) = gamma(a,x)/Gamma(a).
/// Series for x < a+1, continued fraction otherwise.
inline double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("regularized_gamma_p: requires a > 0");
  if (x < 0.0) throw std::domain_error("regularized_gamma_p: requires x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

/// Lower incomplete gamma gamma(a,x) = int_0^x u^{a-1} e^{-u} du.
inline double lower_incomplete_gamma(double a, double x) {
  return regularized_gamma_p(a, x) * std::exp(std::lgamma(a));
}

/// Modified Bessel I_1. Ascending series for x <= 30, asymptotic expansion
/// beyond (the series starts losing digits around there, the expansion
/// gains them).
inline double bessel_i1(double x) {
  if (!(x >= 0.0)) throw std::domain_error("bessel_i1: requires x >= 0");
  if (x == 0.0) return 0.0;
  if (x <= 30.0) {
    // sum_k (x/2)^{2k+1} / (k! (k+1)!)
    const double h = 0.5 * x;
    double term = h;  // k = 0
    double sum = term;
    for (int k = 1; k < 200; ++k) {
      term *= h * h / (static_cast<double>(k) * (k + 1));
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return sum;
  }
  // I_1(x) ~ e^x / sqrt(2 pi x) * (1 - 3/(8x) - 15/(128 x^2) - ...),
  // term_{k+1} = term_k ((2k+1)^2 - 4) / (8(k+1)x)
  double term = 1.0, sum = 1.0;
  for (int k = 0; k < 40; ++k) {
    term *= ((2.0 * k + 1.0) * (2.0 * k + 1.0) - 4.0) / (8.0 * (k + 1) * x);
    sum += term;
    if (std::fabs(term) < 1e-17 * std::fabs(sum)) break;
  }
  return std::exp(x) / std::sqrt(2.0 * kPi * x) * sum;
}

/// Non-principal real branch W_{-1} of the Lambert W function on [-1/e, 0).
/// Branch-asymptotic initializers at both singular endpoints, then Halley.
inline double lambert_w_minus1(double x) {
  const double inv_e = std::exp(-1.0);
  if (!(x >= -inv_e) || !(x < 0.0)) {
    throw std::domain_error("lambert_w_minus1: requires x in [-1/e, 0)");
  }
  if (x == -inv_e) return -1.0;

  double w;
  if (x > -0.25) {
    // near 0^-: w ~ ln(-x) - ln(-ln(-x))
    const double l1 = std::log(-x);
    const double l2 = std::log(-l1);
    w = l1 - l2 + l2 / l1;
  } else {
    // near the branch point: w ~ -1 - s - s^2/3, s = sqrt(2(1 + e x))
    const double s = std::sqrt(2.0 * (1.0 + std::exp(1.0) * x));
    w = -1.0 - s - s * s / 3.0;
  }

  for (int it = 0; it < 50; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (f == 0.0) break;
    const double w1 = w + 1.0;
    // Halley step
    const double dw = f / (ew * w1 - (w + 2.0) * f / (2.0 * w1));
    w -= dw;
    if (std::fabs(dw) <= 1e-16 * (1.0 + std::fabs(w))) break;
  }
  if (w > -1.0) w = -1.0;  // round-off near the branch point
  return w;
}

/// Complementary error function.
inline double erfc(double x) { return std::erfc(x); }

}  // namespace freebond
