#pragma once

#include <cmath>
#include <string>

#include "freebond/errors.hpp"
#include "freebond/special_functions.hpp"

// Alternating series for the one-sided stable semigroup and its free
// counterpart. Terms are assembled in log-magnitude + sign form, so the
// reciprocal-Gamma factors at deeply negative arguments never overflow.
//
// The series converge for every argument in exact arithmetic but cancel
// catastrophically once t y^{-alpha_t} grows: the guard below rejects
// evaluations whose largest term would wipe out more than ~9 of the 16
// float64 digits (max term > kSeriesLossCap keeps absolute error near 1e-9).

namespace freebond {

struct StableSeriesControl {
  int max_terms = 400;
  double tail_tol = 1e-15;
  // series is attempted only while t * y^{-alpha_t} stays below this;
  // past it we are in asymptotic territory, which is out of scope
  double asymptotic_switch = 8.0;
};

inline constexpr double kSeriesLossCap = 5e6;

struct SeriesEvaluation {
  double value = 0.0;
  double max_abs_term = 0.0;
  int terms_used = 0;
  bool converged = false;
  bool ratio_guard_ok = false;  // |term_{n+1}/term_n| < 0.9 seen before max_terms
  bool accepted = false;

  double require(const char* what) const {
    if (!accepted) {
      throw SeriesDivergenceError(std::string(what) +
                                  ": stable series rejected by convergence guard");
    }
    return value;
  }
};

namespace detail {

// Sums sign_n * exp(log_n) for n = 0.., with the guard policy above.
// Terms are supplied by a callable n -> (log_magnitude, sign).
template <class TermFn>
inline SeriesEvaluation sum_log_series(const TermFn& term_fn,
                                       const StableSeriesControl& ctl) {
  SeriesEvaluation ev;
  double sum = 0.0;
  double prev_abs = -1.0;
  int small_run = 0;
  for (int n = 0; n < ctl.max_terms; ++n) {
    const auto [lg, sign] = term_fn(n);
    double abs_term = 0.0;
    if (sign != 0) {
      abs_term = std::exp(lg);
      sum += sign > 0 ? abs_term : -abs_term;
      ev.max_abs_term = std::max(ev.max_abs_term, abs_term);
      if (prev_abs > 0.0 && abs_term < 0.9 * prev_abs) ev.ratio_guard_ok = true;
      prev_abs = abs_term;
    }
    ev.terms_used = n + 1;
    if (abs_term <= ctl.tail_tol * std::max(1.0, std::fabs(sum))) {
      if (++small_run >= 3 && n >= 2) {
        ev.converged = true;
        break;
      }
    } else {
      small_run = 0;
    }
  }
  ev.value = sum;
  ev.accepted = ev.converged && ev.ratio_guard_ok && ev.max_abs_term <= kSeriesLossCap;
  return ev;
}

// log|1/Gamma(s)| and its sign, valid for any real s.
inline std::pair<double, int> log_rgamma(double s) {
  const int sign = gamma_sign(s);
  if (sign == 0) return {-std::numeric_limits<double>::infinity(), 0};
  return {-ln_abs_gamma(s), sign};
}

}  // namespace detail

/// CDF of the one-sided stable semigroup at time T:
///   nu^{*T}[0, y] = sum_n (-1)^n T^n y^{-at n} / (n! Gamma(1 - at n)).
inline SeriesEvaluation stable_cdf_series(double alpha_t, double T, double y,
                                          const StableSeriesControl& ctl = {}) {
  const double q = T * std::pow(y, -alpha_t);
  if (q > ctl.asymptotic_switch) {
    SeriesEvaluation ev;  // rejected up-front
    return ev;
  }
  const double lq = std::log(q);
  auto term = [&](int n) -> std::pair<double, int> {
    auto [lr, sr] = detail::log_rgamma(1.0 - alpha_t * n);
    if (sr == 0) return {0.0, 0};
    const double lg = n * lq - detail::ln_abs_gamma(n + 1.0) + lr;
    const int sign = (n % 2 == 0 ? 1 : -1) * sr;
    return {lg, sign};
  };
  return detail::sum_log_series(term, ctl);
}

/// Density of the one-sided stable semigroup at time T:
///   (1/pi) sum_{n>=1} (-1)^{n-1} T^n Gamma(1 + at n) sin(n at pi) y^{-at n - 1} / n!.
inline SeriesEvaluation stable_pdf_series(double alpha_t, double T, double y,
                                          const StableSeriesControl& ctl = {}) {
  const double q = T * std::pow(y, -alpha_t);
  if (q > ctl.asymptotic_switch) {
    SeriesEvaluation ev;
    return ev;
  }
  const double lq = std::log(q);
  auto term = [&](int n0) -> std::pair<double, int> {
    const int n = n0 + 1;  // series starts at n = 1
    const double s = std::sin(n * alpha_t * kPi);
    // rounded zeros of sin at rational alpha_t would otherwise leak
    // ~1e-16-size terms into the ratio guard
    if (std::fabs(s) < 1e-10) return {0.0, 0};
    const double lg = n * lq + detail::ln_abs_gamma(1.0 + alpha_t * n) -
                      detail::ln_abs_gamma(n + 1.0) + std::log(std::fabs(s));
    const int sign = (n % 2 == 1 ? 1 : -1) * (s > 0 ? 1 : -1);
    return {lg, sign};
  };
  // the 1/(pi y) prefactor stays outside the sum so the cancellation guard
  // sees the same scale as the CDF series
  SeriesEvaluation ev = detail::sum_log_series(term, ctl);
  ev.value /= kPi * y;
  return ev;
}

/// Laplace transform of the free stable semigroup:
///   int e^{-wx} mu^{boxplus t}(dx) = sum_n (-1)^n w^{alpha n} t^n / (n! Gamma(2 + (alpha-1) n)).
inline SeriesEvaluation free_stable_laplace_series(double alpha, double t, double w,
                                                   const StableSeriesControl& ctl = {}) {
  const double q = t * std::pow(w, alpha);
  if (q > ctl.asymptotic_switch) {
    SeriesEvaluation ev;
    return ev;
  }
  const double lq = std::log(q);
  auto term = [&](int n) -> std::pair<double, int> {
    auto [lr, sr] = detail::log_rgamma(2.0 + (alpha - 1.0) * n);
    if (sr == 0) return {0.0, 0};
    const double lg = n * lq - detail::ln_abs_gamma(n + 1.0) + lr;
    const int sign = (n % 2 == 0 ? 1 : -1) * sr;
    return {lg, sign};
  };
  return detail::sum_log_series(term, ctl);
}

/// Smallest y at which the CDF/PDF series is attempted for time-T laws.
inline double stable_series_lower_cutoff(double alpha_t, double T,
                                         const StableSeriesControl& ctl = {}) {
  return std::pow(T / ctl.asymptotic_switch, 1.0 / alpha_t);
}

// Integrators must stay strictly inside the guard region: at the switch
// itself the loss cap already rejects, so quadratures cut at this q instead.
inline constexpr double kStableQuadratureQ = 7.5;

inline double stable_quadrature_cutoff(double alpha_t, double T) {
  return std::pow(T / kStableQuadratureQ, 1.0 / alpha_t);
}

/// Chernoff bound P(Y_T <= y) <= exp(-(1-at) (at^at T y^{-at})^{1/(1-at)}),
/// used to certify that a skipped lower region is negligible.
inline double stable_cdf_upper_bound(double alpha_t, double T, double y) {
  const double base = std::pow(alpha_t, alpha_t) * T * std::pow(y, -alpha_t);
  return std::exp(-(1.0 - alpha_t) * std::pow(base, 1.0 / (1.0 - alpha_t)));
}

}  // namespace freebond
