#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "freebond/cbf.hpp"
#include "freebond/errors.hpp"
#include "freebond/quadrature.hpp"
#include "freebond/rng.hpp"
#include "freebond/special_functions.hpp"
#include "freebond/stable_series.hpp"

// The Bondesson-side semigroup nu^{*t}: Laplace transform e^{-t f(z)}.
// For the inverse-Gaussian family f(0+) = 1, so nu^{*t} is the law of a
// killed subordinator with total mass e^{-t}; the CDF and density here are
// those of the sub-probability measure itself (this is what the main
// identity integrates).

namespace freebond {

struct ClassicalLaw {
  Family family;
  double t;
  StableSeriesControl series{};

  ClassicalLaw(Family fam, double time, StableSeriesControl ctl = {})
      : family(std::move(fam)), t(time), series(ctl) {
    if (!(t > 0.0)) throw std::invalid_argument("ClassicalLaw: requires t > 0");
    validate_family(family);
  }
};

/// Mass of the atom at zero (compound-Poisson families only).
inline double classical_atom_at_zero(const ClassicalLaw& law) {
  if (std::holds_alternative<PoissonExp>(law.family)) return std::exp(-law.t);
  return 0.0;
}

namespace detail {

// Standard inverse-Gaussian CDF (mean m, shape m^2), i.e. the unkilled core
// law for f0 = sqrt(1+2z) - 1. Guarded against overflow in the e^{2m} term.
inline double ig_core_cdf(double m, double y) {
  if (y <= 0.0) return 0.0;
  const double sq = std::sqrt(y);
  const double a1 = (y - m) / sq;  // Phi(a1)
  const double u = (y + m) / (std::sqrt(2.0) * sq);
  const double term1 = 0.5 * freebond::erfc(-a1 / std::sqrt(2.0));
  double term2;
  if (u < 26.0) {
    term2 = std::exp(2.0 * m) * 0.5 * freebond::erfc(u);
  } else {
    // erfc(u) ~ e^{-u^2}/(u sqrt(pi)) (1 - 1/(2u^2) + 3/(4u^4)); combine the
    // exponents first: 2m - u^2 = -(y-m)^2/(2y)
    const double ex = -(y - m) * (y - m) / (2.0 * y);
    const double u2 = u * u;
    term2 = 0.5 * std::exp(ex) / (u * std::sqrt(kPi)) *
            (1.0 - 0.5 / u2 + 0.75 / (u2 * u2));
  }
  return std::min(1.0, term1 + term2);
}

// P(n, y) for n = 1..N and Poisson(T) weights, summed recursively.
inline double poisson_exp_cdf(double T, double y) {
  const double atom = std::exp(-T);
  if (y <= 0.0) return atom;
  const int n_max = static_cast<int>(T + 12.0 * std::sqrt(T) + 30.0);
  double pois = atom;               // P(N = 0)
  double p_gamma = -std::expm1(-y); // P(1, y)
  double pdf_term = std::exp(-y);   // y^0 e^{-y} / 0!
  double cdf = atom;
  for (int n = 1; n <= n_max; ++n) {
    pois *= T / n;
    cdf += pois * p_gamma;
    // P(n+1, y) = P(n, y) - y^n e^{-y} / n!
    pdf_term *= y / n;
    p_gamma -= pdf_term;
    if (p_gamma < 0.0) p_gamma = 0.0;
  }
  return cdf;
}

}  // namespace detail

/// Right-continuous CDF of nu^{*t} at y, atom at zero included.
inline double classical_cdf(const ClassicalLaw& law, double y) {
  if (y < 0.0) throw std::domain_error("classical_cdf: requires y >= 0");
  struct V {
    const ClassicalLaw& law;
    double y;
    double operator()(const Gamma&) const {
      return y == 0.0 ? 0.0 : regularized_gamma_p(law.t, y);
    }
    double operator()(const PoissonExp&) const {
      return detail::poisson_exp_cdf(law.t, y);
    }
    double operator()(const InverseGaussian&) const {
      return std::exp(-law.t) * detail::ig_core_cdf(law.t, y);
    }
    double operator()(const FreeStable& f) const {
      if (y == 0.0) return 0.0;
      const double at = 1.0 - f.alpha;
      const auto ev = stable_cdf_series(at, law.t, y, law.series);
      const double v = ev.require("classical_cdf");
      return std::min(1.0, std::max(0.0, v));
    }
    double operator()(const CbfSpec&) const {
      throw UnsupportedFamilyError("classical_cdf: not available for custom specs");
    }
  };
  return std::visit(V{law, y}, law.family);
}

/// Density of the absolutely continuous part of nu^{*t} at y > 0.
inline double classical_pdf(const ClassicalLaw& law, double y) {
  if (!(y > 0.0)) throw std::domain_error("classical_pdf: requires y > 0");
  struct V {
    const ClassicalLaw& law;
    double y;
    double operator()(const Gamma&) const {
      return std::exp((law.t - 1.0) * std::log(y) - y - ln_gamma(law.t));
    }
    double operator()(const PoissonExp&) const {
      const double t = law.t;
      return std::sqrt(t / y) * std::exp(-t - y) * bessel_i1(2.0 * std::sqrt(t * y));
    }
    double operator()(const InverseGaussian&) const {
      const double t = law.t;
      return t / std::sqrt(2.0 * kPi * y * y * y) *
             std::exp(-t - (y - t) * (y - t) / (2.0 * y));
    }
    double operator()(const FreeStable& f) const {
      const double at = 1.0 - f.alpha;
      const auto ev = stable_pdf_series(at, law.t, y, law.series);
      return std::max(0.0, ev.require("classical_pdf"));
    }
    double operator()(const CbfSpec&) const {
      throw UnsupportedFamilyError("classical_pdf: not available for custom specs");
    }
  };
  return std::visit(V{law, y}, law.family);
}

/// | int e^{-zy} nu^{*t}(dy)  -  e^{-t f(z)} |, the two sides evaluated
/// independently (atoms + density quadrature vs. the Laplace exponent).
inline double laplace_residual(const ClassicalLaw& law, double z) {
  if (!(z > 0.0)) throw std::domain_error("laplace_residual: requires z > 0");
  const double target = std::exp(-law.t * cbf_eval(law.family, z));
  QuadratureOptions opt;
  opt.abs_tol = 1e-12;
  opt.rel_tol = 1e-9;
  double lower = 0.0;
  if (const auto* fs = std::get_if<FreeStable>(&law.family)) {
    // the series below its guard region contributes at most the Chernoff
    // bound there, which is ~1e-7 at the quadrature cutoff
    lower = stable_quadrature_cutoff(1.0 - fs->alpha, law.t);
  }
  const double integral = integrate_to_infinity_or_throw(
      [&](double y) { return std::exp(-z * y) * classical_pdf(law, y); }, lower, opt);
  return std::fabs(classical_atom_at_zero(law) + integral - target);
}

// --- exact samplers -------------------------------------------------------

namespace detail {

// Marsaglia-Tsang; shape < 1 boosted through Gamma(a+1) U^{1/a}.
inline double draw_gamma(Philox4x32& rng, double shape) {
  if (shape < 1.0) {
    const double u = rng.uniform01();
    return draw_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// Michael-Schucany-Haas transform with rejection.
inline double draw_inverse_gaussian(Philox4x32& rng, double mean, double shape) {
  const double n = rng.normal();
  const double v = n * n;
  const double x = mean + mean * mean * v / (2.0 * shape) -
                   mean / (2.0 * shape) *
                       std::sqrt(4.0 * mean * shape * v + mean * mean * v * v);
  const double u = rng.uniform01();
  if (u <= mean / (mean + x)) return x;
  return mean * mean / x;
}

// Kanter's representation of the positive stable law with E e^{-z S} = e^{-z^at}.
inline double draw_positive_stable(Philox4x32& rng, double alpha_t) {
  const double theta = kPi * rng.uniform01();
  const double e = rng.exponential();
  const double a = std::pow(std::sin(alpha_t * theta), alpha_t) *
                   std::pow(std::sin((1.0 - alpha_t) * theta), 1.0 - alpha_t) /
                   std::sin(theta);
  // a(theta)^{1/(1-at)} / E, raised to (1-at)/at
  return std::pow(std::pow(a, 1.0 / (1.0 - alpha_t)) / e, (1.0 - alpha_t) / alpha_t);
}

inline int draw_poisson(Philox4x32& rng, double lambda) {
  // multiplication method; fine for the path-scale means used here
  const double limit = std::exp(-lambda);
  int n = 0;
  double prod = rng.uniform01();
  while (prod > limit) {
    ++n;
    prod *= rng.uniform01();
  }
  return n;
}

}  // namespace detail

/// One draw of the increment Y_{dt}. The inverse-Gaussian family samples its
/// unkilled core (mean dt, shape dt^2); any e^{-kappa t} weight is applied
/// analytically by the callers, never by killing paths.
inline double sample_increment(const Family& fam, double dt, Philox4x32& rng) {
  if (!(dt > 0.0)) throw std::domain_error("sample_increment: requires dt > 0");
  struct V {
    double dt;
    Philox4x32& rng;
    double operator()(const Gamma&) const { return detail::draw_gamma(rng, dt); }
    double operator()(const PoissonExp&) const {
      const int n = detail::draw_poisson(rng, dt);
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += rng.exponential();
      return s;
    }
    double operator()(const InverseGaussian&) const {
      return detail::draw_inverse_gaussian(rng, dt, dt * dt);
    }
    double operator()(const FreeStable& f) const {
      const double at = 1.0 - f.alpha;
      return std::pow(dt, 1.0 / at) * detail::draw_positive_stable(rng, at);
    }
    double operator()(const CbfSpec&) const {
      throw UnsupportedFamilyError("sample_increment: not available for custom specs");
    }
  };
  return std::visit(V{dt, rng}, fam);
}

}  // namespace freebond
