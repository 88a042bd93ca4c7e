#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "freebond/errors.hpp"

// Adaptive Gauss-Kronrod 15(7) integrator. The rule is open (no endpoint
// evaluations), which is what integrable endpoint singularities and the
// [a, inf) transform need.

namespace freebond {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_intervals = 8000;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long evaluations = 0;
  bool converged = false;
};

namespace detail {

// Kronrod-15 nodes/weights on [-1,1] (QUADPACK dqk15), Gauss-7 embedded.
inline constexpr double kGK15Nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kGK15WeightsK[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double kGK15WeightsG[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
inline void gk15(const F& f, double a, double b, double& value, double& err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(c - h * kGK15Nodes[i]);
    fv[14 - i] = f(c + h * kGK15Nodes[i]);
  }
  fv[7] = f(c);
  double resk = kGK15WeightsK[7] * fv[7];
  double resg = kGK15WeightsG[3] * fv[7];
  for (int i = 0; i < 7; ++i) {
    resk += kGK15WeightsK[i] * (fv[i] + fv[14 - i]);
    if (i % 2 == 1) resg += kGK15WeightsG[i / 2] * (fv[i] + fv[14 - i]);
  }
  value = resk * h;
  const double diff = std::fabs((resk - resg) * h);
  // QUADPACK-style sharpened estimate
  err = diff;
  if (diff > 0.0) {
    double resabs = 0.0;
    for (int i = 0; i < 15; ++i) resabs += std::fabs(fv[i]);
    resabs *= std::fabs(h) * 2.0 / 15.0;
    if (resabs > 0.0) {
      err = resabs * std::min(1.0, std::pow(200.0 * diff / resabs, 1.5));
      err = std::max(err, diff * 1e-6);
    }
  }
}

struct Panel {
  double a, b, value, err;
  bool operator<(const Panel& o) const { return err < o.err; }
};

}  // namespace detail

/// Adaptive integration of f over [a, b].
template <class F>
inline QuadratureResult integrate(const F& f, double a, double b,
                                  const QuadratureOptions& opt = {}) {
  QuadratureResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<detail::Panel> panels;
  detail::Panel p0{a, b, 0.0, 0.0};
  detail::gk15(f, a, b, p0.value, p0.err);
  out.evaluations = 15;
  double total = p0.value, total_err = p0.err;
  panels.push(p0);
  int n = 1;
  for (;;) {
    if (!std::isfinite(total) || !std::isfinite(total_err)) {
      out.converged = false;
      break;
    }
    if (total_err <= std::max(opt.abs_tol, opt.rel_tol * std::fabs(total))) {
      out.converged = true;
      break;
    }
    if (n >= opt.max_intervals || panels.empty()) {
      out.converged = false;
      break;
    }
    detail::Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // interval exhausted at machine precision; accept its estimate
      total_err -= worst.err;
      continue;
    }
    detail::Panel left{worst.a, mid, 0.0, 0.0}, right{mid, worst.b, 0.0, 0.0};
    detail::gk15(f, left.a, left.b, left.value, left.err);
    detail::gk15(f, right.a, right.b, right.value, right.err);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_err += left.err + right.err - worst.err;
    panels.push(left);
    panels.push(right);
    ++n;
  }
  out.value = total;
  out.error_estimate = total_err;
  return out;
}

/// Adaptive integration of f over [a, inf) via x = a + u/(1-u).
template <class F>
inline QuadratureResult integrate_to_infinity(const F& f, double a,
                                              const QuadratureOptions& opt = {}) {
  auto g = [&](double u) {
    const double om = 1.0 - u;
    const double x = a + u / om;
    if (!std::isfinite(x)) return 0.0;
    const double v = f(x);
    return v / (om * om);
  };
  return integrate(g, 0.0, 1.0, opt);
}

template <class F>
inline double integrate_or_throw(const F& f, double a, double b,
                                 const QuadratureOptions& opt = {}) {
  const auto r = integrate(f, a, b, opt);
  if (!r.converged) throw QuadratureError("adaptive quadrature did not converge");
  return r.value;
}

template <class F>
inline double integrate_to_infinity_or_throw(const F& f, double a,
                                             const QuadratureOptions& opt = {}) {
  const auto r = integrate_to_infinity(f, a, opt);
  if (!r.converged) throw QuadratureError("adaptive quadrature did not converge");
  return r.value;
}

}  // namespace freebond
