#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include "freebond/classical.hpp"
#include "freebond/errors.hpp"
#include "freebond/quadrature.hpp"
#include "freebond/rng.hpp"

// Monte Carlo verification of the probabilistic core: simulate the
// subordinator Y, extract first-passage times tau_y = inf{ t : t - Y_t >= y },
// and check Kendall's identity plus the renewal-density characterization
// u(s) = Laplace transform of mu^{boxplus 1}.
//
// The workhorse observable is M(s) = max_{u <= s} (u - Y_u): tau_y <= s iff
// M(s) >= y, so Lebesgue integrals over y collapse to differences of M per
// path. The reflected process has unit drift, so M is 1-Lipschitz and the
// histogram contributions below are bounded by 1.
//
// The inverse-Gaussian family is simulated from its unkilled core
// (f(0+) = 0 after the kappa split); no path killing anywhere.

namespace freebond {

struct PathSample {
  bool is_jump_path = false;
  double horizon = 0.0;
  // jump representation (compound Poisson families)
  std::vector<double> jump_times;
  std::vector<double> jump_sizes;
  // grid representation (everything else): exact Y increments over full steps;
  // the grid extends to ceil(horizon/step) cells
  double grid_step = 0.0;
  std::vector<double> grid_increments;
};

/// Exact-in-law path of Y on [0, horizon]. Poisson-exponential paths are
/// stored jump by jump; other families as exact increments on the step grid.
inline PathSample simulate_path(const Family& fam, double horizon, double step,
                                Philox4x32& rng) {
  if (horizon < 0.0) throw std::domain_error("simulate_path: requires horizon >= 0");
  if (std::holds_alternative<CbfSpec>(fam)) {
    throw UnsupportedFamilyError("simulate_path: not available for custom specs");
  }
  PathSample path;
  path.horizon = horizon;
  path.is_jump_path = std::holds_alternative<PoissonExp>(fam);
  path.grid_step = step;
  if (horizon == 0.0) return path;
  if (path.is_jump_path) {
    double t = rng.exponential();
    while (t <= horizon) {
      path.jump_times.push_back(t);
      path.jump_sizes.push_back(rng.exponential());
      t += rng.exponential();
    }
    return path;
  }
  if (!(step > 0.0)) throw std::domain_error("simulate_path: requires step > 0");
  const auto n = static_cast<std::size_t>(std::ceil(horizon / step - 1e-12));
  path.grid_increments.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    path.grid_increments[k] = sample_increment(fam, step, rng);
  }
  return path;
}

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace detail

/// tau_y for a stored path; +infinity when not reached by the horizon.
/// Exact for jump paths (t - Y_t rises with unit slope between jumps);
/// linear interpolation of t - Y_t within a grid step otherwise.
inline double first_passage(const PathSample& path, double y) {
  if (!(y > 0.0)) throw std::domain_error("first_passage: requires y > 0");
  if (path.is_jump_path) {
    double drawdown = 0.0;  // Y_t - 0 after the jumps processed so far
    for (std::size_t i = 0; i < path.jump_times.size(); ++i) {
      // just before jump i the reflected process reaches jump_times[i] - drawdown
      if (path.jump_times[i] - drawdown >= y) return y + drawdown;
      drawdown += path.jump_sizes[i];
    }
    const double tau = y + drawdown;
    return tau <= path.horizon ? tau : detail::kInf;
  }
  double Y = 0.0, prev_val = 0.0;
  for (std::size_t k = 0; k < path.grid_increments.size(); ++k) {
    const double t_next = static_cast<double>(k + 1) * path.grid_step;
    Y += path.grid_increments[k];
    const double val = t_next - Y;
    if (val >= y) {
      const double frac = (y - prev_val) / (val - prev_val);
      const double tau = t_next - path.grid_step + frac * path.grid_step;
      return tau <= path.horizon ? tau : detail::kInf;
    }
    prev_val = val;
  }
  return detail::kInf;
}

/// Running maximum M(s) = max_{u <= s} (u - Y_u) at each requested s
/// (sorted ascending, s <= horizon). One pass over the path.
inline void reflected_running_max(const PathSample& path, std::span<const double> s,
                                  std::span<double> out) {
  double m = 0.0;
  std::size_t qi = 0;
  if (path.is_jump_path) {
    double drawdown = 0.0;
    std::size_t j = 0;
    while (qi < s.size()) {
      const double sq = s[qi];
      while (j < path.jump_times.size() && path.jump_times[j] <= sq) {
        m = std::max(m, path.jump_times[j] - drawdown);
        drawdown += path.jump_sizes[j];
        ++j;
      }
      out[qi] = std::max(m, sq - drawdown);
      ++qi;
    }
    return;
  }
  double Y = 0.0;
  std::size_t k = 0;
  while (qi < s.size()) {
    const double sq = s[qi];
    while (k < path.grid_increments.size() &&
           static_cast<double>(k + 1) * path.grid_step <= sq) {
      Y += path.grid_increments[k];
      m = std::max(m, static_cast<double>(k + 1) * path.grid_step - Y);
      ++k;
    }
    double val = -detail::kInf;
    if (k < path.grid_increments.size()) {
      const double t_k = static_cast<double>(k) * path.grid_step;
      const double frac = (sq - t_k) / path.grid_step;
      if (frac > 0.0) val = sq - (Y + frac * path.grid_increments[k]);
    }
    out[qi] = std::max(m, val);
    ++qi;
  }
}

/// Y at time s (exact for jump paths, linear interpolation on grids).
inline double path_value(const PathSample& path, double s) {
  if (path.is_jump_path) {
    double Y = 0.0;
    for (std::size_t i = 0; i < path.jump_times.size() && path.jump_times[i] <= s; ++i) {
      Y += path.jump_sizes[i];
    }
    return Y;
  }
  double Y = 0.0;
  const double steps = s / path.grid_step;
  const auto full = std::min(path.grid_increments.size(),
                             static_cast<std::size_t>(std::floor(steps)));
  for (std::size_t k = 0; k < full; ++k) Y += path.grid_increments[k];
  if (full < path.grid_increments.size()) {
    Y += (steps - static_cast<double>(full)) * path.grid_increments[full];
  }
  return Y;
}

namespace detail {

// Deterministic parallel map over path indices: every path owns the stream
// (seed, stream_base + index), so results do not depend on the thread count;
// reductions happen sequentially afterwards.
template <class Fn>
inline void for_each_path(long n_paths, int threads, const Fn& fn) {
  if (threads <= 1) {
    for (long i = 0; i < n_paths; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&]() {
      constexpr long kChunk = 256;
      for (;;) {
        const long base = next.fetch_add(kChunk);
        if (base >= n_paths) return;
        const long stop = std::min(n_paths, base + kChunk);
        for (long i = base; i < stop; ++i) fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

struct MeanStderr {
  double mean = 0.0, se = 0.0;
};

inline MeanStderr mean_stderr(std::span<const double> xs) {
  MeanStderr out;
  if (xs.empty()) return out;
  const double n = static_cast<double>(xs.size());
  double s = 0.0;
  for (double v : xs) s += v;
  out.mean = s / n;
  double ss = 0.0;
  for (double v : xs) ss += (v - out.mean) * (v - out.mean);
  out.se = xs.size() > 1 ? std::sqrt(ss / (n * (n - 1.0))) : 0.0;
  return out;
}

}  // namespace detail

struct Interval {
  double lo, hi;
};

struct KendallCellReport {
  double s_lo, s_hi, y_lo, y_hi;
  double lhs = 0.0, rhs = 0.0;
  double stderr_combined = 0.0;
  long n_paths = 0;
  long lhs_hits = 0, rhs_hits = 0;
  std::uint64_t seed = 0;
  bool pass = false;
};

/// Both sides of Kendall's identity integrated over (s, y) cells, using two
/// independent populations:
///   lhs: int_cell P(tau_y in ds) dy = E leb{ y in y-cell : tau_y in s-cell },
///        read off M at the cell edges of one simulated path per draw;
///   rhs: int_cell (y/s) P(s - Y_s in dy) ds, with s uniform on the s-cell
///        and Y_s drawn exactly in one shot.
/// All cells share the lhs path population (streams 2i; rhs uses 2i+1).
inline std::vector<KendallCellReport> kendall_check_cells(
    const Family& fam, std::span<const Interval> s_cells,
    std::span<const Interval> y_cells, long n_paths, std::uint64_t seed,
    double step = 1e-3, int threads = 1) {
  if (s_cells.size() != y_cells.size() || s_cells.empty()) {
    throw std::invalid_argument("kendall_check_cells: cell lists must match");
  }
  const std::size_t nc = s_cells.size();
  double horizon = 0.0;
  for (std::size_t c = 0; c < nc; ++c) {
    if (!(s_cells[c].lo > 0.0) || !(s_cells[c].hi > s_cells[c].lo) ||
        !(y_cells[c].lo > 0.0) || !(y_cells[c].hi > y_cells[c].lo)) {
      throw std::invalid_argument("kendall_check_cells: cells must be away from 0");
    }
    horizon = std::max(horizon, s_cells[c].hi);
  }

  // edge times, sorted once
  std::vector<double> edges;
  for (std::size_t c = 0; c < nc; ++c) {
    edges.push_back(s_cells[c].lo);
    edges.push_back(s_cells[c].hi);
  }
  std::vector<std::size_t> order(edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return edges[a] < edges[b]; });
  std::vector<double> sorted_edges(edges.size());
  std::vector<std::size_t> rank(edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted_edges[i] = edges[order[i]];
    rank[order[i]] = i;
  }

  const auto np = static_cast<std::size_t>(n_paths);
  std::vector<double> lhs_vals(np * nc), rhs_vals(np * nc);
  std::vector<char> lhs_hit(np * nc, 0), rhs_hit(np * nc, 0);

  detail::for_each_path(n_paths, threads, [&](long i) {
    const auto ui = static_cast<std::size_t>(i);
    {  // lhs population
      Philox4x32 rng(seed, 2 * static_cast<std::uint64_t>(i));
      const PathSample path = simulate_path(fam, horizon, step, rng);
      std::vector<double> m(sorted_edges.size());
      reflected_running_max(path, std::span(sorted_edges), std::span(m));
      for (std::size_t c = 0; c < nc; ++c) {
        const double m_lo = m[rank[2 * c]], m_hi = m[rank[2 * c + 1]];
        const double overlap = std::max(
            0.0, std::min(y_cells[c].hi, m_hi) - std::max(y_cells[c].lo, m_lo));
        lhs_vals[ui * nc + c] = overlap;
        lhs_hit[ui * nc + c] = overlap > 0.0;
      }
    }
    {  // rhs population: one exact marginal draw per cell
      Philox4x32 rng(seed, 2 * static_cast<std::uint64_t>(i) + 1);
      for (std::size_t c = 0; c < nc; ++c) {
        const double su =
            s_cells[c].lo + (s_cells[c].hi - s_cells[c].lo) * rng.uniform01();
        const double v = su - sample_increment(fam, su, rng);
        const bool in_cell = v >= y_cells[c].lo && v < y_cells[c].hi;
        rhs_vals[ui * nc + c] =
            in_cell ? (s_cells[c].hi - s_cells[c].lo) * (v / su) : 0.0;
        rhs_hit[ui * nc + c] = in_cell;
      }
    }
  });

  std::vector<KendallCellReport> reports(nc);
  std::vector<double> col(np);
  for (std::size_t c = 0; c < nc; ++c) {
    KendallCellReport& rep = reports[c];
    rep.s_lo = s_cells[c].lo;
    rep.s_hi = s_cells[c].hi;
    rep.y_lo = y_cells[c].lo;
    rep.y_hi = y_cells[c].hi;
    rep.n_paths = n_paths;
    rep.seed = seed;
    for (std::size_t i = 0; i < np; ++i) {
      rep.lhs_hits += lhs_hit[i * nc + c];
      rep.rhs_hits += rhs_hit[i * nc + c];
    }
    if (rep.lhs_hits < 50 || rep.rhs_hits < 50) {
      throw DegenerateCellError("kendall_check: cell received fewer than 50 hits");
    }
    for (std::size_t i = 0; i < np; ++i) col[i] = lhs_vals[i * nc + c];
    const auto l = detail::mean_stderr(col);
    for (std::size_t i = 0; i < np; ++i) col[i] = rhs_vals[i * nc + c];
    const auto r = detail::mean_stderr(col);
    rep.lhs = l.mean;
    rep.rhs = r.mean;
    rep.stderr_combined = std::sqrt(l.se * l.se + r.se * r.se);
    rep.pass = std::fabs(rep.lhs - rep.rhs) <= 3.0 * rep.stderr_combined;
  }
  return reports;
}

inline KendallCellReport kendall_check(const Family& fam, Interval s_cell,
                                       Interval y_cell, long n_paths,
                                       std::uint64_t seed, double step = 1e-3,
                                       int threads = 1) {
  return kendall_check_cells(fam, std::span(&s_cell, 1), std::span(&y_cell, 1),
                             n_paths, seed, step, threads)[0];
}

/// Deterministic side of the renewal characterization:
///   u(s) = (1/s) int_0^s nu^{*s}[0, y] dy, by adaptive quadrature.
/// (For free-stable laws the region below the series cutoff contributes at
/// most y_cut * CDF-bound there, which is certified negligible.)
inline double renewal_density_formula(const Family& fam, double s) {
  if (!(s > 0.0)) throw std::domain_error("renewal_density_formula: requires s > 0");
  const ClassicalLaw law(fam, s);
  QuadratureOptions opt{1e-11, 1e-10, 20000};
  double lower = 0.0;
  if (const auto* fs = std::get_if<FreeStable>(&fam)) {
    lower = std::min(s, stable_quadrature_cutoff(1.0 - fs->alpha, s));
  }
  const double integral =
      integrate_or_throw([&](double y) { return classical_cdf(law, y); }, lower, s, opt);
  return integral / s;
}

struct RenewalEstimate {
  std::vector<double> s_grid, u_hat, std_err, u_formula;
  long n_paths = 0;
  std::uint64_t seed = 0;
  double y_max = 0.0;
  double bin_width = 0.0;
  bool y_max_ok = false;
  bool empty = true;
};

/// Histogram estimate of the renewal density u(s) from binned tau_y passages:
///   u_hat(s) = E[ min(M(s + d/2), y_max) - min(M(s - d/2), y_max) ] / d.
inline RenewalEstimate renewal_mc(const Family& fam, std::span<const double> s_grid,
                                  long n_paths, double y_max, std::uint64_t seed,
                                  double step = 1e-3, int threads = 1,
                                  double bin_width = 0.05) {
  RenewalEstimate est;
  est.s_grid.assign(s_grid.begin(), s_grid.end());
  est.n_paths = n_paths;
  est.seed = seed;
  est.y_max = y_max;
  est.bin_width = bin_width;
  if (n_paths <= 0) return est;  // flagged empty

  const std::size_t ns = s_grid.size();
  std::vector<double> edges(2 * ns);
  double horizon = 0.0;
  for (std::size_t j = 0; j < ns; ++j) {
    edges[2 * j] = s_grid[j] - 0.5 * bin_width;
    edges[2 * j + 1] = s_grid[j] + 0.5 * bin_width;
    if (!(edges[2 * j] > 0.0)) {
      throw std::invalid_argument("renewal_mc: bin extends below 0");
    }
    horizon = std::max(horizon, edges[2 * j + 1]);
  }
  if (!std::is_sorted(edges.begin(), edges.end())) {
    throw std::invalid_argument("renewal_mc: s_grid bins must be disjoint ascending");
  }

  const auto np = static_cast<std::size_t>(n_paths);
  std::vector<double> contrib(np * ns);
  std::vector<char> tail_hit(np, 0);
  detail::for_each_path(n_paths, threads, [&](long i) {
    const auto ui = static_cast<std::size_t>(i);
    Philox4x32 rng(seed, static_cast<std::uint64_t>(i));
    const PathSample path = simulate_path(fam, horizon, step, rng);
    std::vector<double> m(2 * ns);
    reflected_running_max(path, std::span(edges), std::span(m));
    for (std::size_t j = 0; j < ns; ++j) {
      contrib[ui * ns + j] =
          (std::min(m[2 * j + 1], y_max) - std::min(m[2 * j], y_max)) / bin_width;
    }
    tail_hit[ui] = m[2 * ns - 1] >= y_max;
  });

  long tails = 0;
  for (std::size_t i = 0; i < np; ++i) tails += tail_hit[i];
  est.y_max_ok = static_cast<double>(tails) / static_cast<double>(n_paths) < 1e-3;
  est.empty = false;

  std::vector<double> column(np);
  for (std::size_t j = 0; j < ns; ++j) {
    for (std::size_t i = 0; i < np; ++i) column[i] = contrib[i * ns + j];
    const auto ms = detail::mean_stderr(column);
    est.u_hat.push_back(ms.mean);
    est.std_err.push_back(ms.se);
    est.u_formula.push_back(renewal_density_formula(fam, s_grid[j]));
  }
  return est;
}

/// Pathwise-coupled probe of the grid-discretization bias of u_hat: the same
/// fine increments are evaluated at step and at 2*step (pairwise sums), so
/// the mean difference estimates bias(2h) - bias(h) ~ bias(2h)/2 with tiny
/// variance. Grid families only.
struct GridBiasProbe {
  std::vector<double> mean_diff, se_diff;  // per s_grid entry
};

inline GridBiasProbe renewal_grid_bias_probe(const Family& fam,
                                             std::span<const double> s_grid,
                                             long n_paths, double y_max,
                                             std::uint64_t seed, double step,
                                             int threads = 1, double bin_width = 0.05) {
  const std::size_t ns = s_grid.size();
  std::vector<double> edges(2 * ns);
  double horizon = 0.0;
  for (std::size_t j = 0; j < ns; ++j) {
    edges[2 * j] = s_grid[j] - 0.5 * bin_width;
    edges[2 * j + 1] = s_grid[j] + 0.5 * bin_width;
    horizon = std::max(horizon, edges[2 * j + 1]);
  }
  const auto np = static_cast<std::size_t>(n_paths);
  std::vector<double> diff(np * ns);
  detail::for_each_path(n_paths, threads, [&](long i) {
    const auto ui = static_cast<std::size_t>(i);
    Philox4x32 rng(seed, static_cast<std::uint64_t>(i));
    PathSample fine = simulate_path(fam, horizon, step, rng);
    PathSample coarse;
    coarse.horizon = fine.horizon;
    coarse.grid_step = 2.0 * step;
    coarse.grid_increments.resize((fine.grid_increments.size() + 1) / 2);
    for (std::size_t k = 0; k + 1 < fine.grid_increments.size(); k += 2) {
      coarse.grid_increments[k / 2] =
          fine.grid_increments[k] + fine.grid_increments[k + 1];
    }
    if (fine.grid_increments.size() % 2 == 1) {
      coarse.grid_increments.back() = fine.grid_increments.back();
    }
    std::vector<double> mf(2 * ns), mc(2 * ns);
    reflected_running_max(fine, std::span(edges), std::span(mf));
    reflected_running_max(coarse, std::span(edges), std::span(mc));
    for (std::size_t j = 0; j < ns; ++j) {
      const double uf = (std::min(mf[2 * j + 1], y_max) - std::min(mf[2 * j], y_max));
      const double uc = (std::min(mc[2 * j + 1], y_max) - std::min(mc[2 * j], y_max));
      diff[ui * ns + j] = (uc - uf) / bin_width;
    }
  });
  GridBiasProbe probe;
  std::vector<double> column(np);
  for (std::size_t j = 0; j < ns; ++j) {
    for (std::size_t i = 0; i < np; ++i) column[i] = diff[i * ns + j];
    const auto ms = detail::mean_stderr(column);
    probe.mean_diff.push_back(ms.mean);
    probe.se_diff.push_back(ms.se);
  }
  return probe;
}

/// Empirical Laplace transform of tau_1, truncated at the horizon:
///   psi_hat(z) = -log E[e^{-z tau_1} ; tau_1 <= horizon].
struct TauLaplaceEstimate {
  double value = 0.0;
  double std_err = 0.0;
  double psi_hat = 0.0;
  double psi_se = 0.0;  // delta method
};

inline TauLaplaceEstimate empirical_tau_laplace(const Family& fam, double z,
                                                long n_paths, double horizon,
                                                double step, std::uint64_t seed,
                                                int threads = 1) {
  const auto np = static_cast<std::size_t>(n_paths);
  std::vector<double> vals(np);
  detail::for_each_path(n_paths, threads, [&](long i) {
    Philox4x32 rng(seed, static_cast<std::uint64_t>(i));
    const PathSample path = simulate_path(fam, horizon, step, rng);
    const double tau = first_passage(path, 1.0);
    vals[static_cast<std::size_t>(i)] = std::isfinite(tau) ? std::exp(-z * tau) : 0.0;
  });
  const auto ms = detail::mean_stderr(vals);
  TauLaplaceEstimate est;
  est.value = ms.mean;
  est.std_err = ms.se;
  est.psi_hat = -std::log(ms.mean);
  est.psi_se = ms.se / ms.mean;
  return est;
}

/// Deterministic root psi(z) of q - f0(q) = z (f0 = exponent without the
/// killing term), by bracketing bisection: q - f0(q) is convex with a single
/// sign change on (0, inf) for z > 0.
inline double psi_root(const Family& fam, double z) {
  if (!(z > 0.0)) throw std::domain_error("psi_root: requires z > 0");
  auto g = [&](double q) { return q - laplace_exponent_core(fam, q) - z; };
  double hi = std::max(1.0, 2.0 * z);
  while (g(hi) < 0.0) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
    if (hi - lo <= 1e-15 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace freebond
