#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "freebond/free_semigroup.hpp"
#include "freebond/special_functions.hpp"
#include "oracles.hpp"

using namespace freebond;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

CbfSpec example3_spec() {
  CbfSpec s;
  s.a = 0.5;
  s.atoms = {{1.0, 0.5}};
  return s;
}

const std::vector<Family> kFamilies = {Gamma{}, PoissonExp{}, InverseGaussian{},
                                       FreeStable{0.5}};

}  // namespace

TEST_CASE("FreeLaw rejects drift") {
  CbfSpec drift;
  drift.b = 0.5;
  CHECK_THROWS_AS(FreeLaw(Family(drift), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(FreeLaw(Gamma{}, 0.0), std::invalid_argument);
}

TEST_CASE("f_inverse_map spot values") {
  CHECK_THAT(f_inverse_map(FreeLaw(PoissonExp{}, 1.0), Complex(-1, 0)).real(),
             WithinAbs(-0.5, 1e-15));
  CHECK_THAT(f_inverse_map(FreeLaw(Gamma{}, 1.0), Complex(-1, 0)).real(),
             WithinAbs(-1.0 + std::log(2.0), 1e-15));
  // t -> 0: the map approaches the identity
  CHECK_THAT(f_inverse_map(FreeLaw(Gamma{}, 1e-12), Complex(-2, 0)).real(),
             WithinAbs(-2.0, 1e-11));
}

TEST_CASE("f_transform closed-form spot values") {
  // golden ratio for the Marchenko-Pastur law at z=-1, t=1
  const Complex f_mp = f_transform(FreeLaw(PoissonExp{}, 1.0), Complex(-1, 0));
  CHECK_THAT(f_mp.real(), WithinAbs(-(1.0 + std::sqrt(5.0)) / 2.0, 1e-12));
  CHECK_THAT(f_mp.imag(), WithinAbs(0.0, 1e-12));
  // Example-4 value at z=-1, t=1
  const Complex f_ig = f_transform(FreeLaw(InverseGaussian{}, 1.0), Complex(-1, 0));
  CHECK_THAT(f_ig.real(), WithinAbs(-4.0, 1e-12));
  // Lambert form for the gamma family at z=-1, t=1
  const Complex f_g = f_transform(FreeLaw(Gamma{}, 1.0), Complex(-1, 0));
  CHECK_THAT(f_g.real(), WithinAbs(1.0 + lambert_w_minus1(-std::exp(-2.0)), 1e-12));
  CHECK_THAT(f_g.real(), WithinAbs(-2.1461932206205826, 1e-11));
}

TEST_CASE("cauchy transform spot values") {
  const Complex g = cauchy_transform(FreeLaw(PoissonExp{}, 1.0), Complex(-1, 0));
  CHECK_THAT(g.real(), WithinAbs(-2.0 / (1.0 + std::sqrt(5.0)), 1e-12));
  const Complex gg = cauchy_transform(FreeLaw(Gamma{}, 1.0), Complex(-1, 0));
  CHECK_THAT(gg.real(), WithinAbs(1.0 / -2.1461932206205826, 1e-11));
}

TEST_CASE("generic Newton agrees with the closed forms off and on the real ray") {
  FTransformOptions generic;
  generic.force_generic = true;
  for (const Family& fam : {Family(Gamma{}), Family(PoissonExp{}), Family(InverseGaussian{})}) {
    for (double t : {0.5, 1.0, 2.0}) {
      const FreeLaw law(fam, t);
      // real ray z < -0.1
      for (double x = -10.0; x <= -0.1; x += 0.37) {
        const Complex a = f_transform_generic(law, Complex(x, 0), generic);
        const Complex b = f_transform_closed_form(law, Complex(x, 0));
        INFO(family_name(fam) << " t=" << t << " z=" << x);
        CHECK(std::abs(a - b) <= 1e-10 * (1.0 + std::abs(b)));
      }
      // the line Im z = 1
      for (double x = -6.0; x <= 6.0; x += 1.1) {
        const Complex z(x, 1.0);
        const Complex a = f_transform_generic(law, z, generic);
        const Complex b = f_transform_closed_form(law, z);
        INFO(family_name(fam) << " t=" << t << " z=(" << x << ",1)");
        CHECK(std::abs(a - b) <= 1e-10 * (1.0 + std::abs(b)));
      }
    }
  }
}

TEST_CASE("inverse consistency on an upper half-plane grid") {
  // f_inverse_map(f_transform(z)) = z on 200 points per family
  FTransformOptions opt;
  for (const Family& fam : kFamilies) {
    for (double t : {0.5, 1.0, 2.0}) {
      const FreeLaw law(fam, t);
      int count = 0;
      for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 10; ++j) {
          const double re = -10.0 + 20.0 * i / 19.0;
          const double im = 0.05 * std::pow(10.0 / 0.05, j / 9.0);
          const Complex z(re, im);
          const Complex w = f_transform(law, z, opt);
          CHECK(w.imag() >= 0.0);
          const Complex back = f_inverse_map(law, w);
          INFO(family_name(fam) << " t=" << t << " z=(" << re << "," << im << ")");
          REQUIRE(std::abs(back - z) <= 1e-10 * (1.0 + std::abs(z)));
          ++count;
        }
      }
      CHECK(count == 200);
    }
  }
}

TEST_CASE("inversion state records a path ending at the target") {
  InversionState state;
  FTransformOptions opt;
  const FreeLaw law(Gamma{}, 1.0);
  const Complex z(0.5, 0.8);
  const Complex w = f_transform_generic(law, z, opt, &state);
  CHECK(state.z == z);
  CHECK(state.w_current == w);
  REQUIRE_FALSE(state.path.empty());
  CHECK(std::abs(state.path.back() - z) < 1e-14);
  CHECK(state.path.size() >= 20);
}

TEST_CASE("stieltjes density against the closed forms") {
  // Marchenko-Pastur at t=1: density 1/(2 pi x) sqrt(4t - (x-1-t)^2)
  CHECK_THAT(stieltjes_density(FreeLaw(PoissonExp{}, 1.0), 2.0),
             WithinRel(1.0 / (2.0 * kPi), 1e-4));
  // Example-4 density at t=1, x=2: sqrt(2)/(3 pi)
  CHECK_THAT(stieltjes_density(FreeLaw(InverseGaussian{}, 1.0), 2.0),
             WithinRel(std::sqrt(2.0) / (3.0 * kPi), 1e-4));
  CHECK_THAT(stieltjes_density(FreeLaw(InverseGaussian{}, 1.0), 2.0),
             WithinRel(0.15005271935951768, 1e-4));
  // outside the support the extrapolation collapses to zero
  CHECK_THAT(stieltjes_density(FreeLaw(PoissonExp{}, 1.0), 5.0), WithinAbs(0.0, 1e-8));
}

TEST_CASE("stieltjes ladder flags atoms as unstable") {
  // t = 1/2 Marchenko-Pastur has an atom of mass 1/2 at 0
  CHECK_THROWS_AS(stieltjes_density(FreeLaw(PoissonExp{}, 0.5), 1e-7),
                  ExtrapolationUnstableError);
}

TEST_CASE("free stable density via Newton+Stieltjes matches the derived closed form") {
  // for alpha = 1/2 the transform inverts in closed form:
  // density t sqrt(4x - t^2) / (2 pi x^2) on (t^2/4, inf)
  for (double t : {0.5, 1.0, 2.0}) {
    const FreeLaw law(FreeStable{0.5}, t);
    for (double x : {0.4 * t * t, t * t, 4.0 * t * t, 20.0 * t * t}) {
      if (x <= t * t / 4.0 + 0.05) continue;
      const double closed = t * std::sqrt(4.0 * x - t * t) / (2.0 * kPi * x * x);
      INFO("t=" << t << " x=" << x);
      CHECK_THAT(stieltjes_density(law, x), WithinRel(closed, 1e-4));
    }
  }
}

TEST_CASE("free measures: atoms, edges, normalization") {
  SECTION("marchenko-pastur t=1/2") {
    const auto m = free_measure(FreeLaw(PoissonExp{}, 0.5));
    REQUIRE(m.atoms.size() == 1);
    CHECK(m.atoms[0].location == 0.0);
    CHECK_THAT(m.atoms[0].mass, WithinAbs(0.5, 1e-12));
    const double lo = (1.0 - std::sqrt(0.5)) * (1.0 - std::sqrt(0.5));
    const double hi = (1.0 + std::sqrt(0.5)) * (1.0 + std::sqrt(0.5));
    CHECK_THAT(m.support_lo, WithinAbs(lo, 1e-10));
    CHECK_THAT(m.support_hi, WithinAbs(hi, 1e-10));
    CHECK_THAT(decomposition_mass(m), WithinAbs(1.0, 1e-6));
  }
  SECTION("marchenko-pastur t=2 has no atom") {
    const auto m = free_measure(FreeLaw(PoissonExp{}, 2.0));
    CHECK(m.atoms.empty());
    CHECK_THAT(decomposition_mass(m), WithinAbs(1.0, 1e-6));
  }
  SECTION("inverse-gaussian t=1/2: shifted atom at t") {
    const auto m = free_measure(FreeLaw(InverseGaussian{}, 0.5));
    REQUIRE(m.atoms.size() == 1);
    CHECK_THAT(m.atoms[0].location, WithinAbs(0.5, 1e-12));
    CHECK_THAT(m.atoms[0].mass, WithinAbs(0.5, 1e-12));
    CHECK_THAT(m.support_lo, WithinAbs(0.5 * (1.0 + 0.25), 1e-12));
    CHECK_THAT(decomposition_mass(m), WithinAbs(1.0, 1e-6));
  }
  SECTION("free stable tabulated measure normalizes") {
    const auto m = free_measure(FreeLaw(FreeStable{0.5}, 1.0));
    CHECK(m.atoms.empty());
    CHECK_THAT(m.support_lo, WithinAbs(0.25, 2e-3));
    CHECK_FALSE(std::isfinite(m.support_hi));
    CHECK_THAT(decomposition_mass(m), WithinAbs(1.0, 1e-4));
  }
  SECTION("gamma tabulated measure: analytic left edge and unit mass") {
    // the free gamma semigroup carries a bottom atom of mass (1 - t)^+ at 0
    // (its free Levy measure is finite although the classical one is not),
    // with the density starting at the critical value 1 - t + t log t
    for (double t : {0.5, 1.0, 2.0}) {
      const auto m = free_measure(FreeLaw(Gamma{}, t));
      const double edge = 1.0 - t + t * std::log(t);
      INFO("t=" << t);
      if (t < 1.0) {
        REQUIRE(m.atoms.size() == 1);
        CHECK_THAT(m.atoms[0].location, WithinAbs(0.0, 1e-12));
        CHECK_THAT(m.atoms[0].mass, WithinAbs(1.0 - t, 1e-4));
      } else {
        CHECK(m.atoms.empty());
      }
      CHECK_THAT(m.support_lo, WithinAbs(edge, 2e-3));
      CHECK_FALSE(std::isfinite(m.support_hi));
      CHECK_THAT(decomposition_mass(m), WithinAbs(1.0, 1e-5));
    }
  }
  SECTION("custom spec reproduces the Marchenko-Pastur semigroup") {
    const auto m = free_measure(FreeLaw(Family(example3_spec()), 0.5));
    REQUIRE(m.atoms.size() == 1);
    CHECK_THAT(m.atoms[0].location, WithinAbs(0.0, 1e-9));
    CHECK_THAT(m.atoms[0].mass, WithinAbs(0.5, 1e-4));
    const double lo = (1.0 - std::sqrt(0.5)) * (1.0 - std::sqrt(0.5));
    const double hi = (1.0 + std::sqrt(0.5)) * (1.0 + std::sqrt(0.5));
    CHECK_THAT(m.support_lo, WithinAbs(lo, 2e-3));
    CHECK_THAT(m.support_hi, WithinAbs(hi, 2e-3));
    CHECK_THAT(decomposition_mass(m), WithinAbs(1.0, 1e-4));
    const FreeLaw mp(PoissonExp{}, 0.5);
    for (double x : {0.3, 1.0, 2.0}) {
      CHECK_THAT(m.density(x), WithinAbs(stieltjes_density(mp, x), 1e-5));
    }
  }
}

TEST_CASE("atom mass estimator recovers closed-form atoms") {
  CHECK_THAT(atom_mass_estimate(FreeLaw(PoissonExp{}, 0.5), 0.0), WithinAbs(0.5, 1e-4));
  CHECK_THAT(atom_mass_estimate(FreeLaw(PoissonExp{}, 0.25), 0.0),
             WithinAbs(0.75, 1e-4));
  CHECK_THAT(atom_mass_estimate(FreeLaw(InverseGaussian{}, 0.5), 0.5),
             WithinAbs(0.5, 1e-4));
}

TEST_CASE("free laplace transform") {
  SECTION("mass recovered as w -> 0+") {
    for (const Family& fam : kFamilies) {
      const bool heavy = std::holds_alternative<InverseGaussian>(fam) ||
                         std::holds_alternative<FreeStable>(fam);
      INFO(family_name(fam));
      // x^{-3/2} tails make 1 - L(w) of order sqrt(w); the lighter families
      // converge much faster
      const double v = free_laplace(FreeLaw(fam, 1.0), 1e-7);
      CHECK_THAT(v, WithinAbs(1.0, heavy ? 2e-3 : 1e-4));
      if (heavy) {
        CHECK(1.0 - free_laplace(FreeLaw(fam, 1.0), 1e-9) < (1.0 - v) * 0.5);
      }
    }
  }
  SECTION("gamma value against the paper closed form") {
    // int e^{-wx} mu^{boxplus 1}(dx) = w^{w-1} e^{-w} / Gamma(w) at w = 1
    std::string tag;
    const double v = free_laplace(FreeLaw(Gamma{}, 1.0), 1.0, &tag);
    CHECK_THAT(v, WithinAbs(std::exp(-1.0), 1e-10));
    CHECK(tag == "free-contour-quadrature");
  }
  SECTION("free stable series against quadrature over the tabulated density") {
    std::string tag;
    const FreeLaw law(FreeStable{0.5}, 1.0);
    const double series = free_laplace(law, 1.0, &tag);
    CHECK(tag == "free-stable-series");
    // independent quadrature against the derived alpha=1/2 closed density
    const double quad = oracles::adaptive_simpson_inf(
        [&](double x) {
          return std::exp(-x) * std::sqrt(std::max(0.0, 4.0 * x - 1.0)) /
                 (2.0 * kPi * x * x);
        },
        0.25, 1e-13);
    CHECK_THAT(series, WithinAbs(quad, 1e-4));
    CHECK_THAT(series, WithinAbs(0.27985889381270780, 1e-10));
  }
  SECTION("laplace decreasing in w") {
    const FreeLaw law(PoissonExp{}, 1.0);
    double prev = 1.0;
    for (double w : {0.1, 0.5, 1.0, 2.0, 5.0}) {
      const double v = free_laplace(law, w);
      CHECK(v < prev);
      prev = v;
    }
  }
}

TEST_CASE("far field: z G(z) -> 1, and the mean for the compact family") {
  const Complex z(0.0, 1e4);
  for (const Family& fam : kFamilies) {
    const bool compact = std::holds_alternative<PoissonExp>(fam);
    for (double t : {0.5, 1.0, 2.0}) {
      const FreeLaw law(fam, t);
      const Complex zg = z * cauchy_transform(law, z);
      INFO(family_name(fam) << " t=" << t);
      if (compact) {
        CHECK(std::abs(zg - 1.0) < 1e-3);
      } else {
        // heavy tails approach mass 1 only like |z|^{-1/2} (or log/|z|)
        const Complex z2(0.0, 1e6);
        const Complex zg2 = z2 * cauchy_transform(law, z2);
        CHECK(std::abs(zg - 1.0) < 5e-2);
        CHECK(std::abs(zg2 - 1.0) < std::abs(zg - 1.0));
      }
    }
  }
  // mean of the Marchenko-Pastur law is t; the heavy-tailed families have
  // infinite mean and are excluded
  for (double t : {0.5, 1.0, 2.0}) {
    const FreeLaw law(PoissonExp{}, t);
    const Complex zg1 = z * (z * cauchy_transform(law, z) - 1.0);
    const auto m = free_measure(law);
    double mean = 0.0;
    for (const auto& a : m.atoms) mean += a.mass * a.location;
    mean += integrate_or_throw([&](double x) { return x * m.density(x); },
                               m.support_lo, m.support_hi, {1e-10, 1e-9, 20000});
    CHECK_THAT(zg1.real(), WithinRel(mean, 1e-3));
    CHECK_THAT(mean, WithinRel(t, 1e-6));
  }
}

TEST_CASE("continuation failure surfaces as the documented error") {
  FTransformOptions opt;
  opt.waypoints = 1;
  opt.max_restarts = 0;
  opt.residual_tol = 1e-18;  // unreachable
  CHECK_THROWS_AS(f_transform_generic(FreeLaw(Gamma{}, 1.0), Complex(0.5, 1e-4), opt),
                  ContinuationFailureError);
}
