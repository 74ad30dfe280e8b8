#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "../oracles.hpp"
#include "curation_laws/curation.hpp"
#include "curation_laws/errors.hpp"
#include "curation_laws/simulator.hpp"

using namespace curlaw;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// p, gamma, beta, beta_tilde, cross, mass by brute-force 2-D quadrature over
// (t, h), t along w_o and h along the part of w_g orthogonal to w_o.
std::array<double, 6> constants_2d(const PruningFunction& q, CurationMode mode, double rho_g) {
  const double sg = std::sqrt(1.0 - rho_g * rho_g);
  std::array<double, 6> out{};
  for (int k = 0; k < 6; ++k) {
    auto inner = [&](double t) {
      if (!q.keeps(t)) return 0.0;
      const double flip = -rho_g * t / sg;  // y changes sign at h = flip
      auto piece = [&](double lo, double hi, double y) {
        if (mode == CurationMode::LabelAware && y * t < 0) return 0.0;
        auto f = [&](double h) {
          const double w = oracle::pdf(h);
          switch (k) {
            case 0: return w;
            case 1: return t * t * w;
            case 2: return y * h * w;
            case 3: return y * t * w;
            case 4: return t * h * w;
            default: return h * h * w;
          }
        };
        return oracle::integrate(f, lo, hi);
      };
      const double c = std::clamp(flip, -12.0, 12.0);
      const double pos_lo = sg > 0 ? c : -12.0;
      return (piece(-12.0, pos_lo, -1.0) + piece(pos_lo, 12.0, 1.0)) * oracle::pdf(t);
    };
    // split the outer range at every support edge
    double total = 0.0;
    for (const auto& iv : q.half_support().intervals()) {
      const double hi = std::min(iv.hi, 12.0);
      if (hi <= iv.lo) continue;
      total += oracle::integrate(inner, iv.lo, hi) + oracle::integrate(inner, -hi, -iv.lo);
    }
    out[k] = total;
  }
  return out;
}

}  // namespace

TEST_CASE("keep fractions of the named strategies") {
  CHECK(PruningFunction::keep_easy(1.0).gaussian_mass() ==
        doctest::Approx(0.3173105079).epsilon(1e-10));
  CHECK(PruningFunction::keep_hard(1.0).gaussian_mass() ==
        doctest::Approx(0.6826894921).epsilon(1e-10));
  CHECK(PruningFunction::keep_easy(1e-9).gaussian_mass() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(PruningFunction::keep_hard(40.0).gaussian_mass() == doctest::Approx(1.0).epsilon(1e-14));
  for (double p : {0.05, 0.2, 0.5, 0.8, 0.99}) {
    CHECK(std::abs(PruningFunction::keep_easy_fraction(p).gaussian_mass() - p) <= 1e-12);
    CHECK(std::abs(PruningFunction::keep_hard_fraction(p).gaussian_mass() - p) <= 1e-12);
    for (double u : {0.0, 0.3, 0.5, 1.0}) {
      CHECK(std::abs(PruningFunction::qpu(p, u).gaussian_mass() - p) <= 1e-12);
    }
  }
  CHECK(PruningFunction::keep_all().gaussian_mass() == 1.0);
  CHECK_THROWS_AS(PruningFunction::keep_easy(0.0), InvalidArgument);
  CHECK_THROWS_AS(PruningFunction::qpu(0.0, 0.5), InvalidArgument);
  CHECK_THROWS_AS(PruningFunction::qpu(0.5, 1.2), InvalidArgument);
}

TEST_CASE("qpu endpoints are the pure strategies") {
  for (double p : {0.1, 0.5, 0.9}) {
    const auto hard = constants_closed_form(PruningFunction::keep_hard_fraction(p),
                                            CurationMode::LabelAgnostic, 0.3);
    const auto easy = constants_closed_form(PruningFunction::keep_easy_fraction(p),
                                            CurationMode::LabelAgnostic, 0.3);
    const auto u0 = constants_closed_form(PruningFunction::qpu(p, 0.0), CurationMode::LabelAgnostic, 0.3);
    const auto u1 = constants_closed_form(PruningFunction::qpu(p, 1.0), CurationMode::LabelAgnostic, 0.3);
    CHECK(std::abs(u0.gamma - hard.gamma) <= 1e-12);
    CHECK(std::abs(u1.gamma - easy.gamma) <= 1e-12);
    CHECK(std::abs(u0.beta - hard.beta) <= 1e-12);
  }
}

TEST_CASE("constants: worked values") {
  const GeometrySpec orth(0.0, 0.0, 0.0);
  const auto all = constants(PruningFunction::keep_all(), CurationMode::LabelAgnostic, orth);
  CHECK(all.p == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(all.gamma == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(all.beta_tilde == 0.0);
  CHECK(all.beta == doctest::Approx(0.7978845608).epsilon(1e-10));

  for (double rho_g : {0.0, 0.4, -0.8}) {
    const auto kh = constants_closed_form(PruningFunction::keep_hard(1.0),
                                          CurationMode::LabelAgnostic, rho_g);
    CHECK(kh.p == doctest::Approx(0.6826894921).epsilon(1e-10));
    CHECK(kh.gamma == doctest::Approx(0.1987480431).epsilon(1e-9));
    CHECK_FALSE(kh.generator_block.has_value());
  }

  const auto aware = constants(PruningFunction::keep_all(), CurationMode::LabelAware, orth);
  CHECK(aware.p == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(aware.generator_block.has_value());
}

TEST_CASE("constants agree with a brute-force 2-D oracle") {
  const std::vector<PruningFunction> rules = {
      PruningFunction::keep_all(),
      PruningFunction::keep_hard_fraction(0.3),
      PruningFunction::keep_easy_fraction(0.6),
      PruningFunction::qpu(0.5, 0.4),
      PruningFunction(IntervalUnion{{0.2, 0.7}, {1.1, 1.9}, {2.5, kInf}}),
  };
  for (const auto& q : rules) {
    for (double rho_g : {0.0, 0.45, -0.7, 0.9}) {
      for (auto mode : {CurationMode::LabelAgnostic, CurationMode::LabelAware}) {
        CAPTURE(rho_g);
        CAPTURE(to_string(mode));
        const auto c = constants_closed_form(q, mode, rho_g);
        const auto ref = constants_2d(q, mode, rho_g);
        CHECK(std::abs(c.p - ref[0]) <= 1e-9);
        CHECK(std::abs(c.gamma - ref[1]) <= 1e-9);
        CHECK(std::abs(c.beta - ref[2]) <= 1e-9);
        CHECK(std::abs(c.beta_tilde - ref[3]) <= 1e-9);
        const double cross = c.generator_block ? c.generator_block->cross : 0.0;
        const double mass = c.generator_block ? c.generator_block->mass : c.p;
        CHECK(std::abs(cross - ref[4]) <= 1e-9);
        CHECK(std::abs(mass - ref[5]) <= 1e-9);
      }
    }
  }
}

TEST_CASE("label-agnostic beta_tilde vanishes for an orthogonal oracle") {
  for (double p : {0.2, 0.7}) {
    const auto c = constants_closed_form(PruningFunction::keep_easy_fraction(p),
                                         CurationMode::LabelAgnostic, 0.0);
    CHECK(c.beta_tilde == 0.0);
  }
}

TEST_CASE("closed form and quadrature routes agree") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> len(0.05, 1.2);
  std::uniform_real_distribution<double> rhos(-0.95, 0.95);
  for (int i = 0; i < 30; ++i) {
    std::vector<Interval> pieces;
    double at = len(gen) * 0.5;
    const int count = 1 + static_cast<int>(gen() % 3);
    for (int k = 0; k < count; ++k) {
      const double hi = at + len(gen);
      pieces.push_back({at, k + 1 == count && gen() % 2 ? kInf : hi});
      at = hi + len(gen);
    }
    const PruningFunction q{IntervalUnion(pieces)};
    const double rho_g = rhos(gen);
    for (auto mode : {CurationMode::LabelAgnostic, CurationMode::LabelAware}) {
      const auto a = constants_closed_form(q, mode, rho_g);
      const auto b = constants_by_quadrature(q, mode, rho_g);
      CHECK(std::abs(a.p - b.p) <= 1e-8);
      CHECK(std::abs(a.gamma - b.gamma) <= 1e-8);
      CHECK(std::abs(a.beta - b.beta) <= 1e-8);
      CHECK(std::abs(a.beta_tilde - b.beta_tilde) <= 1e-8);
      CHECK_NOTHROW(constants(q, mode, GeometrySpec(rho_g, rho_g, 1.0), Verification::CrossCheck));
    }
  }
}

TEST_CASE("Monte Carlo constants bracket the closed forms") {
  const auto q = PruningFunction::qpu(0.4, 0.3);
  for (auto mode : {CurationMode::LabelAgnostic, CurationMode::LabelAware}) {
    const auto mc = monte_carlo_constants(q, mode, 0.6, 400000, 5);
    const auto c = constants_closed_form(q, mode, 0.6);
    CHECK(std::abs(mc.mean.p - c.p) <= 4 * mc.std_error.p);
    CHECK(std::abs(mc.mean.gamma - c.gamma) <= 4 * mc.std_error.gamma);
    CHECK(std::abs(mc.mean.beta - c.beta) <= 4 * mc.std_error.beta);
    CHECK(std::abs(mc.mean.beta_tilde - c.beta_tilde) <= 4 * mc.std_error.beta_tilde);
  }
}

TEST_CASE("geometry feasibility") {
  CHECK_NOTHROW(GeometrySpec(0.5, 0.5, 0.5));
  CHECK_NOTHROW(GeometrySpec(1.0, 0.3, 0.3));
  CHECK_THROWS_AS(GeometrySpec(1.0, 0.5, 0.9), InfeasibleGeometry);
  CHECK_THROWS_AS(GeometrySpec(0.0, 0.99, 0.99), InfeasibleGeometry);
  CHECK_THROWS_AS(GeometrySpec(1.2, 0.0, 0.0), InvalidArgument);
  const GeometrySpec g(0.8, 0.5, 0.6);
  CHECK(g.perpendicular_alignment() ==
        doctest::Approx((0.8 - 0.5 * 0.6) / std::sqrt(1 - 0.25)).epsilon(1e-14));
  CHECK(g.tau() == doctest::Approx(0.5 / std::sqrt(0.75)).epsilon(1e-14));
}

TEST_CASE("lens bounds") {
  auto b1 = gamma_bounds(1.0);
  CHECK(b1.gamma_min == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(b1.gamma_max == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gamma_bounds(0.6826894921).gamma_min == doctest::Approx(0.1987480431).epsilon(1e-9));
  CHECK(gamma_bounds(0.3173105079).gamma_max == doctest::Approx(0.8012519569).epsilon(1e-9));
  // factor-2 form checked against tail quadrature
  const double a = std_normal_quantile(1 - 0.3 / 2);
  const double tails = 2 * oracle::integrate([](double t) { return t * t * oracle::pdf(t); }, a, 12);
  CHECK(std::abs(gamma_bounds(0.3).gamma_max - tails) <= 1e-12);
}

TEST_CASE("gamma is nondecreasing in u and stays inside the lens") {
  for (int i = 1; i <= 20; ++i) {
    const double p = i / 20.0;
    const auto b = gamma_bounds(p);
    double prev = -1.0;
    for (int k = 0; k < 20; ++k) {
      const double g = qpu_gamma(p, k / 19.0);
      CHECK(g >= prev - 1e-14);
      CHECK(g >= b.gamma_min - 1e-12);
      CHECK(g <= b.gamma_max + 1e-12);
      prev = g;
    }
  }
}

TEST_CASE("solve_u_for_gamma round trips") {
  const auto b = gamma_bounds(0.4);
  CHECK(solve_u_for_gamma(0.4, b.gamma_min) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(solve_u_for_gamma(0.4, b.gamma_max) == doctest::Approx(1.0).epsilon(1e-9));
  const double u = solve_u_for_gamma(0.5, 0.5);
  CHECK(u > 0.0);
  CHECK(u < 1.0);
  CHECK(std::abs(qpu_gamma(0.5, u) - 0.5) <= 1e-10);
  CHECK_THROWS_AS(solve_u_for_gamma(0.5, 0.99), InvalidArgument);
}

TEST_CASE("j ratio") {
  CurationConstants c;
  c.p = 0.3;
  c.gamma = 0.3;
  c.beta = 0.7;
  c.beta_tilde = 0.7;
  CHECK(j_ratio(c) == doctest::Approx(1.0));
  const double rho_g = 1 / std::sqrt(2.0);  // tau = 1
  for (double p : {0.2, 0.5, 0.8}) {
    const auto kh = constants_closed_form(PruningFunction::keep_hard_fraction(p),
                                          CurationMode::LabelAgnostic, rho_g);
    const auto ke = constants_closed_form(PruningFunction::keep_easy_fraction(p),
                                          CurationMode::LabelAgnostic, rho_g);
    MESSAGE("p=" << p << " j(KH)=" << j_ratio(kh) << " j(KE)=" << j_ratio(ke));
    CHECK(j_ratio(kh) != doctest::Approx(j_ratio(ke)));
  }
}
