#include "curation_laws/curation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "curation_laws/errors.hpp"

namespace curlaw {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGramTolerance = 1e-12;
constexpr double kCrossCheckTolerance = 1e-8;

// t * phi(t), zero at infinity.
double moment_density(double t) { return std::isinf(t) ? 0.0 : t * std_normal_pdf(t); }
double density_or_zero(double t) { return std::isinf(t) ? 0.0 : std_normal_pdf(t); }

// Phi(x) - 1/2 without cancellation; +-1/2 at infinity.
double centered_cdf(double x) { return 0.5 * std::erf(x / std::numbers::sqrt2); }

// Phi(hi) - Phi(lo) for 0 <= lo < hi, evaluated in the upper tail.
double upper_mass(double lo, double hi) { return std_normal_cdf(-lo) - std_normal_cdf(-hi); }

void require_open_unit(double rho_g) {
  if (!(std::abs(rho_g) < 1.0)) {
    throw InvalidArgument("curation constants need |rho_g| < 1 (tau is infinite otherwise)");
  }
}

}  // namespace

PruningFunction::PruningFunction(IntervalUnion half_support)
    : half_support_(std::move(half_support)) {}

PruningFunction PruningFunction::keep_easy(double alpha) {
  if (!(alpha > 0.0) || std::isinf(alpha)) {
    throw InvalidArgument("keep_easy: alpha must be finite and > 0");
  }
  return PruningFunction(IntervalUnion{{alpha, kInf}});
}

PruningFunction PruningFunction::keep_hard(double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("keep_hard: alpha must be > 0");
  return PruningFunction(IntervalUnion{{0.0, alpha}});
}

PruningFunction PruningFunction::keep_easy_fraction(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("keep_easy: p must lie in (0, 1]");
  if (p == 1.0) return keep_all();
  return keep_easy(std_normal_quantile(1.0 - p / 2.0));
}

PruningFunction PruningFunction::keep_hard_fraction(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("keep_hard: p must lie in (0, 1]");
  return keep_hard(std_normal_quantile_extended((1.0 + p) / 2.0));
}

PruningFunction PruningFunction::qpu(double p, double u) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("qpu: p must lie in (0, 1]");
  if (!(u >= 0.0 && u <= 1.0)) throw InvalidArgument("qpu: u must lie in [0, 1]");
  const double a = std_normal_quantile_extended((1.0 + (1.0 - u) * p) / 2.0);
  const double b = std_normal_quantile_extended(1.0 - p * u / 2.0);
  std::vector<Interval> pieces;
  if (a >= b) return keep_all();  // p = 1: band and tails touch
  if (a > 0.0) pieces.push_back({0.0, a});
  if (b < kInf) pieces.push_back({b, kInf});
  return PruningFunction(IntervalUnion(std::move(pieces)));
}

PruningFunction PruningFunction::keep_all() {
  return PruningFunction(IntervalUnion{{0.0, kInf}});
}

bool PruningFunction::keeps(double t) const { return half_support_.contains(std::abs(t)); }

double PruningFunction::gaussian_mass() const {
  double mass = 0.0;
  for (const auto& [lo, hi] : half_support_.intervals()) mass += 2.0 * upper_mass(lo, hi);
  return mass;
}

std::string to_string(CurationMode mode) {
  return mode == CurationMode::LabelAgnostic ? "label_agnostic" : "label_aware";
}

CurationMode parse_curation_mode(const std::string& text) {
  if (text == "label_agnostic" || text == "agnostic") return CurationMode::LabelAgnostic;
  if (text == "label_aware" || text == "aware") return CurationMode::LabelAware;
  throw InvalidArgument("unknown curation mode '" + text + "'");
}

GeometrySpec::GeometrySpec(double rho, double rho_g, double rho_star)
    : rho_(rho), rho_g_(rho_g), rho_star_(rho_star) {
  for (double c : {rho, rho_g, rho_star}) {
    if (std::isnan(c) || c < -1.0 || c > 1.0) {
      throw InvalidArgument("GeometrySpec: cosines must lie in [-1, 1]");
    }
  }
  // Unit diagonal and |off-diagonal| <= 1 make every 2x2 principal minor
  // nonnegative, so the Gram matrix is PSD iff its determinant is.
  const double det = 1.0 + 2.0 * rho * rho_g * rho_star - rho * rho - rho_g * rho_g -
                     rho_star * rho_star;
  if (det < -kGramTolerance) {
    std::ostringstream msg;
    msg << "infeasible geometry: cosines (rho=" << rho << ", rho_g=" << rho_g
        << ", rho_star=" << rho_star << ") have Gram determinant " << det;
    throw InfeasibleGeometry(msg.str());
  }
}

double GeometrySpec::tau() const {
  require_open_unit(rho_g_);
  return rho_g_ / std::sqrt(1.0 - rho_g_ * rho_g_);
}

double GeometrySpec::sigma_perp() const { return std::sqrt(1.0 - rho_g_ * rho_g_); }

std::optional<double> GeometrySpec::cos_xi() const {
  const double denom = std::sqrt(1.0 - rho_g_ * rho_g_) * std::sqrt(1.0 - rho_star_ * rho_star_);
  if (denom == 0.0) return std::nullopt;
  return (rho_ - rho_g_ * rho_star_) / denom;
}

double GeometrySpec::perpendicular_alignment() const {
  if (!(std::abs(rho_g_) < 1.0)) {
    throw InvalidArgument("perpendicular_alignment: oracle parallel to generator");
  }
  return (rho_ - rho_g_ * rho_star_) / std::sqrt(1.0 - rho_g_ * rho_g_);
}

namespace {

// phi(t) (Phi(tau t) - 1/2), zero at t = inf.
double edge_term(double t, double tau) {
  if (std::isinf(t)) return 0.0;
  return density_or_zero(t) * centered_cdf(tau * t);
}

}  // namespace

CurationConstants constants_closed_form(const PruningFunction& q, CurationMode mode,
                                        double rho_g) {
  require_open_unit(rho_g);
  const double sigma = std::sqrt(1.0 - rho_g * rho_g);
  CurationConstants c;
  if (mode == CurationMode::LabelAgnostic) {
    for (const auto& [a, b] : q.half_support().intervals()) {
      const double mass = upper_mass(a, b);
      c.p += 2.0 * mass;
      c.gamma += 2.0 * (mass - (moment_density(b) - moment_density(a)));
      c.beta += 4.0 * kInvSqrt2Pi * sigma * upper_mass(a / sigma, b / sigma);
      // 2 int_S (2 Phi(tau t) - 1) t phi(t) dt, integrated by parts; vanishes
      // identically at tau = 0.
      const double tau = rho_g / sigma;
      c.beta_tilde += 4.0 * tau * (partial_integral(PartialIntegrand::OracleDensity, b, rho_g) -
                                   partial_integral(PartialIntegrand::OracleDensity, a, rho_g)) +
                      4.0 * (edge_term(a, tau) - edge_term(b, tau));
    }
    return c;
  }
  auto delta = [&](PartialIntegrand k, double a, double b) {
    return partial_integral(k, b, rho_g) - partial_integral(k, a, rho_g);
  };
  GeneratorBlock block;
  for (const auto& [a, b] : q.half_support().intervals()) {
    c.p += 2.0 * delta(PartialIntegrand::AgreementProbability, a, b);
    c.gamma += 2.0 * delta(PartialIntegrand::SecondMoment, a, b);
    c.beta += 2.0 * delta(PartialIntegrand::OracleDensity, a, b);
    c.beta_tilde += 2.0 * delta(PartialIntegrand::FirstMoment, a, b);
    block.cross += 2.0 * kInvSqrt2Pi * sigma * sigma *
                   (density_or_zero(a / sigma) - density_or_zero(b / sigma));
  }
  block.mass = c.p - rho_g / sigma * block.cross;
  c.generator_block = block;
  return c;
}

CurationConstants constants_by_quadrature(const PruningFunction& q, CurationMode mode,
                                          double rho_g) {
  require_open_unit(rho_g);
  const double tau = rho_g / std::sqrt(1.0 - rho_g * rho_g);
  const auto& domain = q.half_support();
  // E[q(G) h(G)] = int_S (h(t) + h(-t)) phi(t) dt for symmetric q.
  auto expect = [&](auto h) {
    return expectation_over_gaussian([&](double t) { return h(t) + h(-t); }, domain);
  };
  const auto Phi = [](double x) { return std_normal_cdf(x); };
  const auto pdf = [](double x) { return std_normal_pdf(x); };

  CurationConstants c;
  if (mode == CurationMode::LabelAgnostic) {
    c.p = expect([](double) { return 1.0; });
    c.gamma = expect([](double t) { return t * t; });
    c.beta = 2.0 * expect([&](double t) { return pdf(tau * t); });
    c.beta_tilde = 2.0 * expect([&](double t) { return Phi(tau * t) * t; });
  } else {
    c.p = expect([&](double t) { return Phi(tau * std::abs(t)); });
    c.gamma = expect([&](double t) { return Phi(tau * std::abs(t)) * t * t; });
    c.beta = expect([&](double t) { return pdf(tau * t); });
    c.beta_tilde = expect([&](double t) { return Phi(tau * std::abs(t)) * std::abs(t); });
    GeneratorBlock block;
    block.cross = expect([&](double t) { return std::abs(t) * pdf(tau * t); });
    block.mass = expect([&](double t) {
      return Phi(tau * std::abs(t)) - tau * std::abs(t) * pdf(tau * t);
    });
    c.generator_block = block;
  }
  return c;
}

CurationConstants constants(const PruningFunction& q, CurationMode mode,
                            const GeometrySpec& geom, Verification verify) {
  const CurationConstants closed = constants_closed_form(q, mode, geom.rho_g());
  if (verify == Verification::CrossCheck) {
    const CurationConstants quad = constants_by_quadrature(q, mode, geom.rho_g());
    double worst = std::max({std::abs(closed.p - quad.p),
                             std::abs(closed.gamma - quad.gamma),
                             std::abs(closed.beta - quad.beta),
                             std::abs(closed.beta_tilde - quad.beta_tilde)});
    if (closed.generator_block && quad.generator_block) {
      worst = std::max({worst, std::abs(closed.generator_block->cross - quad.generator_block->cross),
                        std::abs(closed.generator_block->mass - quad.generator_block->mass)});
    }
    if (worst > kCrossCheckTolerance) {
      throw InternalError("curation constants: closed form and quadrature differ by " +
                          std::to_string(worst));
    }
  }
  return closed;
}

LensBounds gamma_bounds(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("gamma_bounds: p must lie in (0, 1]");
  const double alpha_min = std_normal_quantile_extended((1.0 + p) / 2.0);
  const double alpha_max = std_normal_quantile_extended(1.0 - p / 2.0);
  return {p - 2.0 * moment_density(alpha_min), p + 2.0 * moment_density(alpha_max)};
}

double qpu_gamma(double p, double u) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("qpu_gamma: p must lie in (0, 1]");
  if (!(u >= 0.0 && u <= 1.0)) throw InvalidArgument("qpu_gamma: u must lie in [0, 1]");
  const double a = std_normal_quantile_extended((1.0 + (1.0 - u) * p) / 2.0);
  const double b = std_normal_quantile_extended(1.0 - p * u / 2.0);
  return p - 2.0 * moment_density(a) + 2.0 * moment_density(b);
}

double solve_u_for_gamma(double p, double gamma_target) {
  const LensBounds lens = gamma_bounds(p);
  if (!(gamma_target >= lens.gamma_min && gamma_target <= lens.gamma_max)) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "gamma " << gamma_target << " lies outside the attainable range ["
        << lens.gamma_min << ", " << lens.gamma_max << "] for p = " << p;
    throw InvalidArgument(msg.str());
  }
  if (gamma_target == lens.gamma_min) return 0.0;
  if (gamma_target == lens.gamma_max) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = qpu_gamma(p, mid);
    if (g == gamma_target) return mid;
    (g < gamma_target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double j_ratio(const CurationConstants& c) {
  if (!(c.p > 0.0)) throw InvalidArgument("j_ratio: p must be > 0");
  if (c.beta_tilde == 0.0) {
    throw InvalidArgument("j_ratio: beta_tilde = 0 (oracle orthogonal to generator)");
  }
  return c.gamma * c.beta / (c.p * c.beta_tilde);
}

}  // namespace curlaw
