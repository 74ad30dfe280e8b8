#include "curation_laws/laws.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "curation_laws/errors.hpp"

namespace curlaw {
namespace {

constexpr double kBandSlack = 1e-8;
constexpr double kExcellent = 0.99;

// Component of w_* along v, the unit direction of w_g orthogonal to w_o.
double generator_alignment(const GeometrySpec& geom) {
  if (std::abs(geom.rho_g()) < 1.0) return geom.perpendicular_alignment();
  if (std::abs(geom.rho() - geom.rho_g() * geom.rho_star()) > 1e-12) {
    throw InvalidArgument("degenerate plane: w_o parallel to w_g but rho != rho_g rho_star");
  }
  return 0.0;
}

double omega_for(const GeometrySpec& geom, const CurationConstants& c, OmegaConvention conv) {
  if (conv == OmegaConvention::TheoremStatement) {
    return geom.rho() - geom.rho_g() * geom.rho_star();
  }
  return c.beta * generator_alignment(geom);
}

// arccos(|m0| / sqrt(nu0)) / pi, refusing ratios visibly outside [0, 1].
double angle_error(double m0, double nu0) {
  if (!(nu0 > 0.0)) {
    throw InternalError("second moment nu0 must be positive, got " + std::to_string(nu0));
  }
  const double ratio = std::abs(m0) / std::sqrt(nu0);
  if (!(ratio <= 1.0 + kBandSlack)) {
    std::ostringstream msg;
    msg << "alignment ratio " << ratio << " exceeds 1 (m0 = " << m0 << ", nu0 = " << nu0 << ")";
    throw InternalError(msg.str());
  }
  return std::acos(std::min(ratio, 1.0)) / std::numbers::pi;
}

struct Block {
  double k11, k12, k22;
};

Block block_of(const CurationConstants& c, bool use_block) {
  if (use_block && c.generator_block) {
    return {c.gamma, c.generator_block->cross, c.generator_block->mass};
  }
  return {c.gamma, 0.0, c.p};
}

// Coefficients of the fitted vector on (w_o, v) after shrinking by `shift`,
// together with the residual energy per kept row.
struct BlockFit {
  double a1 = 0.0;
  double a2 = 0.0;
  double residual = 0.0;
};

BlockFit solve_block(const Block& k, const CurationConstants& c, double shift) {
  const double d11 = k.k11 + shift;
  const double d22 = k.k22 + shift;
  const double det = d11 * d22 - k.k12 * k.k12;
  if (!(det > 0.0)) throw InternalError("kept-data block is not positive definite");
  BlockFit f;
  f.a1 = (d22 * c.beta_tilde - k.k12 * c.beta) / det;
  f.a2 = (d11 * c.beta - k.k12 * c.beta_tilde) / det;
  f.residual = c.p - 2.0 * (f.a1 * c.beta_tilde + f.a2 * c.beta) + f.a1 * f.a1 * k.k11 +
               2.0 * f.a1 * f.a2 * k.k12 + f.a2 * f.a2 * k.k22;
  f.residual = std::max(f.residual, 0.0);
  return f;
}

bool block_applies(const CurationConstants& c, const ClassificationOptions& opts) {
  return opts.use_generator_block && c.generator_block.has_value() &&
         opts.convention == OmegaConvention::ProofDerivation;
}

void check_phi(double phi) {
  if (!(phi > 0.0) || std::isinf(phi)) throw InvalidArgument("phi must be finite and > 0");
}

}  // namespace

std::string to_string(OmegaConvention c) {
  return c == OmegaConvention::TheoremStatement ? "theorem_statement" : "proof_derivation";
}

std::string to_string(StrategyChoice s) {
  switch (s) {
    case StrategyChoice::KeepEasy:
      return "keep_easy";
    case StrategyChoice::KeepHard:
      return "keep_hard";
    case StrategyChoice::Blend:
      return "blend";
  }
  return "?";
}

ClassificationPrediction classification_error(const GeometrySpec& geom, const CurationConstants& c,
                                              double phi, double lambda,
                                              const ClassificationOptions& opts) {
  const SpectralPoint sp = spectral_point(c, phi, lambda);
  ClassificationPrediction out;
  out.convention = opts.convention;
  out.omega = omega_for(geom, c, opts.convention);
  out.omega_tilde = c.beta_tilde * geom.rho_star();
  const double one_plus = 1.0 + phi * sp.m;

  if (block_applies(c, opts)) {
    const BlockFit f = solve_block(block_of(c, true), c, lambda * one_plus);
    const double noise = f.residual * phi * (sp.m - lambda * sp.m_prime) / c.p;
    out.m0 = one_plus * (geom.rho_star() * f.a1 + generator_alignment(geom) * f.a2);
    out.nu0 = one_plus * one_plus * (f.a1 * f.a1 + f.a2 * f.a2 + noise);
    out.block_corrected = true;
  } else {
    out.m0 = out.omega * sp.m + out.omega_tilde * sp.m_tilde;
    out.nu0 = c.p * phi * sp.m_prime + sp.r_prime - 2.0 * phi * sp.m_prime * sp.r / one_plus;
  }
  out.error = angle_error(out.m0, out.nu0);
  return out;
}

double classification_error_ridgeless(const GeometrySpec& geom, const CurationConstants& c,
                                      double phi, const ClassificationOptions& opts) {
  check_phi(phi);
  if (!(c.p > 0.0 && c.p <= 1.0)) throw InvalidArgument("p must lie in (0, 1]");
  if (std::abs(phi - c.p) < 1e-9) {
    throw InvalidArgument("classification_error_ridgeless: phi at interpolation threshold p");
  }
  // lambda (1 + phi m) -> 0 below the threshold and -> phi - p above it; the
  // orthogonal noise factor phi (m - lambda m') / p tends to phi / (p (p - phi))
  // and 1 / (phi - p) respectively.
  const bool under = phi < c.p;
  const double shift = under ? 0.0 : phi - c.p;
  const double noise_factor = under ? phi / (c.p * (c.p - phi)) : 1.0 / (phi - c.p);

  const bool use_block = block_applies(c, opts);
  const BlockFit f = solve_block(block_of(c, use_block), c, shift);
  double m0 = 0.0;
  if (use_block) {
    m0 = geom.rho_star() * f.a1 + generator_alignment(geom) * f.a2;
  } else {
    const double omega = omega_for(geom, c, opts.convention);
    m0 = c.beta_tilde * geom.rho_star() / (c.gamma + shift) + omega / (c.p + shift);
  }
  return angle_error(m0, f.a1 * f.a1 + f.a2 * f.a2 + f.residual * noise_factor);
}

double data_rich_F(const GeometrySpec& geom, const CurationConstants& c,
                   const ClassificationOptions& opts) {
  if (c.beta == 0.0 && c.beta_tilde == 0.0) {
    throw InvalidArgument("data_rich_F: beta and beta_tilde both vanish");
  }
  const bool use_block = block_applies(c, opts);
  const BlockFit f = solve_block(block_of(c, use_block), c, 0.0);
  double m0 = 0.0;
  if (use_block) {
    m0 = geom.rho_star() * f.a1 + generator_alignment(geom) * f.a2;
  } else {
    m0 = c.beta_tilde * geom.rho_star() / c.gamma + omega_for(geom, c, opts.convention) / c.p;
  }
  return angle_error(m0, f.a1 * f.a1 + f.a2 * f.a2);
}

StrategyReport compare_strategies(const GeometrySpec& geom, double p, CurationMode mode) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("compare_strategies: p must lie in (0, 1]");
  if (!(geom.rho_g() > 0.0)) throw InvalidArgument("compare_strategies: requires rho_g > 0");
  const CurationConstants ke = constants(PruningFunction::keep_easy_fraction(p), mode, geom);
  const CurationConstants kh = constants(PruningFunction::keep_hard_fraction(p), mode, geom);
  const CurationConstants bl = constants(PruningFunction::qpu(p, 0.5), mode, geom);

  StrategyReport rep;
  rep.p = p;
  rep.f_keep_easy = data_rich_F(geom, ke);
  rep.f_keep_hard = data_rich_F(geom, kh);
  rep.f_blend = data_rich_F(geom, bl);
  rep.j_keep_easy = j_ratio(ke);
  rep.j_keep_hard = j_ratio(kh);

  rep.argmin = StrategyChoice::KeepHard;
  double best = rep.f_keep_hard;
  if (rep.f_keep_easy < best) {
    best = rep.f_keep_easy;
    rep.argmin = StrategyChoice::KeepEasy;
  }
  if (rep.f_blend < best) rep.argmin = StrategyChoice::Blend;

  if (geom.rho_star() >= kExcellent) {
    rep.predicted = geom.rho() >= kExcellent ? StrategyChoice::KeepHard : StrategyChoice::KeepEasy;
    rep.matches_prediction = rep.argmin == *rep.predicted;
  }
  return rep;
}

RegressionGeometry::RegressionGeometry(double norm_wg, double rho, double rho_g, double rho_star)
    : r_(norm_wg), geom_(rho, rho_g, rho_star) {
  if (!(norm_wg > 0.0) || std::isinf(norm_wg)) {
    throw InvalidArgument("RegressionGeometry: ||w_g|| must be finite and > 0");
  }
}

double RegressionGeometry::wg_parallel_sq() const {
  return geom_.rho_g() * geom_.rho_g() * r_ * r_;
}

double RegressionGeometry::wg_perp_sq() const {
  return (1.0 - geom_.rho_g() * geom_.rho_g()) * r_ * r_;
}

double RegressionGeometry::a() const {
  return wg_perp_sq() - r_ * (geom_.rho() - geom_.rho_g() * geom_.rho_star());
}

double RegressionGeometry::b() const {
  return wg_parallel_sq() - r_ * geom_.rho_g() * geom_.rho_star();
}

double RegressionGeometry::c_sq() const {
  return std::max(0.0, 1.0 + r_ * r_ - 2.0 * r_ * geom_.rho());
}

double RegressionGeometry::dist_sq_to_parallel() const {
  return std::max(0.0, 1.0 + wg_parallel_sq() - 2.0 * r_ * geom_.rho_g() * geom_.rho_star());
}

double RegressionGeometry::dist_sq_to_perp() const {
  return std::max(0.0, 1.0 + wg_perp_sq() -
                           2.0 * r_ * (geom_.rho() - geom_.rho_g() * geom_.rho_star()));
}

RegressionPrediction regression_error(const RegressionGeometry& rg, const CurationConstants& c,
                                      double phi, double lambda, double sigma) {
  if (!(sigma >= 0.0) || std::isinf(sigma)) throw InvalidArgument("sigma must be >= 0");
  const SpectralPoint sp = spectral_point(c, phi, lambda);
  RegressionPrediction out;
  out.bias_B = lambda * lambda * (sp.m_prime * rg.wg_perp_sq() + sp.m_tilde_prime * rg.wg_parallel_sq());
  out.variance_V = sigma * sigma * phi * sp.m_bar_prime;
  out.shift_correction = rg.c_sq() - 2.0 * lambda * (sp.m * rg.a() + sp.m_tilde * rg.b());
  out.total = out.bias_B + out.variance_V + out.shift_correction;
  return out;
}

double regression_error_ridgeless(const RegressionGeometry& rg, const CurationConstants& c,
                                  double phi, double sigma) {
  if (!(sigma >= 0.0) || std::isinf(sigma)) throw InvalidArgument("sigma must be >= 0");
  const RidgelessLimits lim = ridgeless_limits(c, phi);
  const double variance = sigma * sigma * phi * lim.m_bar_prime;
  if (lim.branch == RidgelessBranch::UnderParameterized) return variance + rg.c_sq();
  // Over-parameterized: lambda^2 m' -> c0 and lambda m -> c0, likewise for m_tilde.
  const double bias = lim.m_prime * rg.wg_perp_sq() + lim.m_tilde_prime * rg.wg_parallel_sq();
  return variance + bias + rg.c_sq() - 2.0 * (lim.m * rg.a() + lim.m_tilde * rg.b());
}

CollapseMitigation collapse_mitigation(const RegressionGeometry& rg) {
  CollapseMitigation out;
  out.uncurated_limit = rg.c_sq();
  out.D = rg.wg_perp_sq() - 2.0 * rg.a();
  out.E = rg.wg_parallel_sq() - 2.0 * rg.b();
  const bool lens = out.D < 0.0 && out.E > 0.0;
  out.curated_limit = lens ? rg.dist_sq_to_parallel() : out.uncurated_limit;
  out.mitigates = out.curated_limit < out.uncurated_limit;
  return out;
}

double optimal_p_asymptotic(double phi, double t) {
  if (!(phi > 0.0 && phi < 1.0)) throw InvalidArgument("optimal_p_asymptotic: phi must lie in (0, 1)");
  if (!(t > 0.0) || std::isinf(t)) {
    throw InvalidArgument("optimal_p_asymptotic: t = -D/E must be > 0 (no interior optimum)");
  }
  // Balancing -D/phi against E phi / (alpha p)^2 with alpha^2 ~ 2 log(1/phi).
  return phi / std::sqrt(2.0 * t * std::log(1.0 / phi));
}

}  // namespace curlaw
