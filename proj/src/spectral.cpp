#include "curation_laws/spectral.hpp"

#include <cmath>
#include <string>

#include "curation_laws/errors.hpp"

namespace curlaw {
namespace {

constexpr double kThresholdGap = 1e-9;

void check_spectral_inputs(double p, double phi, double lambda) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("spectral: p must lie in (0, 1]");
  if (!(phi > 0.0) || std::isinf(phi)) throw InvalidArgument("spectral: phi must be > 0");
  if (!(lambda > 0.0) || std::isinf(lambda)) {
    throw InvalidArgument("spectral: lambda must be > 0 (use ridgeless_limits for lambda = 0)");
  }
}

}  // namespace

double stieltjes_m(double p, double phi, double lambda) {
  check_spectral_inputs(p, phi, lambda);
  const double shifted = p - phi + lambda;  // p - phi - z
  const double root = std::sqrt(shifted * shifted + 4.0 * phi * lambda);
  // Both branches are the same root; pick the one without subtractive loss.
  if (shifted > 0.0) return 2.0 / (shifted + root);
  return (root - shifted) / (2.0 * phi * lambda);
}

SpectralPoint spectral_point(const CurationConstants& c, double phi, double lambda) {
  if (!(c.gamma >= 0.0)) throw InvalidArgument("spectral_point: gamma must be >= 0");
  SpectralPoint sp;
  sp.p = c.p;
  sp.gamma = c.gamma;
  sp.beta = c.beta;
  sp.beta_tilde = c.beta_tilde;
  sp.phi = phi;
  sp.z = -lambda;
  sp.m = stieltjes_m(c.p, phi, lambda);

  const double z = sp.z;
  const double m = sp.m;
  const double one_plus = 1.0 + phi * m;
  sp.m_bar = z * m;
  sp.m_prime = m * m / (1.0 - (1.0 + sp.m_bar) * (1.0 + sp.m_bar) * phi / c.p);
  const double inv_m = 1.0 / m;
  sp.m_bar_prime = c.p / ((phi + inv_m) * (phi + inv_m) - c.p * phi);
  sp.s = c.gamma / one_plus;
  if (!(sp.s - z > 0.0)) throw InternalError("spectral_point: s - z must be positive");
  sp.m_tilde = 1.0 / (sp.s - z);
  sp.m_tilde_prime =
      sp.m_tilde * sp.m_tilde * (c.gamma * phi * sp.m_prime / (one_plus * one_plus) + 1.0);
  const double b2 = c.beta * c.beta;
  const double bt2 = c.beta_tilde * c.beta_tilde;
  sp.r = b2 * sp.m + bt2 * sp.m_tilde;
  sp.r_prime = b2 * sp.m_prime + bt2 * sp.m_tilde_prime;
  return sp;
}

RidgelessLimits ridgeless_limits(const CurationConstants& c, double phi) {
  if (!(c.p > 0.0 && c.p <= 1.0)) throw InvalidArgument("ridgeless_limits: p must lie in (0, 1]");
  if (!(phi > 0.0) || std::isinf(phi)) throw InvalidArgument("ridgeless_limits: phi must be > 0");
  if (!(c.gamma > 0.0)) throw InvalidArgument("ridgeless_limits: gamma must be > 0");
  if (std::abs(phi - c.p) < kThresholdGap) {
    throw InvalidArgument("ridgeless_limits: phi = " + std::to_string(phi) +
                          " is at interpolation threshold p = " + std::to_string(c.p));
  }
  const double p = c.p;
  const double gamma = c.gamma;
  const double b2 = c.beta * c.beta;
  const double bt2 = c.beta_tilde * c.beta_tilde;

  RidgelessLimits lim;
  if (phi < p) {
    const double gap = p - phi;
    lim.branch = RidgelessBranch::UnderParameterized;
    lim.m = 1.0 / gap;
    lim.m_bar = 0.0;
    lim.m_tilde = (p / gamma) / gap;
    lim.m_prime = p / (gap * gap * gap);
    lim.m_bar_prime = 1.0 / gap;
    lim.m_tilde_prime = (p / (gamma * gamma)) * (p * gap + phi * gamma) / (gap * gap * gap);
  } else {
    lim.branch = RidgelessBranch::OverParameterized;
    lim.c0 = 1.0 - p / phi;
    lim.c1 = gamma / phi + lim.c0;
    lim.m = lim.c0;
    lim.m_prime = lim.c0;
    lim.m_bar = -lim.c0;
    lim.m_bar_prime = (p / phi) / (phi - p);
    lim.m_tilde = lim.c0 / lim.c1;
    lim.m_tilde_prime = lim.c0 / lim.c1;
  }
  lim.r = b2 * lim.m + bt2 * lim.m_tilde;
  lim.r_prime = b2 * lim.m_prime + bt2 * lim.m_tilde_prime;
  return lim;
}

double general_t_solver(std::span<const SpectrumAtom> spectrum, double p, double phi,
                        double lambda) {
  check_spectral_inputs(p, phi, lambda);
  if (spectrum.empty()) throw InvalidArgument("general_t_solver: empty spectrum");
  double total_weight = 0.0;
  for (const auto& [eig, w] : spectrum) {
    if (!(eig > 0.0) || !(w >= 0.0)) {
      throw InvalidArgument("general_t_solver: eigenvalues must be > 0 and weights >= 0");
    }
    total_weight += w;
  }
  if (std::abs(total_weight - 1.0) > 1e-12) {
    throw InvalidArgument("general_t_solver: weights must sum to 1");
  }

  // Residual is strictly decreasing in t, positive (= p) at t = 0 and <= p - t.
  auto residual = [&](double t) {
    double trace = 0.0;
    for (const auto& [eig, w] : spectrum) trace += w / (t * eig + lambda);
    return p - phi - t + lambda * phi * trace;
  };
  double lo = 0.0;
  double hi = p;
  for (int it = 0; it < 200 && hi - lo > 1e-17 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) > 0.0 ? lo : hi) = mid;
  }
  const double t = 0.5 * (lo + hi);
  if (std::abs(residual(t)) > 1e-12) {
    throw ConvergenceError("general_t_solver: fixed point residual " +
                           std::to_string(residual(t)) + " (ill-conditioned spectrum?)");
  }
  return t;
}

}  // namespace curlaw
