#pragma once

#include <span>

#include "curation_laws/curation.hpp"

namespace curlaw {

/// Stieltjes transform m(z) at z = -lambda of the pruned sample covariance:
/// the positive root of 1/m = -z + p / (1 + phi m).
double stieltjes_m(double p, double phi, double lambda);

/// Spectral functions and their z-derivatives, all evaluated at z = -lambda.
struct SpectralPoint {
  double z = 0.0;
  double m = 0.0;
  double m_prime = 0.0;
  double m_bar = 0.0;  // z m(z)
  double m_bar_prime = 0.0;
  double s = 0.0;  // gamma / (1 + phi m)
  double m_tilde = 0.0;  // 1 / (s - z)
  double m_tilde_prime = 0.0;
  double r = 0.0;  // beta^2 m + beta_tilde^2 m_tilde
  double r_prime = 0.0;

  double p = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double beta_tilde = 0.0;
  double phi = 0.0;
};

SpectralPoint spectral_point(const CurationConstants& c, double phi, double lambda);

enum class RidgelessBranch { UnderParameterized, OverParameterized };

/// lambda -> 0 limits of the spectral functions. On the under-parameterized
/// branch (phi < p) the plain limits are finite and stored directly. On the
/// over-parameterized branch (phi > p) m, m_tilde and r blow up like 1/lambda
/// and their primes like 1/lambda^2, so the stored values are the limits of
/// -z m, z^2 m', -z m_tilde, z^2 m_tilde', -z r and z^2 r'.
struct RidgelessLimits {
  RidgelessBranch branch = RidgelessBranch::UnderParameterized;
  double m = 0.0;
  double m_prime = 0.0;
  double m_bar = 0.0;
  double m_bar_prime = 0.0;
  double m_tilde = 0.0;
  double m_tilde_prime = 0.0;
  double r = 0.0;
  double r_prime = 0.0;
  double c0 = 0.0;  // 1 - p/phi (over-parameterized only)
  double c1 = 0.0;  // gamma/phi + c0 (over-parameterized only)
};

RidgelessLimits ridgeless_limits(const CurationConstants& c, double phi);

struct SpectrumAtom {
  double eigenvalue;
  double weight;
};

/// Positive solution t of p - phi - t = z phi sum_k w_k / (t c_k - z) at
/// z = -lambda, for a population covariance with discrete spectrum {c_k, w_k}.
double general_t_solver(std::span<const SpectrumAtom> spectrum, double p, double phi,
                        double lambda);

}  // namespace curlaw
