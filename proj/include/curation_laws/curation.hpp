#pragma once

#include <optional>
#include <string>

#include "curation_laws/special_fn.hpp"

namespace curlaw {

/// Symmetric keep/drop rule q(t) = 1 iff |t| lies in the half support S.
class PruningFunction {
 public:
  explicit PruningFunction(IntervalUnion half_support);

  /// q(t) = 1[|t| >= alpha]: keeps large-margin ("easy") examples.
  static PruningFunction keep_easy(double alpha);
  /// q(t) = 1[|t| <= alpha]: keeps small-margin ("hard") examples.
  static PruningFunction keep_hard(double alpha);
  /// Keep-easy rule whose Gaussian keep fraction equals p.
  static PruningFunction keep_easy_fraction(double p);
  /// Keep-hard rule whose Gaussian keep fraction equals p.
  static PruningFunction keep_hard_fraction(double p);
  /// Blend of a central band and two tails; keeps fraction p, of which
  /// a share u sits in the tails.
  static PruningFunction qpu(double p, double u);
  /// q == 1.
  static PruningFunction keep_all();

  const IntervalUnion& half_support() const { return half_support_; }
  bool keeps(double t) const;
  /// E[q(G)] for G ~ N(0, 1).
  double gaussian_mass() const;

 private:
  IntervalUnion half_support_;
};

enum class CurationMode { LabelAgnostic, LabelAware };

std::string to_string(CurationMode mode);
CurationMode parse_curation_mode(const std::string& text);

/// Pairwise cosines between the ground truth w_*, the generator w_g and the
/// pruning oracle w_o. Construction checks that the triple is realizable.
class GeometrySpec {
 public:
  /// rho = cos(w_g, w_*), rho_g = cos(w_o, w_g), rho_star = cos(w_o, w_*).
  GeometrySpec(double rho, double rho_g, double rho_star);

  double rho() const { return rho_; }
  double rho_g() const { return rho_g_; }
  double rho_star() const { return rho_star_; }

  /// Cotangent of the oracle-generator angle; requires |rho_g| < 1.
  double tau() const;
  double sigma_perp() const;
  /// Cosine of the dihedral angle between the (w_o, w_g) and (w_o, w_*)
  /// planes; empty when either plane is degenerate.
  std::optional<double> cos_xi() const;
  /// (rho - rho_g rho_star) / sqrt(1 - rho_g^2): the projection of w_* on the
  /// unit direction of w_g orthogonal to w_o. Requires |rho_g| < 1.
  double perpendicular_alignment() const;

 private:
  double rho_;
  double rho_g_;
  double rho_star_;
};

/// Second moments of the kept data on span(w_o, v), v the unit direction of
/// w_g orthogonal to w_o. Label-aware filtering couples the two coordinates.
struct GeneratorBlock {
  double cross = 0.0;  // E[keep * (x.w_o) * (x.v)]
  double mass = 0.0;   // E[keep * (x.v)^2]
};

/// p (keep ratio), gamma, beta and beta_tilde.
struct CurationConstants {
  double p = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double beta_tilde = 0.0;
  /// Empty means the block is diag(gamma, p), which holds for label-agnostic rules.
  std::optional<GeneratorBlock> generator_block;
};

enum class Verification { Off, CrossCheck };

/// Constants from interval-sum closed forms. With CrossCheck, also computes
/// them by quadrature and throws InternalError when the two differ by > 1e-8.
CurationConstants constants(const PruningFunction& q, CurationMode mode,
                            const GeometrySpec& geom,
                            Verification verify = Verification::Off);
CurationConstants constants_closed_form(const PruningFunction& q, CurationMode mode,
                                        double rho_g);
CurationConstants constants_by_quadrature(const PruningFunction& q, CurationMode mode,
                                          double rho_g);

struct LensBounds {
  double gamma_min;
  double gamma_max;
};

/// Attainable range of gamma over all symmetric rules keeping fraction p.
LensBounds gamma_bounds(double p);

/// Label-agnostic gamma of qpu(p, u).
double qpu_gamma(double p, double u);

/// u in [0, 1] with qpu_gamma(p, u) == gamma_target (to 1e-10), by bisection.
double solve_u_for_gamma(double p, double gamma_target);

/// gamma * beta / (p * beta_tilde).
double j_ratio(const CurationConstants& c);

}  // namespace curlaw
