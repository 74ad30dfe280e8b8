#pragma once

#include <string>

#include "curation_laws/curation.hpp"
#include "curation_laws/spectral.hpp"

namespace curlaw {

/// Which definition of omega enters m0 = omega m + omega_tilde m_tilde.
enum class OmegaConvention {
  TheoremStatement,  // omega = rho - rho_g rho_star
  ProofDerivation,   // omega = beta (rho - rho_g rho_star) / sqrt(1 - rho_g^2)
};

std::string to_string(OmegaConvention c);

struct ClassificationOptions {
  OmegaConvention convention = OmegaConvention::ProofDerivation;
  /// When the constants carry a generator block (label-aware curation), solve
  /// the coupled 2x2 problem on span(w_o, v). Off reproduces the plain
  /// substitution of label-aware constants into the label-agnostic law.
  bool use_generator_block = true;
};

struct ClassificationPrediction {
  double m0 = 0.0;
  double nu0 = 0.0;
  double omega = 0.0;
  double omega_tilde = 0.0;
  double error = 0.5;
  OmegaConvention convention = OmegaConvention::ProofDerivation;
  bool block_corrected = false;
};

/// Limiting test error of the ridge classifier trained on curated data.
ClassificationPrediction classification_error(const GeometrySpec& geom, const CurationConstants& c,
                                              double phi, double lambda,
                                              const ClassificationOptions& opts = {});

/// lambda -> 0 limit of classification_error; phi == p is rejected.
double classification_error_ridgeless(const GeometrySpec& geom, const CurationConstants& c,
                                      double phi, const ClassificationOptions& opts = {});

/// phi -> 0 then lambda -> 0 limit of the test error.
double data_rich_F(const GeometrySpec& geom, const CurationConstants& c,
                   const ClassificationOptions& opts = {});

enum class StrategyChoice { KeepEasy, KeepHard, Blend };
std::string to_string(StrategyChoice s);

struct StrategyReport {
  double p = 0.0;
  double f_keep_easy = 0.0;
  double f_keep_hard = 0.0;
  double f_blend = 0.0;  // qpu(p, 0.5)
  double j_keep_easy = 0.0;
  double j_keep_hard = 0.0;
  StrategyChoice argmin = StrategyChoice::KeepHard;
  /// Ordering the optimality theorem predicts for this (rho, rho_star), if any.
  std::optional<StrategyChoice> predicted;
  bool matches_prediction = false;
};

/// Data-rich error of keep-easy, keep-hard and a mid blend at keep fraction p.
StrategyReport compare_strategies(const GeometrySpec& geom, double p, CurationMode mode);

/// Regression geometry with ||w_*|| = 1 and ||w_g|| = norm_wg.
class RegressionGeometry {
 public:
  RegressionGeometry(double norm_wg, double rho, double rho_g, double rho_star);

  const GeometrySpec& cosines() const { return geom_; }
  double norm_wg() const { return r_; }
  double wg_parallel_sq() const;
  double wg_perp_sq() const;
  double a() const;
  double b() const;
  double c_sq() const;
  /// ||w_* - w_g^par||^2 and ||w_* - w_g^perp||^2, w_g^par the part along w_o.
  double dist_sq_to_parallel() const;
  double dist_sq_to_perp() const;

 private:
  double r_;
  GeometrySpec geom_;
};

struct RegressionPrediction {
  double bias_B = 0.0;
  double variance_V = 0.0;
  double shift_correction = 0.0;  // c^2 - 2 lambda (m a + m_tilde b)
  double total = 0.0;
};

RegressionPrediction regression_error(const RegressionGeometry& rg, const CurationConstants& c,
                                      double phi, double lambda, double sigma);

double regression_error_ridgeless(const RegressionGeometry& rg, const CurationConstants& c,
                                  double phi, double sigma);

struct CollapseMitigation {
  bool mitigates = false;
  double uncurated_limit = 0.0;
  double curated_limit = 0.0;
  double D = 0.0;  // ||w_g^perp||^2 - 2a
  double E = 0.0;  // ||w_g^par||^2 - 2b
};

/// Noiseless data-rich limits with and without the best keep-easy pruning.
CollapseMitigation collapse_mitigation(const RegressionGeometry& rg);

/// Leading-order minimizer over p of the over-parameterized noiseless
/// regression limit, for small phi and t = -D/E > 0.
double optimal_p_asymptotic(double phi, double t);

}  // namespace curlaw
