#pragma once

#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace curlaw {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

/// Standard normal density. Rejects non-finite input.
double std_normal_pdf(double x);

/// Standard normal distribution function, accurate to ~1e-16 absolute.
/// Accepts +-infinity.
double std_normal_cdf(double x);

/// Inverse of std_normal_cdf on the open interval (0, 1).
double std_normal_quantile(double u);

/// Same as std_normal_quantile but maps u = 0 to -inf and u = 1 to +inf.
double std_normal_quantile_extended(double u);

/// P(G1 <= x, G2 <= y) for a standard bivariate normal with correlation
/// `corr`. Endpoints may be infinite.
double bivariate_normal_cdf(double x, double y, double corr);

struct Interval {
  double lo;
  double hi;  // may be +infinity
};

/// A finite, strictly ordered union of disjoint intervals in [0, inf].
/// Only the last interval may be unbounded.
class IntervalUnion {
 public:
  IntervalUnion() = default;
  explicit IntervalUnion(std::vector<Interval> intervals);
  IntervalUnion(std::initializer_list<Interval> intervals);

  std::span<const Interval> intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  bool contains(double t) const;

 private:
  std::vector<Interval> intervals_;
};

/// Integral of f(t) * phi(t) over `domain` (a subset of the half line).
/// Unbounded pieces are truncated at t = 12.
double expectation_over_gaussian(const std::function<double(double)>& f,
                                 const IntervalUnion& domain);

/// Integrands f_k for the oracle partial integrals int_0^alpha f_k(x) phi(x) dx,
/// with tau = rho_g / sqrt(1 - rho_g^2).
enum class PartialIntegrand {
  AgreementProbability = 1,  // Phi(tau x)
  OracleDensity = 2,         // phi(tau x)
  FirstMoment = 3,           // x Phi(tau x)
  SecondMoment = 4,          // x^2 Phi(tau x)
};

double partial_integrand(PartialIntegrand k, double x, double rho_g);

/// Closed-form int_0^alpha f_k(x) phi(x) dx. alpha may be +infinity.
/// |rho_g| must be < 1.
double partial_integral(PartialIntegrand k, double alpha, double rho_g);

}  // namespace curlaw
