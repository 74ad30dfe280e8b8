#include "curation_laws/special_fn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "curation_laws/errors.hpp"

namespace curlaw {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailCutoff = 12.0;

// Acklam's rational approximation, relative error ~1.2e-9 over (0, 1).
double quantile_initial_guess(double u) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;

  if (u < kLow) {
    const double q = std::sqrt(-2.0 * std::log(u));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = u - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Lower-half quantile (u <= 0.5), where Phi(x) - u keeps full relative precision.
double lower_quantile(double u) {
  double x = quantile_initial_guess(u);
  for (int step = 0; step < 2; ++step) {
    const double density = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    if (density <= 0.0) break;
    x -= (std_normal_cdf(x) - u) / density;
  }
  return x;
}

}  // namespace

double std_normal_pdf(double x) {
  if (!std::isfinite(x)) {
    throw InvalidArgument("std_normal_pdf: non-finite argument");
  }
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double std_normal_cdf(double x) {
  if (std::isnan(x)) throw InvalidArgument("std_normal_cdf: NaN argument");
  if (x == kInf) return 1.0;
  if (x == -kInf) return 0.0;
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double std_normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw InvalidArgument("std_normal_quantile: u must lie in (0, 1), got " +
                          std::to_string(u));
  }
  if (u == 0.5) return 0.0;
  if (u < 0.5) return lower_quantile(u);
  return -lower_quantile(1.0 - u);
}

double std_normal_quantile_extended(double u) {
  if (u == 0.0) return -kInf;
  if (u == 1.0) return kInf;
  return std_normal_quantile(u);
}

double bivariate_normal_cdf(double x, double y, double corr) {
  if (std::isnan(x) || std::isnan(y) || std::isnan(corr)) {
    throw InvalidArgument("bivariate_normal_cdf: NaN argument");
  }
  if (std::abs(corr) > 1.0) {
    throw InvalidArgument("bivariate_normal_cdf: |corr| must be <= 1");
  }
  if (x == -kInf || y == -kInf) return 0.0;
  if (x == kInf) return std_normal_cdf(y);
  if (y == kInf) return std_normal_cdf(x);
  if (corr == 1.0) return std_normal_cdf(std::min(x, y));
  if (corr == -1.0) {
    return std::max(0.0, std_normal_cdf(x) + std_normal_cdf(y) - 1.0);
  }

  // d/dr Phi2(x, y; r) is the bivariate density at (x, y); substituting
  // r = sin(theta) removes the 1/sqrt(1 - r^2) singularity.
  const double diff2 = (x - y) * (x - y);
  const double cross = x * y;
  auto integrand = [&](double theta) {
    const double s = std::sin(theta);
    const double half = std::sin(std::numbers::pi / 4.0 - 0.5 * theta);
    const double one_minus_s = 2.0 * half * half;
    const double cos2 = one_minus_s * (1.0 + s);
    const double quad = diff2 + 2.0 * cross * one_minus_s;
    return std::exp(-0.5 * quad / cos2);
  };

  const double upper = std::asin(corr);
  double integral = 0.0;
  if (upper != 0.0) {
    const double lo = std::min(0.0, upper);
    const double hi = std::max(0.0, upper);
    double err = 0.0;
    integral = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
        integrand, lo, hi, 12, 1e-13, &err);
    if (upper < 0.0) integral = -integral;
  }
  const double value =
      std_normal_cdf(x) * std_normal_cdf(y) + integral / (2.0 * std::numbers::pi);
  return std::clamp(value, 0.0, 1.0);
}

IntervalUnion::IntervalUnion(std::vector<Interval> intervals)
    : intervals_(std::move(intervals)) {
  double previous_hi = -1.0;
  for (std::size_t j = 0; j < intervals_.size(); ++j) {
    const auto& [lo, hi] = intervals_[j];
    if (std::isnan(lo) || std::isnan(hi) || !std::isfinite(lo)) {
      throw InvalidArgument("IntervalUnion: endpoints must be numbers, lower ends finite");
    }
    if (lo < 0.0) throw InvalidArgument("IntervalUnion: intervals must lie in [0, inf]");
    if (!(lo < hi)) throw InvalidArgument("IntervalUnion: each interval needs lo < hi");
    if (!(lo > previous_hi)) {
      throw InvalidArgument("IntervalUnion: intervals must be strictly ordered and disjoint");
    }
    if (hi == kInf && j + 1 != intervals_.size()) {
      throw InvalidArgument("IntervalUnion: only the last interval may be unbounded");
    }
    previous_hi = hi;
  }
}

IntervalUnion::IntervalUnion(std::initializer_list<Interval> intervals)
    : IntervalUnion(std::vector<Interval>(intervals)) {}

bool IntervalUnion::contains(double t) const {
  return std::any_of(intervals_.begin(), intervals_.end(),
                     [t](const Interval& iv) { return t >= iv.lo && t <= iv.hi; });
}

double expectation_over_gaussian(const std::function<double(double)>& f,
                                 const IntervalUnion& domain) {
  double total = 0.0;
  for (const auto& [lo, hi_raw] : domain.intervals()) {
    const double hi = std::min(hi_raw, kTailCutoff);
    if (lo >= hi) continue;
    auto integrand = [&](double t) { return f(t) * kInvSqrt2Pi * std::exp(-0.5 * t * t); };
    double err = 0.0;
    double l1 = 0.0;
    const double piece = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, lo, hi, 20, 1e-13, &err, &l1);
    if (!std::isfinite(piece) || err > std::max(1e-11 * l1, 1e-15)) {
      throw ConvergenceError("expectation_over_gaussian: quadrature did not converge on [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    total += piece;
  }
  return total;
}

double partial_integrand(PartialIntegrand k, double x, double rho_g) {
  const double tau = rho_g / std::sqrt(1.0 - rho_g * rho_g);
  switch (k) {
    case PartialIntegrand::AgreementProbability:
      return std_normal_cdf(tau * x);
    case PartialIntegrand::OracleDensity:
      return std_normal_pdf(tau * x);
    case PartialIntegrand::FirstMoment:
      return x * std_normal_cdf(tau * x);
    case PartialIntegrand::SecondMoment:
      return x * x * std_normal_cdf(tau * x);
  }
  throw InvalidArgument("partial_integrand: unknown integrand");
}

double partial_integral(PartialIntegrand k, double alpha, double rho_g) {
  if (std::isnan(alpha) || alpha < 0.0) {
    throw InvalidArgument("partial_integral: alpha must be >= 0");
  }
  if (!(std::abs(rho_g) < 1.0)) {
    throw InvalidArgument("partial_integral: |rho_g| must be < 1");
  }
  const double sigma = std::sqrt(1.0 - rho_g * rho_g);
  const double tau = rho_g / sigma;
  const double phi0 = kInvSqrt2Pi;
  const bool infinite = std::isinf(alpha);

  // phi(alpha), alpha * phi(alpha) and phi(alpha) phi(tau alpha) all vanish at infinity.
  const double pdf_alpha = infinite ? 0.0 : std_normal_pdf(alpha);
  const double cdf_tau_alpha = infinite ? (tau > 0 ? 1.0 : tau < 0 ? 0.0 : 0.5)
                                        : std_normal_cdf(tau * alpha);

  auto agreement = [&] {
    const double orthant = 0.25 + std::asin(rho_g) / (2.0 * std::numbers::pi);
    return std_normal_cdf(alpha) - 0.5 -
           (bivariate_normal_cdf(alpha, 0.0, rho_g) - orthant);
  };
  auto oracle_density = [&] {
    const double scaled = infinite ? 1.0 : std_normal_cdf(alpha / sigma);
    return sigma * phi0 * (scaled - 0.5);
  };

  switch (k) {
    case PartialIntegrand::AgreementProbability:
      return agreement();
    case PartialIntegrand::OracleDensity:
      return oracle_density();
    case PartialIntegrand::FirstMoment:
      return tau * oracle_density() - (pdf_alpha * cdf_tau_alpha - 0.5 * phi0);
    case PartialIntegrand::SecondMoment: {
      const double boundary = infinite ? 0.0 : alpha * pdf_alpha * cdf_tau_alpha;
      const double pdf_product = infinite ? 0.0 : pdf_alpha * std_normal_pdf(tau * alpha);
      return agreement() - boundary + rho_g * sigma * (phi0 * phi0 - pdf_product);
    }
  }
  throw InvalidArgument("partial_integral: unknown integrand");
}

}  // namespace curlaw
