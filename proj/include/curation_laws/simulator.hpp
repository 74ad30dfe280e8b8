#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curation_laws/curation.hpp"

namespace curlaw {

enum class Task { Classification, Regression };

std::string to_string(Task task);
Task parse_task(const std::string& text);

struct ExperimentConfig {
  Task task = Task::Classification;
  std::size_t n = 1000;
  std::size_t d = 200;
  double lambda = 1e-6;
  CurationMode mode = CurationMode::LabelAgnostic;
  PruningFunction strategy = PruningFunction::keep_all();
  GeometrySpec geometry{1.0, 0.0, 0.0};
  double norm_wg = 1.0;  // regression only
  double sigma = 0.0;    // regression label noise
  std::size_t trials = 1;
  std::uint64_t seed = 0;

  double phi() const { return static_cast<double>(d) / static_cast<double>(n); }
  /// Throws InvalidArgument on out-of-range fields.
  void validate() const;
};

/// Splitmix64-based generator seeded from a (seed, trial, round, row) key.
class CounterRng {
 public:
  using result_type = std::uint64_t;
  CounterRng(std::uint64_t seed, std::uint64_t trial, std::uint64_t round, std::uint64_t row);
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

 private:
  std::uint64_t state_;
};

struct Directions {
  Eigen::VectorXd w_star;
  Eigen::VectorXd w_g;  // unit norm
  Eigen::VectorXd w_o;
};

/// Unit vectors on the first three coordinates realizing the geometry's cosines.
Directions construct_vectors(const GeometrySpec& geom, std::size_t d);

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

/// Gaussian rows labeled by `generator` (sign for classification, linear plus
/// N(0, sigma^2) noise for regression). Row i draws from CounterRng(seed, trial, round, i).
Dataset sample_dataset(const ExperimentConfig& cfg, const Eigen::VectorXd& generator,
                       std::uint64_t trial, std::uint64_t round);

/// Keep mask; throws EmptyKeptSet when nothing survives.
std::vector<char> apply_curation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& w_o, const PruningFunction& q,
                                 CurationMode mode);

/// Solves (X'DX/n + lambda I) w = X'Dy/n with a Cholesky factorization.
Eigen::VectorXd ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const std::vector<char>& mask, double lambda);

/// arccos of the cosine between w_hat and w_star, over pi. Returns 0.5 and sets
/// *degenerate when w_hat is zero.
double exact_classification_error(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_star,
                                  bool* degenerate = nullptr);

/// ||w_hat - w_star||^2.
double exact_regression_error(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_star);

struct TrialResult {
  std::size_t trial = 0;
  std::size_t kept_count = 0;
  double w_hat_cosine = 0.0;
  double test_error = 0.0;
  double regression_error = 0.0;
  bool degenerate = false;
};

struct TrialSummary {
  double mean = 0.0;  // of test_error (classification) or regression_error
  double std_error = 0.0;
  double kept_fraction_mean = 0.0;
  std::size_t skipped_trials = 0;
  std::vector<TrialResult> per_trial;  // successful trials in index order
};

/// Independent trials; trials whose curation keeps nothing are skipped and
/// counted. Throws EmptyKeptSet if every trial is skipped.
TrialSummary run_trials(const ExperimentConfig& cfg);

struct CollapseConfig {
  ExperimentConfig base;
  std::size_t rounds = 1;
  bool curate_each_round = false;
  bool fresh_inputs_each_round = true;
};

struct CollapseRound {
  std::size_t round = 0;
  double error = 0.0;
  double rho = 0.0;    // cos(w_g^(t), w_*)
  double rho_g = 0.0;  // cos(w_o, w_g^(t))
  double kept_fraction = 1.0;
};

struct CollapseSeries {
  std::vector<CollapseRound> rounds;
  bool halted = false;
  std::string halt_reason;
};

/// Iterated self-training for repetition `trial` of cc.base. Round 0 fits all
/// data labeled by the base generator; later rounds use pseudo-labels of the
/// previous fit and curate iff curate_each_round.
CollapseSeries collapse_loop(const CollapseConfig& cc, std::uint64_t trial = 0);

struct ResolventProbe {
  double m = 0.0;
  double m_tilde = 0.0;
  double s = 0.0;
  double trace = 0.0;     // mean tr R / d
  double parallel = 0.0;  // mean w_o' R w_o
  double perp = 0.0;      // mean u' R u, u unit and orthogonal to w_o
  double trace_gap = 0.0;
  double parallel_gap = 0.0;    // against m_tilde
  double parallel_gap_s = 0.0;  // against s
  double perp_gap = 0.0;
};

ResolventProbe resolvent_probe(const ExperimentConfig& cfg);

struct MarginProbe {
  double first_moment = 0.0;   // mean over trials of the test-margin mean
  double second_moment = 0.0;  // mean over trials of the test-margin second moment
  double first_se = 0.0;
  double second_se = 0.0;
  /// m sqrt(2/pi) and nu from the fitted vectors (m = w_hat.w_*, nu = |w_hat|^2),
  /// averaged over trials.
  double implied_first = 0.0;
  double implied_second = 0.0;
  /// Largest per-trial |empirical - implied| in units of that trial's sampling error.
  double max_trial_z = 0.0;
};

MarginProbe margin_probe(const ExperimentConfig& cfg, std::size_t n_test);

struct MonteCarloConstants {
  CurationConstants mean;
  CurationConstants std_error;
};

/// Sample estimates of the curation constants from `draws` Gaussian pairs.
MonteCarloConstants monte_carlo_constants(const PruningFunction& q, CurationMode mode,
                                          double rho_g, std::size_t draws, std::uint64_t seed);

}  // namespace curlaw
