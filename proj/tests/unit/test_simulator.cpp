#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include <Eigen/Dense>

#include "curation_laws/errors.hpp"
#include "curation_laws/laws.hpp"
#include "curation_laws/simulator.hpp"

using namespace curlaw;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n = 400;
  cfg.d = 40;
  cfg.strategy = PruningFunction::keep_hard_fraction(0.5);
  cfg.geometry = GeometrySpec(0.9, 0.5, 0.6);
  cfg.trials = 6;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("construct_vectors reproduces the cosines") {
  const auto same = construct_vectors(GeometrySpec(1, 1, 1), 10);
  CHECK((same.w_star - Eigen::VectorXd::Unit(10, 0)).norm() < 1e-15);
  CHECK((same.w_g - same.w_star).norm() < 1e-15);
  CHECK((same.w_o - same.w_star).norm() < 1e-15);

  const auto orth = construct_vectors(GeometrySpec(0, 0, 0), 10);
  CHECK(std::abs(orth.w_star.dot(orth.w_g)) < 1e-15);
  CHECK(std::abs(orth.w_star.dot(orth.w_o)) < 1e-15);
  CHECK(std::abs(orth.w_g.dot(orth.w_o)) < 1e-15);

  const auto v = construct_vectors(GeometrySpec(0.5, 0.5, 0.5), 10);
  Eigen::Matrix3d gram;
  const Eigen::VectorXd* cols[] = {&v.w_star, &v.w_g, &v.w_o};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) gram(i, j) = cols[i]->dot(*cols[j]);
  CHECK(std::abs(gram(0, 1) - 0.5) < 1e-14);
  CHECK(std::abs(gram(1, 2) - 0.5) < 1e-14);
  CHECK(std::abs(gram(0, 2) - 0.5) < 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(gram);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("sampled inputs are isotropic Gaussian") {
  ExperimentConfig cfg;
  cfg.n = 10000;
  cfg.d = 50;
  const auto dirs = construct_vectors(cfg.geometry, cfg.d);
  const Dataset ds = sample_dataset(cfg, dirs.w_g, 0, 0);
  const Eigen::MatrixXd cov = ds.X.transpose() * ds.X / double(cfg.n);
  const Eigen::MatrixXd dev = cov - Eigen::MatrixXd::Identity(cfg.d, cfg.d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dev);
  CHECK(eig.eigenvalues().cwiseAbs().maxCoeff() <= 3 * std::sqrt(double(cfg.d) / cfg.n));
  const double positive = (ds.y.array() > 0).cast<double>().mean();
  CHECK(std::abs(positive - 0.5) <= 4 / std::sqrt(double(cfg.n)));
  CHECK((ds.y.array().abs() == 1.0).all());
}

TEST_CASE("noiseless regression labels are exactly linear") {
  ExperimentConfig cfg = small_config();
  cfg.task = Task::Regression;
  cfg.norm_wg = 1.3;
  const auto dirs = construct_vectors(cfg.geometry, cfg.d);
  const Dataset ds = sample_dataset(cfg, dirs.w_g, 2, 0);
  CHECK((ds.y - 1.3 * ds.X * dirs.w_g).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("curation keep fractions") {
  ExperimentConfig cfg;
  cfg.n = 20000;
  cfg.d = 10;
  cfg.geometry = GeometrySpec(0.0, 0.0, 0.0);
  const auto dirs = construct_vectors(cfg.geometry, cfg.d);
  const Dataset ds = sample_dataset(cfg, dirs.w_g, 0, 0);
  const double tol = 4 / std::sqrt(double(cfg.n));
  auto fraction = [&](const PruningFunction& q, CurationMode mode) {
    const auto mask = apply_curation(ds.X, ds.y, dirs.w_o, q, mode);
    double kept = 0;
    for (char k : mask) kept += k;
    return kept / cfg.n;
  };
  CHECK(fraction(PruningFunction::keep_all(), CurationMode::LabelAgnostic) == 1.0);
  CHECK(std::abs(fraction(PruningFunction::keep_all(), CurationMode::LabelAware) - 0.5) <= tol);
  CHECK(std::abs(fraction(PruningFunction::keep_hard(1.0), CurationMode::LabelAgnostic) - 0.6827) <=
        tol);
  CHECK_THROWS_AS(fraction(PruningFunction::keep_easy(40.0), CurationMode::LabelAgnostic),
                  EmptyKeptSet);
}

TEST_CASE("ridge fit") {
  ExperimentConfig cfg;
  cfg.task = Task::Regression;
  cfg.d = 20;
  cfg.n = 100 * cfg.d;
  cfg.geometry = GeometrySpec(0.7, 0.2, 0.3);
  const auto dirs = construct_vectors(cfg.geometry, cfg.d);
  const Dataset ds = sample_dataset(cfg, dirs.w_g, 0, 0);
  const std::vector<char> all(cfg.n, 1);
  const Eigen::VectorXd w = ridge_fit(ds.X, ds.y, all, 1e-10);
  CHECK((w - dirs.w_g).norm() / dirs.w_g.norm() <= 1e-3);
  // normal equations hold
  const Eigen::MatrixXd S = ds.X.transpose() * ds.X / double(cfg.n);
  const Eigen::VectorXd rhs = ds.X.transpose() * ds.y / double(cfg.n);
  CHECK((S * w + 1e-10 * w - rhs).norm() <= 1e-10 * rhs.norm());
  CHECK(ridge_fit(ds.X, Eigen::VectorXd::Zero(cfg.n), all, 0.1).norm() == 0.0);
  CHECK(ridge_fit(ds.X, ds.y, std::vector<char>(cfg.n, 0), 0.1).norm() == 0.0);
}

TEST_CASE("exact errors") {
  Eigen::VectorXd w_star = Eigen::VectorXd::Unit(5, 0);
  CHECK(exact_classification_error(w_star, w_star) == 0.0);
  CHECK(exact_classification_error(Eigen::VectorXd::Unit(5, 1), w_star) == doctest::Approx(0.5));
  Eigen::VectorXd sixty = Eigen::VectorXd::Zero(5);
  sixty(0) = 0.5;
  sixty(1) = std::sqrt(0.75);
  CHECK(exact_classification_error(sixty, w_star) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  bool degenerate = false;
  CHECK(exact_classification_error(Eigen::VectorXd::Zero(5), w_star, &degenerate) == 0.5);
  CHECK(degenerate);
  CHECK(exact_regression_error(w_star, w_star) == 0.0);
  CHECK(exact_regression_error(Eigen::VectorXd::Zero(5), w_star) == 1.0);
  CHECK(exact_regression_error(2 * w_star, w_star) == 1.0);
}

TEST_CASE("exact classification error is the infinite test-set limit") {
  ExperimentConfig cfg = small_config();
  cfg.d = 20;
  const auto dirs = construct_vectors(cfg.geometry, cfg.d);
  const Dataset ds = sample_dataset(cfg, dirs.w_g, 0, 0);
  const Eigen::VectorXd w = ridge_fit(ds.X, ds.y, std::vector<char>(cfg.n, 1), 1e-3);
  const double exact = exact_classification_error(w, dirs.w_star);
  std::mt19937_64 gen(99);
  std::normal_distribution<double> g;
  const int tests = 1000000;
  int wrong = 0;
  Eigen::VectorXd x(cfg.d);
  for (int i = 0; i < tests; ++i) {
    for (std::size_t k = 0; k < cfg.d; ++k) x(k) = g(gen);
    wrong += (x.dot(w) > 0) != (x.dot(dirs.w_star) > 0);
  }
  const double se = std::sqrt(exact * (1 - exact) / tests);
  CHECK(std::abs(double(wrong) / tests - exact) <= 4 * se);
}

TEST_CASE("run_trials is deterministic and thread-count independent") {
  const ExperimentConfig cfg = small_config();
  setenv("CURATION_LAWS_THREADS", "1", 1);
  const TrialSummary serial = run_trials(cfg);
  setenv("CURATION_LAWS_THREADS", "4", 1);
  const TrialSummary threaded = run_trials(cfg);
  unsetenv("CURATION_LAWS_THREADS");
  REQUIRE(serial.per_trial.size() == threaded.per_trial.size());
  for (std::size_t i = 0; i < serial.per_trial.size(); ++i) {
    CHECK(serial.per_trial[i].test_error == threaded.per_trial[i].test_error);
    CHECK(serial.per_trial[i].kept_count == threaded.per_trial[i].kept_count);
  }
  CHECK(serial.mean == threaded.mean);
  ExperimentConfig other = cfg;
  other.seed = 18;
  CHECK(run_trials(other).mean != serial.mean);
}

TEST_CASE("standard error shrinks like one over root trials") {
  ExperimentConfig cfg = small_config();
  cfg.trials = 200;
  const double se1 = run_trials(cfg).std_error;
  cfg.trials = 400;
  const double se2 = run_trials(cfg).std_error;
  CHECK(se1 / se2 == doctest::Approx(std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("kept counts concentrate around p") {
  ExperimentConfig cfg = small_config();
  cfg.trials = 200;
  cfg.strategy = PruningFunction::keep_easy_fraction(0.3);
  const TrialSummary s = run_trials(cfg);
  const double band = 4 * std::sqrt(0.3 * 0.7 / cfg.n);
  int inside = 0;
  for (const auto& t : s.per_trial) inside += std::abs(double(t.kept_count) / cfg.n - 0.3) <= band;
  CHECK(inside >= 0.99 * s.per_trial.size());
}

TEST_CASE("trials that keep nothing are skipped") {
  ExperimentConfig cfg = small_config();
  cfg.n = 5;
  cfg.d = 4;
  cfg.trials = 30;
  cfg.strategy = PruningFunction::keep_easy_fraction(0.05);
  const TrialSummary s = run_trials(cfg);
  CHECK(s.skipped_trials > 0);
  CHECK(s.skipped_trials + s.per_trial.size() == 30);
  cfg.strategy = PruningFunction::keep_easy(30.0);
  CHECK_THROWS_AS(run_trials(cfg), EmptyKeptSet);
}

TEST_CASE("collapse loop") {
  CollapseConfig cc;
  cc.base = small_config();
  cc.base.geometry = GeometrySpec(1, 1, 1);
  cc.base.mode = CurationMode::LabelAware;
  cc.rounds = 1;
  const auto one = collapse_loop(cc, 3);
  REQUIRE(one.rounds.size() == 1);
  ExperimentConfig single = cc.base;
  single.strategy = PruningFunction::keep_all();
  single.mode = CurationMode::LabelAgnostic;
  single.trials = 4;
  const auto s = run_trials(single);
  CHECK(one.rounds[0].error == s.per_trial[3].test_error);

  cc.rounds = 6;
  CollapseConfig curated = cc;
  curated.curate_each_round = true;
  const auto a = collapse_loop(cc, 0);
  const auto b = collapse_loop(curated, 0);
  REQUIRE(a.rounds.size() == 6);
  REQUIRE(b.rounds.size() == 6);
  CHECK(a.rounds[0].error == b.rounds[0].error);
  CHECK(a.rounds[0].kept_fraction == 1.0);
  CHECK(b.rounds[3].kept_fraction < 1.0);
  CHECK(a.rounds[1].rho < 1.0);
}

TEST_CASE("uncurated self-training degrades") {
  CollapseConfig cc;
  cc.base.n = 400;
  cc.base.d = 200;
  cc.base.geometry = GeometrySpec(1, 1, 1);
  cc.rounds = 20;
  double first = 0, last = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto s = collapse_loop(cc, rep);
    first += s.rounds.front().error;
    last += s.rounds.back().error;
  }
  CHECK(last > first);
}

TEST_CASE("resolvent probe at large ridge") {
  ExperimentConfig cfg;
  cfg.n = 400;
  cfg.d = 200;
  cfg.lambda = 1e4;
  cfg.trials = 2;
  cfg.geometry = GeometrySpec(1, 0.5, 0.5);
  const auto r = resolvent_probe(cfg);
  CHECK(r.trace == doctest::Approx(1e-4).epsilon(1e-3));
  CHECK(r.m == doctest::Approx(1e-4).epsilon(1e-3));
  CHECK(r.trace_gap < 1e-7);
}

TEST_CASE("resolvent probe tracks m at moderate size") {
  ExperimentConfig cfg;
  cfg.n = 600;
  cfg.d = 300;
  cfg.lambda = 0.5;
  cfg.trials = 4;
  cfg.geometry = GeometrySpec(1, 0.5, 0.5);
  cfg.strategy = PruningFunction::keep_hard_fraction(0.5);
  const auto r = resolvent_probe(cfg);
  CHECK(r.trace_gap <= 0.02);
  CHECK(r.parallel_gap < r.parallel_gap_s);
}

TEST_CASE("margin probe") {
  ExperimentConfig cfg;
  cfg.n = 400;
  cfg.d = 100;
  cfg.trials = 4;
  cfg.geometry = GeometrySpec(0, 0, 0);
  const auto blind = margin_probe(cfg, 100000);
  CHECK(std::abs(blind.first_moment) <= 4 * blind.first_se);
  cfg.geometry = GeometrySpec(0.9, 0.5, 0.6);
  cfg.strategy = PruningFunction::keep_hard_fraction(0.4);
  const auto m = margin_probe(cfg, 100000);
  CHECK(std::abs(m.first_moment - m.implied_first) <= 4 * m.first_se);
  CHECK(std::abs(m.second_moment - m.implied_second) <= 4 * m.second_se);
}

TEST_CASE("simulation agrees with the classification law") {
  // d = 200, n = 2000, keep-hard p = 0.5, lambda = 1e-6
  ExperimentConfig cfg;
  cfg.n = 2000;
  cfg.d = 200;
  cfg.trials = 10;
  cfg.strategy = PruningFunction::keep_hard_fraction(0.5);
  for (auto mode : {CurationMode::LabelAgnostic, CurationMode::LabelAware}) {
    cfg.mode = mode;
    cfg.geometry = GeometrySpec(1.0, 0.5, 0.5);
    const double theory =
        classification_error(cfg.geometry, constants(cfg.strategy, mode, cfg.geometry), cfg.phi(),
                             cfg.lambda)
            .error;
    const auto s = run_trials(cfg);
    MESSAGE(to_string(mode) << " theory " << theory << " sim " << s.mean << " +- " << s.std_error);
    CHECK(std::abs(s.mean - theory) / theory <= 0.05);
  }
}
