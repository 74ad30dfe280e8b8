#include "curation_laws/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "curation_laws/errors.hpp"
#include "curation_laws/parallel.hpp"
#include "curation_laws/spectral.hpp"

namespace curlaw {
namespace {

constexpr std::uint64_t kTestStream = 0xFFFF'FFFFull;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  std::uint64_t s = h ^ (v + 0x632BE59BD9B4E019ull);
  return splitmix64(s);
}

double label_sign(double v) { return v >= 0.0 ? 1.0 : -1.0; }

// Sum in a balanced tree so the result depends only on the order of `v`.
double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_and_se(const std::vector<double>& v) {
  MeanSe out;
  if (v.empty()) return out;
  const double k = static_cast<double>(v.size());
  out.mean = pairwise_sum(v.data(), v.size()) / k;
  if (v.size() > 1) {
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - out.mean) * (v[i] - out.mean);
    out.se = std::sqrt(pairwise_sum(sq.data(), sq.size()) / (k - 1.0) / k);
  }
  return out;
}

Eigen::MatrixXd kept_rows(const Eigen::MatrixXd& X, const std::vector<char>& mask,
                          std::size_t count) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count), X.cols());
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) out.row(r++) = X.row(i);
  }
  return out;
}

std::size_t count_kept(const std::vector<char>& mask) {
  std::size_t k = 0;
  for (char m : mask) k += m ? 1 : 0;
  return k;
}

// Lower triangle of X'DX/n + lambda I.
Eigen::MatrixXd regularized_gram(const Eigen::MatrixXd& X, const std::vector<char>& mask,
                                 double lambda) {
  const auto d = X.cols();
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(d, d) * lambda;
  const Eigen::MatrixXd Xk = kept_rows(X, mask, count_kept(mask));
  S.selfadjointView<Eigen::Lower>().rankUpdate(Xk.transpose(), 1.0 / static_cast<double>(X.rows()));
  return S;
}

Eigen::VectorXd unit_orthogonal_to(const Eigen::VectorXd& w_o, const Eigen::VectorXd& w_g) {
  Eigen::VectorXd v = w_g - w_g.dot(w_o) * w_o;
  if (v.norm() > 1e-8) return v.normalized();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(w_o.size());
  e(3) = 1.0;
  return e;
}

void require_classification(const ExperimentConfig& cfg, const char* what) {
  if (cfg.task != Task::Classification) {
    throw InvalidArgument(std::string(what) + " needs a classification config");
  }
}

}  // namespace

std::string to_string(Task task) {
  return task == Task::Classification ? "classification" : "regression";
}

Task parse_task(const std::string& text) {
  if (text == "classification") return Task::Classification;
  if (text == "regression") return Task::Regression;
  throw InvalidArgument("unknown task '" + text + "'");
}

void ExperimentConfig::validate() const {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (d < 4) throw InvalidArgument("d must be >= 4");
  if (!(lambda > 0.0) || std::isinf(lambda)) throw InvalidArgument("lambda must be > 0");
  if (!(sigma >= 0.0) || std::isinf(sigma)) throw InvalidArgument("sigma must be >= 0");
  if (!(norm_wg > 0.0) || std::isinf(norm_wg)) throw InvalidArgument("norm_wg must be > 0");
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t trial, std::uint64_t round,
                       std::uint64_t row)
    : state_(mix(mix(mix(mix(0x5EEDull, seed), trial), round), row)) {}

CounterRng::result_type CounterRng::operator()() { return splitmix64(state_); }

Directions construct_vectors(const GeometrySpec& geom, std::size_t d) {
  if (d < 3) throw InvalidArgument("construct_vectors: d must be >= 3");
  const double rho = geom.rho();
  const double rho_g = geom.rho_g();
  const double rho_star = geom.rho_star();
  // Cholesky of the Gram matrix in the order (w_*, w_g, w_o), tolerant of
  // rank deficiency.
  const double g2 = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  const double o2 = g2 > 1e-15 ? (rho_g - rho * rho_star) / g2 : 0.0;
  const double o3 = std::sqrt(std::max(0.0, 1.0 - rho_star * rho_star - o2 * o2));

  const auto n = static_cast<Eigen::Index>(d);
  Directions v{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  v.w_star(0) = 1.0;
  v.w_g(0) = rho;
  v.w_g(1) = g2;
  v.w_o(0) = rho_star;
  v.w_o(1) = o2;
  v.w_o(2) = o3;
  v.w_g.normalize();
  v.w_o.normalize();
  const double worst = std::max({std::abs(v.w_g.dot(v.w_star) - rho),
                                 std::abs(v.w_o.dot(v.w_g) - rho_g),
                                 std::abs(v.w_o.dot(v.w_star) - rho_star)});
  if (worst > 1e-9) {
    throw InfeasibleGeometry("construct_vectors: cannot realize cosines (error " +
                             std::to_string(worst) + ")");
  }
  return v;
}

Dataset sample_dataset(const ExperimentConfig& cfg, const Eigen::VectorXd& generator,
                       std::uint64_t trial, std::uint64_t round) {
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const auto d = static_cast<Eigen::Index>(cfg.d);
  Dataset data{Eigen::MatrixXd(n, d), Eigen::VectorXd(n)};
  Eigen::VectorXd row(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    CounterRng rng(cfg.seed, trial, round, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> normal;
    for (Eigen::Index j = 0; j < d; ++j) row(j) = normal(rng);
    data.X.row(i) = row.transpose();
    const double signal = row.dot(generator);
    if (cfg.task == Task::Classification) {
      data.y(i) = label_sign(signal);
    } else {
      data.y(i) = cfg.norm_wg * signal + cfg.sigma * normal(rng);
    }
  }
  return data;
}

std::vector<char> apply_curation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& w_o, const PruningFunction& q,
                                 CurationMode mode) {
  const Eigen::VectorXd t = X * w_o;
  std::vector<char> mask(static_cast<std::size_t>(X.rows()), 0);
  std::size_t kept = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    bool keep = q.keeps(t(i));
    if (keep && mode == CurationMode::LabelAware) keep = label_sign(y(i)) == label_sign(t(i));
    mask[static_cast<std::size_t>(i)] = keep ? 1 : 0;
    kept += keep ? 1 : 0;
  }
  if (kept == 0) throw EmptyKeptSet("curation kept none of " + std::to_string(X.rows()) + " rows");
  return mask;
}

Eigen::VectorXd ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const std::vector<char>& mask, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("ridge_fit: lambda must be > 0");
  if (static_cast<Eigen::Index>(mask.size()) != X.rows() || y.size() != X.rows()) {
    throw InvalidArgument("ridge_fit: X, y and mask disagree in length");
  }
  const Eigen::MatrixXd S = regularized_gram(X, mask, lambda);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) rhs.noalias() += y(i) * X.row(i).transpose();
  }
  rhs /= static_cast<double>(X.rows());

  const Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(S);
  if (llt.info() != Eigen::Success) throw InternalError("ridge_fit: Cholesky factorization failed");
  Eigen::VectorXd w = llt.solve(rhs);
  const double residual = (S.selfadjointView<Eigen::Lower>() * w - rhs).norm();
  if (residual > 1e-10 * rhs.norm()) {
    // One step of iterative refinement before giving up.
    w += llt.solve(rhs - S.selfadjointView<Eigen::Lower>() * w);
    const double refined = (S.selfadjointView<Eigen::Lower>() * w - rhs).norm();
    if (refined > 1e-10 * rhs.norm()) {
      throw InternalError("ridge_fit: solve residual " + std::to_string(refined) +
                          " exceeds tolerance");
    }
  }
  return w;
}

double exact_classification_error(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_star,
                                  bool* degenerate) {
  const double norms = w_hat.norm() * w_star.norm();
  if (degenerate) *degenerate = norms == 0.0;
  if (norms == 0.0) return 0.5;
  const double cosine = std::clamp(w_hat.dot(w_star) / norms, -1.0, 1.0);
  return std::acos(cosine) / std::numbers::pi;
}

double exact_regression_error(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_star) {
  return (w_hat - w_star).squaredNorm();
}

TrialSummary run_trials(const ExperimentConfig& cfg) {
  cfg.validate();
  const Directions dirs = construct_vectors(cfg.geometry, cfg.d);
  std::vector<std::optional<TrialResult>> slots(cfg.trials);

  parallel_for(cfg.trials, [&](std::size_t k) {
    const Dataset data = sample_dataset(cfg, dirs.w_g, k, 0);
    std::vector<char> mask;
    try {
      mask = apply_curation(data.X, data.y, dirs.w_o, cfg.strategy, cfg.mode);
    } catch (const EmptyKeptSet&) {
      return;
    }
    const Eigen::VectorXd w = ridge_fit(data.X, data.y, mask, cfg.lambda);
    TrialResult r;
    r.trial = k;
    r.kept_count = count_kept(mask);
    r.test_error = exact_classification_error(w, dirs.w_star, &r.degenerate);
    r.w_hat_cosine = r.degenerate ? 0.0 : w.dot(dirs.w_star) / w.norm();
    r.regression_error = exact_regression_error(w, dirs.w_star);
    slots[k] = r;
  });

  TrialSummary out;
  std::vector<double> values;
  std::vector<double> kept;
  for (const auto& s : slots) {
    if (!s) {
      ++out.skipped_trials;
      continue;
    }
    out.per_trial.push_back(*s);
    values.push_back(cfg.task == Task::Classification ? s->test_error : s->regression_error);
    kept.push_back(static_cast<double>(s->kept_count) / static_cast<double>(cfg.n));
  }
  if (out.per_trial.empty()) {
    throw EmptyKeptSet("every trial kept an empty set (" + std::to_string(cfg.trials) + " trials)");
  }
  const MeanSe ms = mean_and_se(values);
  out.mean = ms.mean;
  out.std_error = ms.se;
  out.kept_fraction_mean = mean_and_se(kept).mean;
  return out;
}

CollapseSeries collapse_loop(const CollapseConfig& cc, std::uint64_t trial) {
  cc.base.validate();
  require_classification(cc.base, "collapse_loop");
  if (cc.rounds > 1000) throw InvalidArgument("collapse_loop: at most 1000 rounds");
  const Directions dirs = construct_vectors(cc.base.geometry, cc.base.d);
  Eigen::VectorXd generator = dirs.w_g;
  CollapseSeries series;
  for (std::size_t t = 0; t < cc.rounds; ++t) {
    const Dataset data =
        sample_dataset(cc.base, generator, trial, cc.fresh_inputs_each_round ? t : 0);
    std::vector<char> mask(cc.base.n, 1);
    if (t > 0 && cc.curate_each_round) {
      try {
        mask = apply_curation(data.X, data.y, dirs.w_o, cc.base.strategy, cc.base.mode);
      } catch (const EmptyKeptSet& e) {
        series.halted = true;
        series.halt_reason = e.what();
        break;
      }
    }
    const Eigen::VectorXd w = ridge_fit(data.X, data.y, mask, cc.base.lambda);
    CollapseRound r;
    r.round = t;
    bool degenerate = false;
    r.error = exact_classification_error(w, dirs.w_star, &degenerate);
    r.rho = generator.dot(dirs.w_star);
    r.rho_g = generator.dot(dirs.w_o);
    r.kept_fraction = static_cast<double>(count_kept(mask)) / static_cast<double>(cc.base.n);
    if (degenerate) {
      series.halted = true;
      series.halt_reason = "degenerate estimator at round " + std::to_string(t);
      break;
    }
    series.rounds.push_back(r);
    generator = w.normalized();
  }
  return series;
}

ResolventProbe resolvent_probe(const ExperimentConfig& cfg) {
  cfg.validate();
  require_classification(cfg, "resolvent_probe");
  const Directions dirs = construct_vectors(cfg.geometry, cfg.d);
  const CurationConstants c = constants(cfg.strategy, cfg.mode, cfg.geometry);
  const SpectralPoint sp = spectral_point(c, cfg.phi(), cfg.lambda);
  const Eigen::VectorXd u = unit_orthogonal_to(dirs.w_o, dirs.w_g);

  std::vector<std::array<double, 3>> per(cfg.trials);
  parallel_for(cfg.trials, [&](std::size_t k) {
    const Dataset data = sample_dataset(cfg, dirs.w_g, k, 0);
    const auto mask = apply_curation(data.X, data.y, dirs.w_o, cfg.strategy, cfg.mode);
    const Eigen::MatrixXd S = regularized_gram(data.X, mask, cfg.lambda);
    const Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(S);
    if (llt.info() != Eigen::Success) throw InternalError("resolvent_probe: factorization failed");
    const auto d = static_cast<Eigen::Index>(cfg.d);
    const Eigen::MatrixXd R = llt.solve(Eigen::MatrixXd::Identity(d, d));
    per[k] = {R.trace() / static_cast<double>(cfg.d), dirs.w_o.dot(R * dirs.w_o), u.dot(R * u)};
  });

  std::array<std::vector<double>, 3> cols;
  for (const auto& row : per) {
    for (int j = 0; j < 3; ++j) cols[j].push_back(row[j]);
  }
  ResolventProbe out;
  out.m = sp.m;
  out.m_tilde = sp.m_tilde;
  out.s = sp.s;
  out.trace = mean_and_se(cols[0]).mean;
  out.parallel = mean_and_se(cols[1]).mean;
  out.perp = mean_and_se(cols[2]).mean;
  out.trace_gap = std::abs(out.trace - sp.m);
  out.parallel_gap = std::abs(out.parallel - sp.m_tilde);
  out.parallel_gap_s = std::abs(out.parallel - sp.s);
  out.perp_gap = std::abs(out.perp - sp.m);
  return out;
}

MarginProbe margin_probe(const ExperimentConfig& cfg, std::size_t n_test) {
  cfg.validate();
  require_classification(cfg, "margin_probe");
  if (n_test < 2) throw InvalidArgument("margin_probe: n_test must be >= 2");
  const Directions dirs = construct_vectors(cfg.geometry, cfg.d);

  struct Row {
    double first, second, implied_first, implied_second, z;
  };
  std::vector<Row> per(cfg.trials);
  parallel_for(cfg.trials, [&](std::size_t k) {
    const Dataset data = sample_dataset(cfg, dirs.w_g, k, 0);
    const auto mask = apply_curation(data.X, data.y, dirs.w_o, cfg.strategy, cfg.mode);
    const Eigen::VectorXd w = ridge_fit(data.X, data.y, mask, cfg.lambda);
    const double norm = w.norm();
    const double m = w.dot(dirs.w_star);
    const double cosine = norm > 0.0 ? m / norm : 0.0;
    const double sine = std::sqrt(std::max(0.0, 1.0 - cosine * cosine));

    // Test points enter only through (x.w_*, x.w_hat), so draw that pair directly.
    std::vector<double> margins(n_test);
    std::vector<double> squares(n_test);
    for (std::size_t i = 0; i < n_test; ++i) {
      CounterRng rng(cfg.seed, k, kTestStream, i);
      std::normal_distribution<double> normal;
      const double g1 = normal(rng);
      const double g2 = normal(rng);
      const double margin = label_sign(g1) * norm * (cosine * g1 + sine * g2);
      margins[i] = margin;
      squares[i] = margin * margin;
    }
    const MeanSe a = mean_and_se(margins);
    const MeanSe b = mean_and_se(squares);
    Row r{a.mean, b.mean, m * std::sqrt(2.0 / std::numbers::pi), norm * norm, 0.0};
    r.z = std::max(a.se > 0 ? std::abs(a.mean - r.implied_first) / a.se : 0.0,
                   b.se > 0 ? std::abs(b.mean - r.implied_second) / b.se : 0.0);
    per[k] = r;
  });

  std::vector<double> f, s, fi, si;
  MarginProbe out;
  for (const auto& r : per) {
    f.push_back(r.first);
    s.push_back(r.second);
    fi.push_back(r.implied_first);
    si.push_back(r.implied_second);
    out.max_trial_z = std::max(out.max_trial_z, r.z);
  }
  const MeanSe mf = mean_and_se(f);
  const MeanSe msq = mean_and_se(s);
  out.first_moment = mf.mean;
  out.first_se = mf.se;
  out.second_moment = msq.mean;
  out.second_se = msq.se;
  out.implied_first = mean_and_se(fi).mean;
  out.implied_second = mean_and_se(si).mean;
  return out;
}

MonteCarloConstants monte_carlo_constants(const PruningFunction& q, CurationMode mode,
                                          double rho_g, std::size_t draws, std::uint64_t seed) {
  if (!(std::abs(rho_g) < 1.0)) throw InvalidArgument("monte_carlo_constants: |rho_g| must be < 1");
  if (draws < 2) throw InvalidArgument("monte_carlo_constants: need at least 2 draws");
  const double sigma = std::sqrt(1.0 - rho_g * rho_g);
  constexpr std::size_t kChunk = 65536;
  const std::size_t chunks = (draws + kChunk - 1) / kChunk;
  constexpr int kStats = 6;  // keep, keep t^2, keep y h, keep y t, keep t h, keep h^2
  std::vector<std::array<double, 2 * kStats>> partial(chunks);

  parallel_for(chunks, [&](std::size_t c) {
    CounterRng rng(seed, c, 0, 0);
    std::normal_distribution<double> normal;
    std::array<double, 2 * kStats> acc{};
    const std::size_t end = std::min(draws, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      const double t = normal(rng);
      const double h = normal(rng);
      const double y = label_sign(rho_g * t + sigma * h);
      bool keep = q.keeps(t);
      if (keep && mode == CurationMode::LabelAware) keep = y == label_sign(t);
      if (!keep) continue;
      const std::array<double, kStats> x{1.0, t * t, y * h, y * t, t * h, h * h};
      for (int j = 0; j < kStats; ++j) {
        acc[j] += x[j];
        acc[kStats + j] += x[j] * x[j];
      }
    }
    partial[c] = acc;
  });

  std::array<double, 2 * kStats> total{};
  for (const auto& p : partial) {
    for (int j = 0; j < 2 * kStats; ++j) total[j] += p[j];
  }
  const double N = static_cast<double>(draws);
  std::array<double, kStats> mean{};
  std::array<double, kStats> se{};
  for (int j = 0; j < kStats; ++j) {
    mean[j] = total[j] / N;
    const double var = std::max(0.0, total[kStats + j] / N - mean[j] * mean[j]) * N / (N - 1.0);
    se[j] = std::sqrt(var / N);
  }
  MonteCarloConstants out;
  out.mean = {mean[0], mean[1], mean[2], mean[3], GeneratorBlock{mean[4], mean[5]}};
  out.std_error = {se[0], se[1], se[2], se[3], GeneratorBlock{se[4], se[5]}};
  return out;
}

}  // namespace curlaw
