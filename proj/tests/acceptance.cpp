// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Criterion 11 needs OSUMC_SUPERCONDUCTIVITY_CSV and is skipped otherwise.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "osumc/osumc.hpp"
#include "test_support.hpp"

using namespace osumc;
using osumc_test::naive_asymptotic_variance;
using osumc_test::random_matrix;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

// Runs one criterion and prints its verdict; wall time over budget is a failure.
void criterion(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail += " [over the " + format_double(budget_s) + " s budget]";
  }
  if (!o.pass) ++failures;
  std::printf("criterion %2d %s  %s: %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

VectorXd draw_responses(Family f, const MatrixXd& X, const VectorXd& beta, Rng& rng) {
  VectorXd y(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    const double t = osumc_test::dot_row(X, i, beta);
    switch (f) {
      case Family::linear: y[i] = t + std::normal_distribution<double>(0.0, 1.0)(rng); break;
      case Family::logistic: y[i] = std::bernoulli_distribution(osumc_test::mean_fn(f, t))(rng) ? 1.0 : 0.0; break;
      case Family::poisson: y[i] = static_cast<double>(std::poisson_distribution<int>(std::exp(t))(rng)); break;
    }
  }
  return y;
}

VectorXd random_simplex(Index n, Rng& rng) {
  std::exponential_distribution<double> ex(1.0);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = ex(rng);
  return v / v.sum();
}

SamplingWeights as_weights(VectorXd pi) {
  SamplingWeights w;
  w.pi = std::move(pi);
  return w;
}

const Family kFamilies[] = {Family::linear, Family::logistic, Family::poisson};

// Every bench result produced here, for the measurement-compliance check.
std::vector<std::pair<std::string, ExperimentResult>> bench_log;
std::vector<std::pair<std::string, Index>> bench_r0;

ExperimentResult bench(const std::string& label, const ExperimentSpec& spec) {
  ExperimentResult res = run_mse_experiment(spec);
  bench_log.emplace_back(label, res);
  bench_r0.emplace_back(label, spec.r0);
  return res;
}

ExperimentSpec scaled(Design design, Index n, Index p, std::vector<Method> methods, std::vector<Index> r_grid, int S,
                      std::uint64_t seed) {
  ExperimentSpec spec;
  spec.scenario = make_scenario(design, n, p, 0);
  spec.methods = std::move(methods);
  spec.r_grid = std::move(r_grid);
  spec.r0 = 500;
  spec.replications = S;
  spec.base_seed = seed;
  return spec;
}

std::string failure_note(const ExperimentResult& res) {
  int f = 0;
  for (const auto& s : res.summary) f += s.failures;
  return f ? " failed_runs=" + std::to_string(f) : "";
}

// Standard error of MSE(a) - MSE(b), from per-replication differences over
// the replications where both runs converged (they share the dataset).
double paired_stderr(const ExperimentResult& res, Method ma, Index ra, Method mb, Index rb) {
  std::map<int, double> ea;
  for (const auto& rec : res.records) {
    if (rec.method == ma && rec.r == ra && rec.converged) ea[rec.replication] = rec.sq_error;
  }
  std::vector<double> d;
  for (const auto& rec : res.records) {
    if (rec.method != mb || rec.r != rb || !rec.converged) continue;
    if (auto it = ea.find(rec.replication); it != ea.end()) d.push_back(it->second - rec.sq_error);
  }
  if (d.size() < 2) return std::numeric_limits<double>::infinity();
  const double k = static_cast<double>(d.size());
  double mean = 0.0, ss = 0.0;
  for (double v : d) mean += v / k;
  for (double v : d) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (k - 1.0) / k);
}

// MSE(a) <= MSE(b) up to one standard error of the difference.
bool no_worse(const ExperimentResult& res, Method ma, Index ra, Method mb, Index rb) {
  return res.at(ma, ra).empirical_mse - res.at(mb, rb).empirical_mse <= paired_stderr(res, ma, ra, mb, rb);
}

// MSE nonincreasing in r, allowing at most one upward step, and that one no
// larger than one standard error of the difference.
bool monotone(const ExperimentResult& res, Method m, const std::vector<Index>& grid, std::string& note) {
  int inversions = 0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (res.at(m, grid[k]).empirical_mse <= res.at(m, grid[k - 1]).empirical_mse) continue;
    ++inversions;
    if (!no_worse(res, m, grid[k], m, grid[k - 1])) {
      note += " " + std::string(to_string(m)) + " rises beyond 1 stderr at r=" + std::to_string(grid[k]);
      return false;
    }
  }
  if (inversions > 1) {
    note += " " + std::string(to_string(m)) + " has " + std::to_string(inversions) + " inversions";
    return false;
  }
  return true;
}

std::string mse_row(const ExperimentResult& res, const std::vector<Method>& methods, Index r) {
  std::string s = "r=" + std::to_string(r);
  for (Method m : methods) {
    const auto& c = res.at(m, r);
    s += " " + std::string(to_string(m)) + "=" + fmt(c.empirical_mse) + "+-" + fmt(c.mse_stderr, 2);
  }
  return s;
}

// ---------------------------------------------------------------------------

Outcome c1_derivatives() {
  Rng rng = make_stream(101, 0);
  double worst_score = 0.0, worst_jac = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Family f = kFamilies[k % 3];
    const Index p = 1 + k % 5;
    const Index r = 10 + static_cast<Index>(rng() % 40);
    const Index n = 10 * r;
    const MatrixXd X = random_matrix(r, p, rng, 0.7);
    const VectorXd beta = random_matrix(p, 1, rng, 0.5);
    const VectorXd y = draw_responses(f, X, beta, rng);
    VectorXd pi(r);
    std::uniform_real_distribution<double> u(0.2, 5.0);
    for (Index i = 0; i < r; ++i) pi[i] = u(rng) / static_cast<double>(n);

    const VectorXd g = weighted_score(f, X, y, pi, n, beta);
    const MatrixXd H = weighted_information(f, X, pi, n, beta);
    VectorXd g_fd(p);
    MatrixXd H_fd(p, p);
    for (Index j = 0; j < p; ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(beta[j]));
      VectorXd up = beta, dn = beta;
      up[j] += h;
      dn[j] -= h;
      g_fd[j] = (weighted_negative_loglik(f, X, y, pi, n, up) - weighted_negative_loglik(f, X, y, pi, n, dn)) / (2 * h);
      H_fd.col(j) = (weighted_score(f, X, y, pi, n, up) - weighted_score(f, X, y, pi, n, dn)) / (2 * h);
    }
    worst_score = std::max(worst_score, (g_fd - g).cwiseAbs().maxCoeff() / std::max(g.cwiseAbs().maxCoeff(), 1e-300));
    worst_jac = std::max(worst_jac, (H_fd - H).cwiseAbs().maxCoeff() / std::max(H.cwiseAbs().maxCoeff(), 1e-300));
  }
  return {worst_score <= 1e-5 && worst_jac <= 1e-5,
          "max rel err score=" + fmt(worst_score, 3) + " jacobian=" + fmt(worst_jac, 3) + " over 100 instances"};
}

Outcome c2_a_optimality() {
  Rng rng = make_stream(202, 0);
  double worst = -std::numeric_limits<double>::infinity();
  double naive_gap = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Family f = kFamilies[k % 3];
    const Index p = 1 + k % 4;
    const Index n = 30 + static_cast<Index>(rng() % 71);
    const Index r = 10;
    const MatrixXd X = random_matrix(n, p, rng, 0.8);
    const VectorXd beta = random_matrix(p, 1, rng, 0.5);
    const MatrixXd phi = plugin_information(f, X, beta);
    const SamplingWeights best = oracle_optimal_weights(f, X, beta, phi);
    const double a_best = a_criterion(f, X, beta, phi, best, r);
    naive_gap = std::max(naive_gap, std::abs(naive_asymptotic_variance(f, X, beta, best.pi, r).trace() - a_best) / a_best);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
      VectorXd pi;
      if (t % 2 == 0) {
        // multiplicative jitter of varying size around the optimum
        const double eps = std::pow(10.0, -4.0 + 4.0 * unit(rng));
        pi = best.pi;
        for (Index i = 0; i < n; ++i) pi[i] *= std::exp(eps * nd(rng));
        pi /= pi.sum();
      } else {
        const double mix = unit(rng);
        pi = (1.0 - mix) * best.pi + mix * random_simplex(n, rng);
      }
      const double a = a_criterion(f, X, beta, phi, as_weights(pi), r);
      worst = std::max(worst, (a_best - a) / a_best);
    }
  }
  return {worst <= 1e-10 && naive_gap <= 1e-12,
          "largest relative improvement by a perturbation=" + fmt(worst, 3) + " (20x1000), naive trace gap=" + fmt(naive_gap, 3)};
}

Outcome c3_variance_oracle() {
  Rng rng = make_stream(303, 0);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Family f = kFamilies[k % 3];
    const Index p = 1 + k % 4;
    const Index n = 20 + static_cast<Index>(rng() % 60);
    const Index r = 5 + static_cast<Index>(rng() % 30);
    const MatrixXd X = random_matrix(n, p, rng, 0.8);
    const VectorXd beta = random_matrix(p, 1, rng, 0.5);
    const VectorXd pi = random_simplex(n, rng);
    const MatrixXd got = asymptotic_variance(f, X, beta, as_weights(pi), r);
    const MatrixXd want = naive_asymptotic_variance(f, X, beta, pi, r);
    worst = std::max(worst, (got - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, "max rel err=" + fmt(worst, 3) + " over 20 instances"};
}

Outcome c4_logistic() {
  const std::vector<Index> grid{200, 500, 1000, 2000};
  const std::vector<Method> methods{Method::osumc, Method::uniform};
  bool ok = true;
  std::string detail;
  for (Design d : {Design::mzNormal, Design::nzNormal}) {
    const ExperimentResult res = bench(std::string(to_string(d)), scaled(d, 20000, 20, methods, grid, 200, 4000 + static_cast<int>(d)));
    detail += std::string(to_string(d)) + ":";
    for (Index r : grid) {
      if (!(res.at(Method::osumc, r).empirical_mse < res.at(Method::uniform, r).empirical_mse)) {
        ok = false;
        detail += " osumc>=uniform at r=" + std::to_string(r);
      }
    }
    for (Method m : methods) ok = monotone(res, m, grid, detail) && ok;
    detail += " [" + mse_row(res, methods, grid.front()) + "; " + mse_row(res, methods, grid.back()) + "]" + failure_note(res) + " ";
  }
  return {ok, detail};
}

// Not a numbered criterion: the nzNormal part of criterion 4 rerun with the
// optional weight floor, to show how much of the gap comes from a few
// replications with wildly inflated pilots.
void logistic_floor_info() {
  const std::vector<Index> grid{200, 500, 1000, 2000};
  ExperimentSpec spec = scaled(Design::nzNormal, 20000, 20, {Method::osumc, Method::uniform}, grid, 200,
                               4000 + static_cast<int>(Design::nzNormal));
  spec.weight_floor = 0.1;
  const ExperimentResult res = bench("nzNormal_floor", spec);
  std::string line;
  for (Index r : grid) line += " [" + mse_row(res, spec.methods, r) + "]";
  std::printf("criterion  4 INFO  nzNormal with weight_floor=0.1:%s%s\n", line.c_str(), failure_note(res).c_str());
}

Outcome c5_linear() {
  const std::vector<Index> grid{500, 1000, 2000};
  const std::vector<Method> methods{Method::osumc, Method::leverage, Method::uniform};
  bool ok = true;
  std::string detail;
  for (Design d : {Design::GA, Design::T3}) {
    const ExperimentResult res = bench(std::string(to_string(d)), scaled(d, 20000, 50, methods, grid, 200, 5000 + static_cast<int>(d)));
    detail += std::string(to_string(d)) + ":";
    for (Index r : grid) {
      for (auto [lo, hi] : {std::pair{Method::osumc, Method::leverage}, std::pair{Method::leverage, Method::uniform}}) {
        if (!no_worse(res, lo, r, hi, r)) {
          ok = false;
          detail += " " + std::string(to_string(lo)) + ">" + std::string(to_string(hi)) + " at r=" + std::to_string(r);
        }
      }
      detail += " [" + mse_row(res, methods, r) + "]";
    }
    detail += failure_note(res) + " ";
  }
  return {ok, detail};
}

// Not a numbered criterion: 9 * tr(Phi^{-1} V Phi^{-1}) at r=1000 on one
// design per scenario, i.e. the MSE each strategy should reach.
void linear_theory_info() {
  for (Design d : {Design::GA, Design::T3}) {
    ScenarioSpec s = make_scenario(d, 20000, 50, 5000 + static_cast<int>(d));
    const MatrixXd X = gen_design(s);
    const MatrixXd phi = plugin_information(Family::linear, X, s.beta0);
    auto A = [&](const SamplingWeights& w) { return 9.0 * a_criterion(Family::linear, X, s.beta0, phi, w, 1000); };
    Rng rng = make_stream(s.seed, 3);
    PilotFit pilot;
    pilot.pilot_indices = detail::uniform_indices(X.rows(), 500, rng);
    pilot.phi_tilde = pilot_information(Family::linear, detail::gather_rows(X, pilot.pilot_indices), s.beta0);
    pilot.phi_solver.factor(pilot.phi_tilde);
    std::printf("criterion  5 INFO  %s asymptotic MSE at r=1000: oracle=%.4g osumc(r0=500)=%.4g leverage=%.4g uniform=%.4g\n",
                std::string(to_string(d)).c_str(), A(oracle_optimal_weights(Family::linear, X, s.beta0, phi)),
                A(osumc_weights(Family::linear, X, pilot)), A(leverage_weights(X)), A(uniform_weights(X.rows())));
  }
}

Outcome c6_poisson() {
  const std::vector<Index> grid{1000, 2000};
  const std::vector<Method> methods{Method::osumc, Method::uniform};
  const ExperimentResult res = bench("unif_case1", scaled(Design::unif_case1, 20000, 30, methods, grid, 200, 6000));
  bool ok = true;
  std::string detail;
  for (Index r : grid) {
    ok = ok && res.at(Method::osumc, r).empirical_mse < res.at(Method::uniform, r).empirical_mse;
    detail += "[" + mse_row(res, methods, r) + "] ";
  }
  return {ok, detail + failure_note(res)};
}

ExperimentResult qq_result;

Outcome c7_qq() {
  ExperimentSpec spec = scaled(Design::mzNormal, 20000, 20, {Method::oracle_osumc}, {2000}, 500, 7000);
  spec.fixed_design = true;
  qq_result = bench("qq", spec);
  std::vector<VectorXd> betas;
  for (const auto& rec : qq_result.records) {
    if (rec.converged) betas.push_back(rec.beta_hat);
  }
  const QQReport rep = qq_statistics(betas, qq_result.beta0, qq_result.oracle_normalizers.at(2000));
  return {rep.correlation >= 0.99, "chi-square Q-Q correlation=" + fmt(rep.correlation, 5) + " from " +
                                       std::to_string(betas.size()) + " replicates" + failure_note(qq_result)};
}

// Not a numbered criterion: the normalized errors should have mean squared
// norm close to p if the asymptotic covariance is calibrated.
void qq_calibration_info() {
  if (qq_result.records.empty()) return;
  const MatrixXd& N = qq_result.oracle_normalizers.at(2000);
  double sum = 0.0;
  int k = 0;
  for (const auto& rec : qq_result.records) {
    if (!rec.converged) continue;
    sum += (N * (rec.beta_hat - qq_result.beta0)).squaredNorm();
    ++k;
  }
  std::printf("criterion  7 INFO  covariance calibration: mean normalized squared error=%.3f (p=%ld)\n", sum / k,
              static_cast<long>(qq_result.beta0.size()));
}

Outcome c8_linear_equivalence() {
  Rng meta = make_stream(808, 0);
  double worst = 0.0;
  const Design designs[] = {Design::GA, Design::T3, Design::T9, Design::T1};
  for (int k = 0; k < 50; ++k) {
    const Index n = 500 + static_cast<Index>(meta() % 2500);
    const Index p = 2 + static_cast<Index>(meta() % 8);
    const Dataset data = generate_dataset(make_scenario(designs[k % 4], n, p, meta()));
    const Index r0 = 50 + static_cast<Index>(meta() % 150);
    const Index r = 100 + static_cast<Index>(meta() % 400);
    const std::uint64_t seed = meta();
    Rng a = make_stream(seed, 0), b = make_stream(seed, 0);
    const OsumcResult general = osumc_estimate(Family::linear, data.clone_fresh(), r0, r, a);
    const OsumcResult fast = linear_fast_path(data.clone_fresh(), r0, r, b);
    if (!general.fit.converged || !fast.fit.converged) return {false, "instance " + std::to_string(k) + " did not converge"};
    const double scale = std::max(1.0, general.fit.beta_hat.cwiseAbs().maxCoeff());
    worst = std::max(worst, (general.fit.beta_hat - fast.fit.beta_hat).cwiseAbs().maxCoeff() / scale);
  }
  return {worst <= 1e-8, "max rel diff=" + fmt(worst, 3) + " over 50 instances"};
}

Outcome c9_compliance() {
  long osumc_runs = 0, other_runs = 0;
  std::string bad;
  for (std::size_t b = 0; b < bench_log.size(); ++b) {
    const Index r0 = bench_r0[b].second;
    for (const auto& rec : bench_log[b].second.records) {
      const bool is_osumc = rec.method == Method::osumc || rec.method == Method::oracle_osumc;
      if (rec.weights_phase_accesses != 0) {
        bad += " " + bench_log[b].first + "/" + std::string(to_string(rec.method)) + " weights-phase access";
      }
      const Index budget = rec.method == Method::osumc ? r0 + rec.r : rec.r;
      if (rec.method != Method::full_mle && rec.responses_measured > budget) {
        bad += " " + bench_log[b].first + "/" + std::string(to_string(rec.method)) + " over budget r=" + std::to_string(rec.r);
      }
      (is_osumc ? osumc_runs : other_runs) += 1;
      if (bad.size() > 400) break;
    }
  }
  return {bad.empty() && osumc_runs > 0, "checked " + std::to_string(osumc_runs) + " OSUMC runs and " +
                                             std::to_string(other_runs) + " other runs across " +
                                             std::to_string(bench_log.size()) + " benches" + bad};
}

Outcome c10_unbiased_score() {
  Rng rng = make_stream(1010, 0);
  const Index n = 200, p = 4, r = 20;
  const int draws = 100000;
  double worst_z = 0.0;
  for (Family f : kFamilies) {
    const MatrixXd X = random_matrix(n, p, rng, 0.8);
    const VectorXd beta_true = random_matrix(p, 1, rng, 0.5);
    const VectorXd y = draw_responses(f, X, beta_true, rng);
    const VectorXd beta = beta_true + random_matrix(p, 1, rng, 0.2);
    const SamplingWeights w = slev_weights(X, 0.5);
    const VectorXd target = full_score(f, X, y, beta);

    VectorXd sum = VectorXd::Zero(p), sumsq = VectorXd::Zero(p);
    for (int t = 0; t < draws; ++t) {
      const auto idx = sample_with_replacement(w, r, rng);
      const VectorXd s = weighted_score(f, detail::gather_rows(X, idx), detail::gather(y, idx), detail::gather(w.pi, idx), n, beta);
      sum += s;
      sumsq += s.cwiseProduct(s);
    }
    const VectorXd mean = sum / draws;
    const VectorXd var = (sumsq / draws - mean.cwiseProduct(mean)) * (static_cast<double>(draws) / (draws - 1));
    for (Index j = 0; j < p; ++j) worst_z = std::max(worst_z, std::abs(mean[j] - target[j]) / std::sqrt(var[j] / draws));
  }
  return {worst_z <= 4.0, "largest |z| over 3 families x " + std::to_string(p) + " coordinates=" + fmt(worst_z, 3)};
}

Outcome c11_real_data(const char* path) {
  CsvSchema schema;
  schema.response_column = "critical_temp";
  const Dataset data = load_csv(path, schema);
  RealDataSpec spec;
  spec.family = Family::linear;
  spec.train_count = 19000;
  spec.methods = {Method::osumc, Method::uniform, Method::slev};
  spec.r_grid = {1000};
  spec.replications = 100;
  spec.seed = 1100;
  const RealDataReport rep = real_data_eval(data, spec);
  const auto& o = rep.at(Method::osumc, 1000);
  const auto& u = rep.at(Method::uniform, 1000);
  const auto& s = rep.at(Method::slev, 1000);
  const bool ok = o.median_relative_mse < u.median_relative_mse &&
                  o.median_prediction_relative_se <= 1.05 * s.median_prediction_relative_se;
  return {ok, "median rel MSE osumc=" + fmt(o.median_relative_mse) + " uniform=" + fmt(u.median_relative_mse) +
                  "; prediction rel SE osumc=" + fmt(o.median_prediction_relative_se) + " slev=" +
                  fmt(s.median_prediction_relative_se)};
}

Outcome c12_determinism() {
  struct Case {
    Design design;
    std::vector<Method> methods;
  };
  const Case cases[] = {
      {Design::mzNormal, {Method::osumc, Method::uniform, Method::leverage, Method::slev, Method::oracle_osumc, Method::full_mle}},
      {Design::T3, {Method::osumc, Method::linear_fast, Method::leverage, Method::uniform}},
      {Design::unif_case2, {Method::osumc, Method::uniform, Method::slev}},
  };
  std::string detail;
  bool ok = true;
  for (const auto& c : cases) {
    ExperimentSpec spec = scaled(c.design, 4000, 8, c.methods, {200, 600}, 12, 1200);
    spec.r0 = 300;
    spec.fixed_design = c.design == Design::mzNormal;
    std::ostringstream first, second;
    write_records_csv(first, bench(std::string(to_string(c.design)) + "_det", spec), false);
    spec.parallelism = 2;
    write_records_csv(second, bench(std::string(to_string(c.design)) + "_det2", spec), false);
    const bool same = first.str() == second.str();
    ok = ok && same;
    detail += std::string(to_string(c.design)) + (same ? " identical" : " DIFFERS") + " (" +
              std::to_string(first.str().size()) + " bytes); ";
  }
  return {ok, detail + "second run used 2 threads"};
}

}  // namespace

int main() {
  std::printf("osumc %s acceptance run\n", std::string(kToolVersion).c_str());
  criterion(1, "score/Jacobian vs finite differences", 10, c1_derivatives);
  criterion(2, "A-optimality of the oracle weights", 30, c2_a_optimality);
  criterion(3, "asymptotic variance vs naive loops", 5, c3_variance_oracle);
  criterion(4, "logistic MSE ordering", 600, c4_logistic);
  logistic_floor_info();
  criterion(5, "linear MSE ordering", 600, c5_linear);
  linear_theory_info();
  criterion(6, "poisson MSE ordering", 300, c6_poisson);
  criterion(7, "asymptotic normality Q-Q", 600, c7_qq);
  qq_calibration_info();
  criterion(8, "linear fast path equals general OSUMC", 30, c8_linear_equivalence);
  criterion(10, "score unbiasedness", 60, c10_unbiased_score);
  criterion(12, "determinism", 120, c12_determinism);
  criterion(9, "measurement-constraint compliance", 10, c9_compliance);
  if (const char* path = std::getenv("OSUMC_SUPERCONDUCTIVITY_CSV"); path && *path) {
    criterion(11, "real-data ordering", 300, [path] { return c11_real_data(path); });
  } else {
    std::printf("criterion 11 SKIP  real-data ordering: set OSUMC_SUPERCONDUCTIVITY_CSV to run it\n");
  }
  std::printf("%s\n", failures == 0 ? "ALL PASS" : (std::to_string(failures) + " criteria FAILED").c_str());
  return failures == 0 ? 0 : 1;
}
