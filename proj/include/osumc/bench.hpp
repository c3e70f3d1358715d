#pragma once

#include <Eigen/Dense>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "osumc/datagen.hpp"
#include "osumc/error.hpp"
#include "osumc/estimator.hpp"
#include "osumc/glm.hpp"
#include "osumc/rng.hpp"
#include "osumc/sampling.hpp"

namespace osumc {

enum class Method { osumc, osmac, uniform, leverage, slev, full_mle, oracle_osumc, linear_fast };

constexpr std::string_view to_string(Method m) {
  switch (m) {
    case Method::osumc: return "osumc";
    case Method::osmac: return "osmac";
    case Method::uniform: return "uniform";
    case Method::leverage: return "leverage";
    case Method::slev: return "slev";
    case Method::full_mle: return "full_mle";
    case Method::oracle_osumc: return "oracle_osumc";
    case Method::linear_fast: return "linear_fast";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "osumc") return Method::osumc;
  if (s == "osmac") return Method::osmac;
  if (s == "uniform" || s == "unif") return Method::uniform;
  if (s == "leverage") return Method::leverage;
  if (s == "slev") return Method::slev;
  if (s == "full_mle" || s == "mle") return Method::full_mle;
  if (s == "oracle_osumc") return Method::oracle_osumc;
  if (s == "linear_fast" || s == "linear-fast") return Method::linear_fast;
  throw Error(ErrorCode::invalid_argument, "unknown method '" + std::string(s) + "'");
}

struct ExperimentSpec {
  ScenarioSpec scenario;
  /// When set, every replication reuses this dataset and only the sampling
  /// randomness is fresh; `beta0` then defaults to its full-data MLE.
  std::shared_ptr<const Dataset> fixed_data;
  std::optional<VectorXd> beta0;
  std::vector<Method> methods;
  std::vector<Index> r_grid;
  Index r0 = 500;
  int replications = 500;
  std::uint64_t base_seed = 0;
  int parallelism = 1;
  SolverOptions solver;
  double weight_floor = 0.0;
  double slev_alpha = 0.9;
  /// Draw the covariates once (from base_seed) and only regenerate responses.
  bool fixed_design = false;
  /// Put responses behind the pay-per-access oracle store.
  bool measurement_constraint = true;

  /// `scenario.family` names the family for fixed datasets as well.
  Family family() const { return scenario.family; }

  void validate() const {
    if (replications < 1) throw Error(ErrorCode::invalid_argument, "replications must be >= 1");
    if (methods.empty()) throw Error(ErrorCode::invalid_argument, "no methods requested");
    if (r_grid.empty()) throw Error(ErrorCode::invalid_argument, "r_grid is empty");
    for (std::size_t k = 0; k < r_grid.size(); ++k) {
      if (r_grid[k] < 1) throw Error(ErrorCode::invalid_argument, "r_grid entries must be >= 1");
      if (k > 0 && r_grid[k] <= r_grid[k - 1]) throw Error(ErrorCode::invalid_argument, "r_grid must be strictly ascending");
    }
    if (parallelism < 1) throw Error(ErrorCode::invalid_argument, "parallelism must be >= 1");
    if (!fixed_data) scenario.validate();
    for (Method m : methods) {
      if (m == Method::osmac && measurement_constraint) {
        throw Error(ErrorCode::infeasible_method, "osmac needs every response and cannot run under a measurement constraint");
      }
      if (m == Method::osmac && family() != Family::logistic) {
        throw Error(ErrorCode::infeasible_method, "osmac is defined for logistic regression only");
      }
      if (m == Method::linear_fast && family() != Family::linear) {
        throw Error(ErrorCode::infeasible_method, "linear_fast applies to the linear family only");
      }
    }
  }
};

struct ReplicationRecord {
  Method method = Method::uniform;
  Index r = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  double sq_error = std::numeric_limits<double>::quiet_NaN();  // ||beta_hat - beta0||^2
  double time_ms = 0.0;
  PhaseTimes phases;  // seconds
  Index responses_measured = 0;
  bool converged = false;
  Index weights_phase_accesses = 0;
  VectorXd beta_hat;
  std::string failure;
};

struct MethodSummary {
  Method method = Method::uniform;
  Index r = 0;
  double empirical_mse = std::numeric_limits<double>::quiet_NaN();
  double mse_stderr = std::numeric_limits<double>::quiet_NaN();
  double median_time_ms = std::numeric_limits<double>::quiet_NaN();
  int successes = 0;
  int failures = 0;
};

struct ExperimentResult {
  std::vector<ReplicationRecord> records;  // replication-major, then method, then r
  std::vector<MethodSummary> summary;
  VectorXd beta0;
  std::uint64_t base_seed = 0;
  /// V(T|X)^{-1/2} Phi at beta0 for oracle_osumc per r; filled for fixed designs.
  std::map<Index, MatrixXd> oracle_normalizers;

  const MethodSummary& at(Method m, Index r) const {
    for (const auto& s : summary) {
      if (s.method == m && s.r == r) return s;
    }
    throw Error(ErrorCode::invalid_argument, "no summary for method " + std::string(to_string(m)) + " at r=" + std::to_string(r));
  }
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

/// Aggregates per (method, r), in the order given. Failures are counted and
/// excluded from the MSE.
inline std::vector<MethodSummary> summarize(const std::vector<ReplicationRecord>& records, const std::vector<Method>& methods,
                                            const std::vector<Index>& r_grid) {
  std::vector<MethodSummary> out;
  for (Method m : methods) {
    for (Index r : r_grid) {
      MethodSummary s;
      s.method = m;
      s.r = r;
      std::vector<double> errs, times;
      for (const auto& rec : records) {
        if (rec.method != m || rec.r != r) continue;
        if (!rec.converged) {
          ++s.failures;
          continue;
        }
        errs.push_back(rec.sq_error);
        times.push_back(rec.time_ms);
      }
      s.successes = static_cast<int>(errs.size());
      if (!errs.empty()) {
        const double k = static_cast<double>(errs.size());
        s.empirical_mse = std::accumulate(errs.begin(), errs.end(), 0.0) / k;
        double ss = 0.0;
        for (double e : errs) ss += (e - s.empirical_mse) * (e - s.empirical_mse);
        s.mse_stderr = errs.size() > 1 ? std::sqrt(ss / (k - 1.0) / k) : 0.0;
        s.median_time_ms = median(times);
      }
      out.push_back(s);
    }
  }
  return out;
}

namespace detail {

struct MethodOutcome {
  FitResult fit;
  PhaseTimes phases;
  Index weights_phase_accesses = 0;
};

struct MethodContext {
  Family family;
  Index r0;
  double weight_floor;
  double slev_alpha;
  SolverOptions solver;
  const VectorXd* beta0;
};

inline MethodOutcome run_method(Method method, const Dataset& data, Index r, Rng& rng, const MethodContext& ctx) {
  MethodOutcome out;
  Stopwatch clock;
  auto fit_with = [&](const SamplingWeights& w, const VectorXd& init) {
    out.phases.weights = clock.lap();
    auto sub = fit_on_subsample(ctx.family, data, apply_weight_floor(w, ctx.weight_floor), r, rng, init, ctx.solver);
    out.fit = std::move(sub.fit);
    out.phases.sample = sub.sample_seconds;
    out.phases.solve = sub.solve_seconds;
  };
  const VectorXd zero = VectorXd::Zero(data.p());
  switch (method) {
    case Method::osumc: {
      EstimateOptions opts{ctx.solver, ctx.weight_floor, false};
      OsumcResult res = osumc_estimate(ctx.family, data, ctx.r0, r, rng, opts);
      out.fit = std::move(res.fit);
      out.phases = res.wallclock;
      out.weights_phase_accesses = res.weights_phase_accesses;
      if (out.weights_phase_accesses != 0 || out.fit.responses_measured > ctx.r0 + r) {
        throw Error(ErrorCode::measurement_violation,
                    "osumc accessed " + std::to_string(out.weights_phase_accesses) + " responses while weighting and " +
                        std::to_string(out.fit.responses_measured) + " in total (budget " + std::to_string(ctx.r0 + r) + ")");
      }
      break;
    }
    case Method::linear_fast: {
      EstimateOptions opts{ctx.solver, ctx.weight_floor, false};
      OsumcResult res = linear_fast_path(data, ctx.r0, r, rng, opts);
      out.fit = std::move(res.fit);
      out.phases = res.wallclock;
      out.weights_phase_accesses = res.weights_phase_accesses;
      break;
    }
    case Method::uniform: fit_with(uniform_weights(data.n()), zero); break;
    case Method::leverage: fit_with(leverage_weights(data.X), zero); break;
    case Method::slev: fit_with(slev_weights(data.X, ctx.slev_alpha), zero); break;
    case Method::osmac: {
      const PilotFit pilot = pilot_fit(ctx.family, data, ctx.r0, rng, ctx.solver);
      out.phases.pilot = clock.lap();
      fit_with(osmac_mmse_weights(data, pilot.beta_tilde), pilot.beta_tilde);
      break;
    }
    case Method::oracle_osumc: {
      const MatrixXd phi = plugin_information(ctx.family, data.X, *ctx.beta0);
      fit_with(oracle_optimal_weights(ctx.family, data.X, *ctx.beta0, phi), zero);
      break;
    }
    case Method::full_mle: {
      out.fit = full_mle(ctx.family, data, ctx.solver);
      out.phases.solve = clock.lap();
      break;
    }
  }
  return out;
}

inline bool is_run_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_converged:
    case ErrorCode::singular_information:
    case ErrorCode::rank_deficient:
    case ErrorCode::overflow:
    case ErrorCode::degenerate_weights: return true;
    default: return false;
  }
}

inline ReplicationRecord record_run(Method method, const Dataset& data, Index r, int rep, std::uint64_t seed, Rng& rng,
                                    const MethodContext& ctx) {
  ReplicationRecord rec;
  rec.method = method;
  rec.r = r;
  rec.replication = rep;
  rec.seed = seed;
  data.responses.reset_ledger();
  try {
    MethodOutcome outcome = run_method(method, data, r, rng, ctx);
    rec.phases = outcome.phases;
    rec.time_ms = 1000.0 * outcome.phases.total();
    rec.responses_measured = outcome.fit.responses_measured;
    rec.weights_phase_accesses = outcome.weights_phase_accesses;
    rec.converged = outcome.fit.converged;
    rec.beta_hat = outcome.fit.beta_hat;
    if (rec.converged) {
      rec.sq_error = (rec.beta_hat - *ctx.beta0).squaredNorm();
    } else {
      rec.failure = outcome.fit.message;
    }
  } catch (const Error& e) {
    if (!is_run_failure(e.code())) throw;
    rec.converged = false;
    rec.responses_measured = data.responses.measured();
    rec.failure = std::string(error_tag(e.code())) + ": " + e.what();
  }
  return rec;
}

/// Runs `body(k)` for k in [0, count) on up to `threads` workers; the first
/// exception is rethrown after all workers stop.
template <typename Body>
void parallel_for(int count, int threads, Body&& body) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (!stop.load()) {
        const int k = next.fetch_add(1);
        if (k >= count) break;
        try {
          body(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first) first = std::current_exception();
          stop.store(true);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace detail

/// Stream used for the run of method index `m` at grid index `k` within a replication.
inline std::uint64_t run_stream_id(std::size_t m, std::size_t k) { return 1000 + 1000 * m + k; }

inline ExperimentResult run_mse_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const Family family = spec.family();

  ExperimentResult result;
  result.base_seed = spec.base_seed;

  std::shared_ptr<const MatrixXd> shared_design;
  if (spec.fixed_data) {
    spec.fixed_data->validate();
    if (spec.beta0) {
      result.beta0 = *spec.beta0;
    } else {
      const Dataset probe = spec.fixed_data->clone_fresh();
      const FitResult mle = full_mle(family, probe, spec.solver);
      if (!mle.converged) throw NotConvergedError("full-data fit defining beta0 did not converge", mle);
      result.beta0 = mle.beta_hat;
    }
  } else {
    result.beta0 = spec.beta0.value_or(spec.scenario.beta0);
    if (spec.fixed_design) {
      ScenarioSpec s = spec.scenario;
      s.seed = spec.base_seed;
      shared_design = std::make_shared<const MatrixXd>(gen_design(s));
    }
  }
  if (result.beta0.size() != (spec.fixed_data ? spec.fixed_data->p() : spec.scenario.p)) {
    throw Error(ErrorCode::invalid_argument, "beta0 length does not match p");
  }

  if (shared_design && std::find(spec.methods.begin(), spec.methods.end(), Method::oracle_osumc) != spec.methods.end()) {
    const MatrixXd phi = plugin_information(family, *shared_design, result.beta0);
    const SamplingWeights w = apply_weight_floor(oracle_optimal_weights(family, *shared_design, result.beta0, phi), spec.weight_floor);
    for (Index r : spec.r_grid) {
      const MatrixXd V = detail::conditional_score_variance(family, *shared_design, result.beta0, w, r);
      result.oracle_normalizers[r] = inverse_sqrt_spd(V) * phi;
    }
  }

  const detail::MethodContext ctx{family, spec.r0, spec.weight_floor, spec.slev_alpha, spec.solver, &result.beta0};
  std::vector<std::vector<ReplicationRecord>> per_rep(static_cast<std::size_t>(spec.replications));

  detail::parallel_for(spec.replications, spec.parallelism, [&](int rep) {
    const std::uint64_t seed = derive_seed(spec.base_seed, static_cast<std::uint64_t>(rep));
    Dataset data;
    if (spec.fixed_data) {
      data = spec.fixed_data->clone_fresh();
    } else {
      ScenarioSpec s = spec.scenario;
      s.seed = seed;
      MatrixXd X = shared_design ? *shared_design : gen_design(s);
      Rng yrng = make_stream(seed, 1);
      VectorXd y = gen_responses(s, X, yrng);
      data = make_dataset(std::move(X), ResponseStore::full(std::move(y)));
    }
    if (spec.measurement_constraint && data.responses.mode() != ResponseStore::Mode::oracle) {
      data.responses = data.responses.with_mode(ResponseStore::Mode::oracle);
    }

    auto& out = per_rep[static_cast<std::size_t>(rep)];
    for (std::size_t m = 0; m < spec.methods.size(); ++m) {
      const Method method = spec.methods[m];
      if (method == Method::full_mle) {
        // Independent of r: one fit, reported at every grid point.
        Rng rng = make_stream(seed, run_stream_id(m, 0));
        const ReplicationRecord rec = detail::record_run(method, data, spec.r_grid.front(), rep, seed, rng, ctx);
        for (Index r : spec.r_grid) {
          ReplicationRecord copy = rec;
          copy.r = r;
          out.push_back(std::move(copy));
        }
        continue;
      }
      for (std::size_t k = 0; k < spec.r_grid.size(); ++k) {
        Rng rng = make_stream(seed, run_stream_id(m, k));
        out.push_back(detail::record_run(method, data, spec.r_grid[k], rep, seed, rng, ctx));
      }
    }
  });

  for (auto& v : per_rep) {
    for (auto& rec : v) result.records.push_back(std::move(rec));
  }
  result.summary = summarize(result.records, spec.methods, spec.r_grid);
  return result;
}

// ---------------------------------------------------------------------------
// Timing.
// ---------------------------------------------------------------------------

struct TimingRow {
  Method method = Method::uniform;
  Index r = 0;
  double median_total_ms = 0.0;
  double median_pilot_ms = 0.0;
  double median_weights_ms = 0.0;
  double median_sample_ms = 0.0;
  double median_solve_ms = 0.0;
};

inline std::vector<TimingRow> timing_table(const ExperimentResult& result, const std::vector<Method>& methods,
                                           const std::vector<Index>& r_grid) {
  std::vector<TimingRow> rows;
  for (Method m : methods) {
    for (Index r : r_grid) {
      std::vector<double> total, pilot, weights, sample, solve;
      for (const auto& rec : result.records) {
        if (rec.method != m || rec.r != r || !rec.converged) continue;
        total.push_back(rec.time_ms);
        pilot.push_back(1000.0 * rec.phases.pilot);
        weights.push_back(1000.0 * rec.phases.weights);
        sample.push_back(1000.0 * rec.phases.sample);
        solve.push_back(1000.0 * rec.phases.solve);
      }
      rows.push_back({m, r, median(total), median(pilot), median(weights), median(sample), median(solve)});
    }
  }
  return rows;
}

/// Median wall-clock per (method, r); data generation is excluded.
inline std::vector<TimingRow> run_timing(const ExperimentSpec& spec) {
  return timing_table(run_mse_experiment(spec), spec.methods, spec.r_grid);
}

// ---------------------------------------------------------------------------
// Chi-square Q-Q diagnostics.
// ---------------------------------------------------------------------------

struct QQReport {
  std::vector<double> theoretical;  // chi-square_p quantiles at (i - 0.5) / S
  std::vector<double> empirical;    // sorted squared normalized distances
  double correlation = 0.0;
};

/// Pearson correlation; throws degenerate_sample if either side is constant.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double k = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / k;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / k;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw Error(ErrorCode::degenerate_sample, "correlation undefined: zero variance");
  return sab / std::sqrt(saa * sbb);
}

inline QQReport qq_statistics(const std::vector<VectorXd>& betas, const VectorXd& beta0, const MatrixXd& normalizer) {
  if (betas.size() < 100) {
    throw Error(ErrorCode::too_few_replications, "Q-Q diagnostics need at least 100 replications, got " + std::to_string(betas.size()));
  }
  const Index p = beta0.size();
  if (normalizer.rows() != p || normalizer.cols() != p) throw Error(ErrorCode::invalid_argument, "normalizer must be p x p");
  QQReport rep;
  rep.empirical.reserve(betas.size());
  for (const auto& b : betas) {
    if (b.size() != p) throw Error(ErrorCode::invalid_argument, "replicate length does not match beta0");
    rep.empirical.push_back((normalizer * (b - beta0)).squaredNorm());
  }
  std::sort(rep.empirical.begin(), rep.empirical.end());
  const boost::math::chi_squared_distribution<double> chi2(static_cast<double>(p));
  const double S = static_cast<double>(betas.size());
  rep.theoretical.resize(betas.size());
  for (std::size_t i = 0; i < betas.size(); ++i) {
    rep.theoretical[i] = boost::math::quantile(chi2, (static_cast<double>(i) + 0.5) / S);
  }
  rep.correlation = pearson(rep.theoretical, rep.empirical);
  return rep;
}

/// V(T|X)^{-1/2} Phi at beta, the normalization under which the estimator is
/// approximately standard normal.
inline MatrixXd qq_normalizer(Family family, const MatrixXd& X, const VectorXd& beta, const SamplingWeights& weights, Index r) {
  const MatrixXd phi = plugin_information(family, X, beta);
  return inverse_sqrt_spd(detail::conditional_score_variance(family, X, beta, weights, r)) * phi;
}

// ---------------------------------------------------------------------------
// Real-data evaluation.
// ---------------------------------------------------------------------------

struct RealDataSpec {
  Family family = Family::linear;
  Index train_count = 19000;
  std::vector<Method> methods{Method::osumc, Method::uniform, Method::leverage, Method::slev};
  std::vector<Index> r_grid{1000};
  int replications = 500;
  std::uint64_t seed = 0;
  Index r0 = 500;
  SolverOptions solver;
  double slev_alpha = 0.9;
  double weight_floor = 0.0;
};

struct RealDataRow {
  Method method = Method::uniform;
  Index r = 0;
  double median_relative_mse = std::numeric_limits<double>::quiet_NaN();
  double median_prediction_relative_se = std::numeric_limits<double>::quiet_NaN();
  double median_time_ms = std::numeric_limits<double>::quiet_NaN();
  int failures = 0;
  std::vector<double> relative_mse;
  std::vector<double> prediction_relative_se;
};

struct RealDataReport {
  std::vector<RealDataRow> rows;

  const RealDataRow& at(Method m, Index r) const {
    for (const auto& row : rows) {
      if (row.method == m && row.r == r) return row;
    }
    throw Error(ErrorCode::invalid_argument, "no real-data row for the requested method and r");
  }
};

/// Random train/test split per replication; beta0 is the full-train fit and
/// each method runs on the training rows behind a measurement ledger.
inline RealDataReport real_data_eval(const Dataset& data, const RealDataSpec& spec) {
  data.validate();
  if (!data.responses.fully_observed()) throw Error(ErrorCode::missing_responses, "real-data evaluation needs every response");
  if (spec.train_count < data.p() + 1 || spec.train_count >= data.n()) {
    throw Error(ErrorCode::invalid_argument, "train_count must lie in [p+1, n-1]");
  }
  if (spec.replications < 1) throw Error(ErrorCode::invalid_argument, "replications must be >= 1");
  const VectorXd y_all = data.responses.peek_values();
  const Index n = data.n();

  RealDataReport report;
  for (Method m : spec.methods) {
    for (Index r : spec.r_grid) {
      RealDataRow row;
      row.method = m;
      row.r = r;
      report.rows.push_back(std::move(row));
    }
  }
  std::vector<std::vector<double>> times(report.rows.size());

  for (int rep = 0; rep < spec.replications; ++rep) {
    const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(rep));
    Rng split_rng = make_stream(seed, 0);
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), split_rng);
    const std::vector<Index> train_idx(perm.begin(), perm.begin() + spec.train_count);
    const std::vector<Index> test_idx(perm.begin() + spec.train_count, perm.end());

    Dataset train = make_dataset(detail::gather_rows(data.X, train_idx), ResponseStore::oracle(detail::gather(y_all, train_idx)));
    const MatrixXd X_test = detail::gather_rows(data.X, test_idx);
    const VectorXd y_test = detail::gather(y_all, test_idx);

    const FitResult truth = full_mle(spec.family, train, spec.solver);
    if (!truth.converged) throw NotConvergedError("full-train fit did not converge", truth);
    const VectorXd beta0 = truth.beta_hat;
    const double beta0_sq = beta0.squaredNorm();
    const double base_pred = (X_test * beta0 - y_test).squaredNorm();

    const detail::MethodContext ctx{spec.family, spec.r0, spec.weight_floor, spec.slev_alpha, spec.solver, &beta0};
    std::size_t row = 0;
    for (std::size_t m = 0; m < spec.methods.size(); ++m) {
      for (std::size_t k = 0; k < spec.r_grid.size(); ++k, ++row) {
        Rng rng = make_stream(seed, run_stream_id(m, k));
        const ReplicationRecord rec = detail::record_run(spec.methods[m], train, spec.r_grid[k], rep, seed, rng, ctx);
        auto& out = report.rows[row];
        if (!rec.converged) {
          ++out.failures;
          continue;
        }
        out.relative_mse.push_back(rec.sq_error / beta0_sq);
        out.prediction_relative_se.push_back((X_test * rec.beta_hat - y_test).squaredNorm() / base_pred);
        times[row].push_back(rec.time_ms);
      }
    }
  }
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    auto& row = report.rows[i];
    row.median_relative_mse = median(row.relative_mse);
    row.median_prediction_relative_se = median(row.prediction_relative_se);
    row.median_time_ms = median(times[i]);
  }
  return report;
}

}  // namespace osumc
