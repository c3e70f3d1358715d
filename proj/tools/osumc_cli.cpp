// osumc command-line front end: fit, weights, simulate, bench, qq, eval-real.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "osumc/osumc.hpp"

namespace {

using namespace osumc;

struct DataOptions {
  std::string path;
  std::string response = "y";
  std::string features;
  std::string delimiter = ",";
  bool no_header = false;
  std::string missing_token;
  bool measurement_constraint = false;

  void add_to(CLI::App* cmd, bool response_needed = true) {
    cmd->add_option("--data", path, "Input CSV")->required();
    cmd->add_option("--response", response, "Response column name (empty: none)")->capture_default_str();
    cmd->add_option("--features", features, "Comma-separated feature columns (default: all others)");
    cmd->add_option("--delimiter", delimiter, "Field delimiter")->capture_default_str();
    cmd->add_flag("--no-header", no_header, "First line is data; columns are named c1, c2, ...");
    cmd->add_option("--missing-token", missing_token, "Token marking an unobserved response");
    if (response_needed) {
      cmd->add_flag("--measurement-constraint", measurement_constraint,
                    "Treat the responses as unmeasured until a procedure pays for them");
    }
  }

  Dataset load() const {
    if (delimiter.size() != 1) throw Error(ErrorCode::invalid_argument, "--delimiter must be a single character");
    CsvSchema schema;
    if (!response.empty()) schema.response_column = response;
    if (!features.empty()) schema.feature_columns = split_list(features);
    schema.delimiter = delimiter[0];
    schema.has_header = !no_header;
    schema.missing_token = missing_token;
    Dataset d = load_csv(path, schema);
    if (measurement_constraint) d.responses = d.responses.with_mode(ResponseStore::Mode::oracle);
    std::cerr << "loaded " << path << ": n=" << d.n() << " p=" << d.p() << " observed_responses=" << d.responses.observed_count()
              << (measurement_constraint ? " (measurement constraint)" : "") << '\n';
    return d;
  }

  std::string canonical() const {
    return "data=" + path + "\nresponse=" + response + "\nfeatures=" + features + "\ndelimiter=" + delimiter +
           "\nno_header=" + (no_header ? "1" : "0") + "\nmissing_token=" + missing_token +
           "\nmeasurement_constraint=" + (measurement_constraint ? "1" : "0") + "\n";
  }
};

struct SamplingOptions {
  std::string method = "osumc";
  Index r0 = 500;
  Index r = 1000;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  int max_iter = 100;
  double weight_floor = 0.0;
  double slev_alpha = 0.9;

  void add_to(CLI::App* cmd, bool with_r) {
    cmd->add_option("--r0", r0, "Pilot size")->capture_default_str();
    if (with_r) cmd->add_option("--r", r, "Subsample size")->capture_default_str();
    cmd->add_option("--seed", seed, "Seed")->capture_default_str();
    cmd->add_option("--tol", tol, "Score tolerance (sup norm)")->capture_default_str();
    cmd->add_option("--max-iter", max_iter, "Newton iteration cap")->capture_default_str();
    cmd->add_option("--weight-floor", weight_floor, "Mix weights toward uniform: (1-d) pi + d/n")->capture_default_str();
    cmd->add_option("--slev-alpha", slev_alpha, "Shrinkage for slev")->capture_default_str();
  }

  SolverOptions solver() const {
    if (!(tol > 0.0)) throw Error(ErrorCode::invalid_argument, "--tol must be positive");
    if (max_iter < 1) throw Error(ErrorCode::invalid_argument, "--max-iter must be >= 1");
    return SolverOptions{tol, max_iter};
  }

  std::string canonical() const {
    std::ostringstream s;
    s << "method=" << method << "\nr0=" << r0 << "\nr=" << r << "\nseed=" << seed << "\ntol=" << format_double(tol)
      << "\nmax_iter=" << max_iter << "\nweight_floor=" << format_double(weight_floor)
      << "\nslev_alpha=" << format_double(slev_alpha) << '\n';
    return s.str();
  }
};

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
  return file;
}

// ----------------------------------------------------------------------------
// fit

struct FitCommand {
  DataOptions data;
  SamplingOptions sampling;
  std::string family = "logistic";
  bool with_variance = false;

  void add_to(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("fit", "Estimate coefficients from a subsample (or the full data)");
    cmd->add_option("--family", family, "linear | logistic | poisson")->capture_default_str();
    cmd->add_option("--method", sampling.method, "osumc | uniform | leverage | slev | osmac | mle | linear-fast")
        ->capture_default_str();
    data.add_to(cmd);
    sampling.add_to(cmd, true);
    cmd->add_flag("--with-variance", with_variance, "Print the plug-in covariance diagonal");
  }

  int run() const {
    const Family fam = parse_family(family);
    const Method method = parse_method(sampling.method);
    const Dataset d = data.load();
    const SolverOptions opts = sampling.solver();
    Rng rng = make_stream(sampling.seed, 0);
    FitResult fit;
    std::optional<SamplingWeights> weights;
    std::string extra;

    switch (method) {
      case Method::full_mle: fit = full_mle(fam, d, opts); break;
      case Method::osumc: {
        const OsumcResult res = osumc_estimate(fam, d, sampling.r0, sampling.r, rng, {opts, sampling.weight_floor, false});
        fit = res.fit;
        weights = res.weights;
        extra = "pilot_jitter: " + format_double(res.pilot.jitter_applied) + "\nweights_phase_accesses: " +
                std::to_string(res.weights_phase_accesses) + "\n";
        break;
      }
      case Method::linear_fast: {
        if (fam != Family::linear) throw Error(ErrorCode::infeasible_method, "linear-fast applies to the linear family only");
        const OsumcResult res = linear_fast_path(d, sampling.r0, sampling.r, rng, {opts, sampling.weight_floor, false});
        fit = res.fit;
        weights = res.weights;
        break;
      }
      case Method::uniform: weights = uniform_weights(d.n()); break;
      case Method::leverage: weights = leverage_weights(d.X); break;
      case Method::slev: weights = slev_weights(d.X, sampling.slev_alpha); break;
      case Method::osmac: {
        if (d.responses.mode() == ResponseStore::Mode::oracle) {
          throw Error(ErrorCode::infeasible_method, "osmac needs every response and cannot run under a measurement constraint");
        }
        if (fam != Family::logistic) throw Error(ErrorCode::infeasible_method, "osmac is defined for logistic regression only");
        const PilotFit pilot = pilot_fit(fam, d, sampling.r0, rng, opts);
        weights = osmac_mmse_weights(d, pilot.beta_tilde);
        fit = generic_sampling_estimate(fam, d, apply_weight_floor(*weights, sampling.weight_floor), sampling.r, rng, opts,
                                        pilot.beta_tilde);
        break;
      }
      case Method::oracle_osumc:
        throw Error(ErrorCode::invalid_argument, "oracle_osumc needs the true coefficients; use bench");
    }
    if (method == Method::uniform || method == Method::leverage || method == Method::slev) {
      weights = apply_weight_floor(*weights, sampling.weight_floor);
      fit = generic_sampling_estimate(fam, d, *weights, sampling.r, rng, opts);
    }

    std::cout << "method: " << to_string(method) << "\nfamily: " << to_string(fam) << "\nn: " << d.n() << "\np: " << d.p()
              << "\nconverged: " << (fit.converged ? "true" : "false") << "\niterations: " << fit.iterations
              << "\nfinal_score_norm: " << format_double(fit.final_score_norm)
              << "\nresponses_measured: " << fit.responses_measured << '\n'
              << extra;
    if (!fit.message.empty()) std::cout << "message: " << fit.message << '\n';
    const auto names = d.feature_names.empty() ? default_feature_names(d.p()) : d.feature_names;
    std::cout << "coefficients:\n";
    std::optional<MatrixXd> cov;
    if (with_variance && fit.converged) {
      cov = weights ? asymptotic_variance(fam, d.X, fit.beta_hat, *weights, sampling.r)
                    : MatrixXd(plugin_information(fam, d.X, fit.beta_hat).inverse() / static_cast<double>(d.n()));
    }
    for (Index j = 0; j < d.p(); ++j) {
      std::cout << "  " << names[static_cast<std::size_t>(j)] << ' ' << format_double(fit.beta_hat[j]);
      if (cov) std::cout << " var=" << format_double((*cov)(j, j));
      std::cout << '\n';
    }
    if (cov) std::cout << "covariance_note: plug-in, dispersion taken as 1\n";
    return fit.converged ? 0 : 2;
  }
};

// ----------------------------------------------------------------------------
// weights

struct WeightsCommand {
  DataOptions data;
  SamplingOptions sampling;
  std::string family = "logistic";
  std::string out;

  void add_to(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("weights", "Compute a sampling distribution without fitting");
    cmd->add_option("--family", family, "linear | logistic | poisson")->capture_default_str();
    cmd->add_option("--method", sampling.method, "osumc | uniform | leverage | slev | osmac")->capture_default_str();
    cmd->add_option("--out", out, "Output CSV (default stdout)");
    data.add_to(cmd);
    sampling.add_to(cmd, false);
  }

  int run() const {
    const Family fam = parse_family(family);
    const Method method = parse_method(sampling.method);
    const Dataset d = data.load();
    Rng rng = make_stream(sampling.seed, 0);
    SamplingWeights w;
    Index pilot_accesses = 0;
    switch (method) {
      case Method::uniform: w = uniform_weights(d.n()); break;
      case Method::leverage: w = leverage_weights(d.X); break;
      case Method::slev: w = slev_weights(d.X, sampling.slev_alpha); break;
      case Method::osumc: {
        const PilotFit pilot = pilot_fit(fam, d, sampling.r0, rng, sampling.solver());
        pilot_accesses = d.responses.measured();
        w = osumc_weights(fam, d.X, pilot);
        break;
      }
      case Method::linear_fast: {
        if (fam != Family::linear) throw Error(ErrorCode::infeasible_method, "linear-fast applies to the linear family only");
        PilotFit pilot;
        pilot.pilot_indices = detail::uniform_indices(d.n(), sampling.r0, rng);
        pilot.phi_tilde = pilot_information(Family::linear, detail::gather_rows(d.X, pilot.pilot_indices), VectorXd::Zero(d.p()));
        pilot.phi_solver.factor(pilot.phi_tilde);
        pilot.jitter_applied = pilot.phi_solver.jitter();
        w = osumc_weights(Family::linear, d.X, pilot);
        break;
      }
      case Method::osmac: {
        if (d.responses.mode() == ResponseStore::Mode::oracle) {
          throw Error(ErrorCode::infeasible_method, "osmac needs every response and cannot run under a measurement constraint");
        }
        const PilotFit pilot = pilot_fit(Family::logistic, d, sampling.r0, rng, sampling.solver());
        w = osmac_mmse_weights(d, pilot.beta_tilde);
        break;
      }
      default: throw Error(ErrorCode::invalid_argument, "weights: unsupported method '" + sampling.method + "'");
    }
    w = apply_weight_floor(std::move(w), sampling.weight_floor);
    if (method != Method::osmac && d.responses.measured() != pilot_accesses) {
      throw Error(ErrorCode::measurement_violation, "response-free weights accessed responses outside the pilot");
    }
    const std::string header = provenance_line(fnv1a(data.canonical() + sampling.canonical() + "family=" + family), sampling.seed);
    if (out.empty() || out == "-") {
      std::cout << header << '\n';
      std::cout << "# strategy=" << to_string(w.strategy) << '\n' << "index,pi\n";
      for (Index i = 0; i < w.pi.size(); ++i) std::cout << i << ',' << format_double(w.pi[i]) << '\n';
    } else {
      write_weights_csv(out, w, header);
    }
    std::cerr << "strategy=" << to_string(w.strategy) << " responses_measured=" << d.responses.measured()
              << " pilot_draws=" << (method == Method::osumc || method == Method::osmac ? sampling.r0 : 0) << '\n';
    return 0;
  }
};

// ----------------------------------------------------------------------------
// simulate

struct SimulateCommand {
  std::string design = "mzNormal";
  Index n = 100000;
  Index p = 20;
  std::uint64_t seed = 0;
  std::optional<double> noise_sd;
  std::string beta0;
  std::string out;

  void add_to(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("simulate", "Generate a synthetic scenario dataset");
    cmd->add_option("--design", design, "mzNormal | nzNormal | unNormal | mixNormal | GA | T1 | T3 | T9 | unif_case1 | unif_case2")
        ->capture_default_str();
    cmd->add_option("--n", n, "Rows")->capture_default_str();
    cmd->add_option("--p", p, "Columns")->capture_default_str();
    cmd->add_option("--seed", seed, "Seed")->capture_default_str();
    cmd->add_option("--noise-sd", noise_sd, "Noise sd (linear designs; default 3)");
    cmd->add_option("--beta0", beta0, "Comma-separated true coefficients");
    cmd->add_option("--out", out, "Output CSV")->required();
  }

  int run() const {
    ScenarioSpec s = make_scenario(parse_design(design), n, p, seed);
    if (noise_sd) s.noise_sd = *noise_sd;
    if (!beta0.empty()) s.beta0 = parse_vector(beta0, "--beta0");
    const Dataset d = generate_dataset(s);
    std::ostringstream canon;
    canon << "design=" << design << "\nn=" << n << "\np=" << p << "\nseed=" << seed
          << "\nnoise_sd=" << (noise_sd ? format_double(*noise_sd) : "") << "\nbeta0=" << beta0 << '\n';
    write_csv(out, d, "y", provenance_line(fnv1a(canon.str()), seed));
    std::cerr << "wrote " << out << ": n=" << n << " p=" << p << " family=" << to_string(s.family) << '\n';
    return 0;
  }
};

// ----------------------------------------------------------------------------
// bench

struct BenchCommand {
  std::string config;
  std::vector<std::string> overrides;
  std::string output_dir;

  void add_to(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("bench", "Run a replication experiment from a config file");
    cmd->add_option("--config", config, "key = value configuration file");
    cmd->add_option("--set", overrides, "Override a config entry: key=value (repeatable)");
    cmd->add_option("--out-dir", output_dir, "Output directory (overrides output_dir)");
  }

  int run() const {
    RunConfig cfg = make_bench_config();
    if (!config.empty()) cfg.parse_file(config);
    for (const auto& o : overrides) cfg.apply_override(o);
    if (!output_dir.empty()) cfg.set("output_dir", output_dir);
    const BenchJob job = bench_job_from_config(cfg);
    const ExperimentResult res = run_mse_experiment(job.spec);
    for (const auto& path : write_bench_outputs(job, res)) std::cerr << "wrote " << path << '\n';
    std::cout << "method,r,empirical_mse,mse_stderr,failures\n";
    for (const auto& s : res.summary) {
      std::cout << to_string(s.method) << ',' << s.r << ',' << format_double(s.empirical_mse) << ','
                << format_double(s.mse_stderr) << ',' << s.failures << '\n';
    }
    return 0;
  }
};

// ----------------------------------------------------------------------------
// qq

struct QQCommand {
  std::string records;
  std::string method = "oracle_osumc";
  Index r = 0;
  std::string beta0_file;
  std::string normalizer_file;
  std::string out;

  void add_to(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("qq", "Chi-square Q-Q diagnostics from per-replication records");
    cmd->add_option("--records", records, "records.csv written by bench")->required();
    cmd->add_option("--method", method, "Method whose replicates are used")->capture_default_str();
    cmd->add_option("--r", r, "Subsample size (default: the only r present)");
    cmd->add_option("--beta0", beta0_file, "beta0.csv (default: next to the records)");
    cmd->add_option("--normalizer", normalizer_file, "p x p normalizer CSV (default: qq_normalizer_r<r>.csv next to the records)");
    cmd->add_option("--out", out, "Q-Q pairs CSV (default stdout)");
  }

  int run() const {
    namespace fs = std::filesystem;
    const auto rows = read_records_csv(records);
    const std::string wanted = std::string(to_string(parse_method(method)));
    Index use_r = r;
    if (use_r == 0) {
      std::set<Index> rs;
      for (const auto& row : rows) {
        if (row.method == wanted) rs.insert(row.r);
      }
      if (rs.size() != 1) throw Error(ErrorCode::invalid_argument, "qq: pass --r; records hold " + std::to_string(rs.size()) + " sizes");
      use_r = *rs.begin();
    }
    std::vector<VectorXd> betas;
    for (const auto& row : rows) {
      if (row.method == wanted && row.r == use_r && row.converged) betas.push_back(row.beta);
    }
    const fs::path dir = fs::path(records).parent_path();
    const std::string b0 = beta0_file.empty() ? (dir / "beta0.csv").string() : beta0_file;
    const std::string nf = normalizer_file.empty() ? (dir / ("qq_normalizer_r" + std::to_string(use_r) + ".csv")).string()
                                                   : normalizer_file;
    const MatrixXd beta0_row = load_matrix_csv(b0);
    const VectorXd beta0 = beta0_row.row(0).transpose();
    const MatrixXd normalizer = load_matrix_csv(nf);
    const QQReport rep = qq_statistics(betas, beta0, normalizer);

    std::ofstream file;
    std::ostream& os = open_or_stdout(out, file);
    os << provenance_line(fnv1a(records + "\n" + wanted + "\n" + std::to_string(use_r)), 0) << '\n';
    os << "theoretical,empirical\n";
    for (std::size_t i = 0; i < rep.theoretical.size(); ++i) {
      os << format_double(rep.theoretical[i]) << ',' << format_double(rep.empirical[i]) << '\n';
    }
    std::cerr << "replicates=" << betas.size() << " p=" << beta0.size() << '\n';
    std::cout << "qq_correlation: " << format_double(rep.correlation) << '\n';
    return 0;
  }
};

// ----------------------------------------------------------------------------
// eval-real

struct EvalRealCommand {
  DataOptions data;
  std::string family = "linear";
  Index train_count = 19000;
  std::string methods = "osumc,uniform,leverage,slev";
  std::string r_grid = "1000";
  int replications = 100;
  std::uint64_t seed = 0;
  Index r0 = 500;
  double weight_floor = 0.0;
  double slev_alpha = 0.9;
  std::string out;

  void add_to(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("eval-real", "Train/test evaluation on a fully labeled dataset");
    data.add_to(cmd, false);
    cmd->add_option("--family", family, "Model family")->capture_default_str();
    cmd->add_option("--train-count", train_count, "Training rows per replication")->capture_default_str();
    cmd->add_option("--methods", methods, "Comma-separated methods")->capture_default_str();
    cmd->add_option("--r-grid", r_grid, "Comma-separated subsample sizes")->capture_default_str();
    cmd->add_option("--replications", replications, "Replications")->capture_default_str();
    cmd->add_option("--seed", seed, "Seed")->capture_default_str();
    cmd->add_option("--r0", r0, "Pilot size")->capture_default_str();
    cmd->add_option("--weight-floor", weight_floor, "Weight floor")->capture_default_str();
    cmd->add_option("--slev-alpha", slev_alpha, "Shrinkage for slev")->capture_default_str();
    cmd->add_option("--out", out, "Output CSV (default stdout)");
  }

  int run() const {
    const Dataset d = data.load();
    RealDataSpec spec;
    spec.family = parse_family(family);
    spec.train_count = train_count;
    spec.methods.clear();
    for (const auto& m : split_list(methods)) spec.methods.push_back(parse_method(m));
    spec.r_grid = parse_index_list(r_grid, "--r-grid");
    spec.replications = replications;
    spec.seed = seed;
    spec.r0 = r0;
    spec.weight_floor = weight_floor;
    spec.slev_alpha = slev_alpha;
    const RealDataReport rep = real_data_eval(d, spec);

    std::ostringstream canon;
    canon << data.canonical() << "family=" << family << "\ntrain_count=" << train_count << "\nmethods=" << methods
          << "\nr_grid=" << r_grid << "\nreplications=" << replications << "\nr0=" << r0
          << "\nweight_floor=" << format_double(weight_floor) << "\nslev_alpha=" << format_double(slev_alpha) << '\n';
    std::ofstream file;
    std::ostream& os = open_or_stdout(out, file);
    os << provenance_line(fnv1a(canon.str()), seed) << '\n';
    os << "method,r,median_relative_mse,median_prediction_relative_se,failures\n";
    for (const auto& row : rep.rows) {
      os << to_string(row.method) << ',' << row.r << ',' << format_double(row.median_relative_mse) << ','
         << format_double(row.median_prediction_relative_se) << ',' << row.failures << '\n';
    }
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal subsampling for GLMs under a measurement constraint"};
  app.set_version_flag("--version", std::string(osumc::kToolVersion));
  app.require_subcommand(1);

  FitCommand fit;
  WeightsCommand weights;
  SimulateCommand simulate;
  BenchCommand bench;
  QQCommand qq;
  EvalRealCommand eval_real;
  fit.add_to(app);
  weights.add_to(app);
  simulate.add_to(app);
  bench.add_to(app);
  qq.add_to(app);
  eval_real.add_to(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << osumc::error_tag(osumc::ErrorCode::invalid_argument) << ": " << e.what() << '\n';
    return 1;
  }

  try {
    if (app.got_subcommand("fit")) return fit.run();
    if (app.got_subcommand("weights")) return weights.run();
    if (app.got_subcommand("simulate")) return simulate.run();
    if (app.got_subcommand("bench")) return bench.run();
    if (app.got_subcommand("qq")) return qq.run();
    if (app.got_subcommand("eval-real")) return eval_real.run();
  } catch (const osumc::NotConvergedError& e) {
    std::cerr << osumc::error_tag(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const osumc::Error& e) {
    std::cerr << osumc::error_tag(e.code()) << ": " << e.what() << '\n';
    return e.code() == osumc::ErrorCode::not_converged ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "E_INTERNAL: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
