#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "osumc/bench.hpp"
#include "osumc/datagen.hpp"
#include "osumc/error.hpp"
#include "osumc/io.hpp"

namespace osumc {

/// Keys accepted in a bench configuration file.
inline const std::set<std::string>& bench_config_keys() {
  static const std::set<std::string> keys{
      "design",       "family",       "n",           "p",
      "beta0",        "noise_sd",     "data",        "response_column",
      "methods",      "r_grid",       "r0",          "replications",
      "base_seed",    "parallelism",  "tol",         "max_iter",
      "weight_floor", "slev_alpha",   "fixed_design", "measurement_constraint",
      "record_timing", "output_dir",
  };
  return keys;
}

inline RunConfig make_bench_config() { return RunConfig(bench_config_keys()); }

/// Keys that do not influence any number written to the results, and are
/// therefore left out of the config hash.
inline bool affects_results(const std::string& key) { return key != "output_dir" && key != "parallelism"; }

inline std::uint64_t results_hash(const RunConfig& cfg) {
  std::string text;
  for (const auto& [k, v] : cfg.values()) {
    if (affects_results(k)) text += k + "=" + v + "\n";
  }
  return fnv1a(text);
}

struct BenchJob {
  ExperimentSpec spec;
  std::string output_dir = ".";
  bool record_timing = false;
  std::uint64_t config_hash = 0;
};

inline std::vector<Index> parse_index_list(std::string_view s, std::string_view what) {
  std::vector<Index> out;
  for (const auto& item : split_list(s)) out.push_back(static_cast<Index>(parse_int(item, what)));
  return out;
}

inline VectorXd parse_vector(std::string_view s, std::string_view what) {
  const auto items = split_list(s);
  VectorXd v(static_cast<Index>(items.size()));
  for (std::size_t j = 0; j < items.size(); ++j) v[static_cast<Index>(j)] = parse_real(items[j], what);
  return v;
}

inline BenchJob bench_job_from_config(const RunConfig& cfg) {
  BenchJob job;
  ExperimentSpec& spec = job.spec;
  job.config_hash = results_hash(cfg);
  job.output_dir = cfg.get_or("output_dir", ".");
  job.record_timing = parse_bool(cfg.get_or("record_timing", "false"), "record_timing");

  if (const auto path = cfg.get("data")) {
    const auto family = cfg.get("family");
    if (!family) throw Error(ErrorCode::invalid_argument, "config: 'family' is required together with 'data'");
    CsvSchema schema;
    schema.response_column = cfg.get_or("response_column", "y");
    auto data = std::make_shared<Dataset>(load_csv(*path, schema));
    spec.scenario.family = parse_family(*family);
    spec.scenario.n = data->n();
    spec.scenario.p = data->p();
    spec.fixed_data = std::move(data);
  } else {
    const auto design = cfg.get("design");
    if (!design) throw Error(ErrorCode::invalid_argument, "config: either 'design' or 'data' must be given");
    const Index n = static_cast<Index>(parse_int(cfg.get_or("n", "20000"), "n"));
    const Index p = static_cast<Index>(parse_int(cfg.get_or("p", "20"), "p"));
    spec.scenario = make_scenario(parse_design(*design), n, p, 0);
    if (const auto family = cfg.get("family"); family && parse_family(*family) != spec.scenario.family) {
      throw Error(ErrorCode::incompatible_scenario, "config: design " + *design + " is not paired with family " + *family);
    }
    if (const auto sd = cfg.get("noise_sd")) spec.scenario.noise_sd = parse_real(*sd, "noise_sd");
  }
  if (const auto b = cfg.get("beta0")) {
    spec.beta0 = parse_vector(*b, "beta0");
    if (!spec.fixed_data) spec.scenario.beta0 = *spec.beta0;
  }

  spec.methods.clear();
  for (const auto& m : split_list(cfg.get_or("methods", "osumc,uniform"))) spec.methods.push_back(parse_method(m));
  spec.r_grid = parse_index_list(cfg.get_or("r_grid", "200,500,1000,2000"), "r_grid");
  spec.r0 = static_cast<Index>(parse_int(cfg.get_or("r0", "500"), "r0"));
  spec.replications = static_cast<int>(parse_int(cfg.get_or("replications", "500"), "replications"));
  spec.base_seed = parse_uint(cfg.get_or("base_seed", "0"), "base_seed");
  spec.parallelism = static_cast<int>(parse_int(cfg.get_or("parallelism", "1"), "parallelism"));
  spec.solver.tol = parse_real(cfg.get_or("tol", "1e-8"), "tol");
  spec.solver.max_iter = static_cast<int>(parse_int(cfg.get_or("max_iter", "100"), "max_iter"));
  spec.weight_floor = parse_real(cfg.get_or("weight_floor", "0"), "weight_floor");
  spec.slev_alpha = parse_real(cfg.get_or("slev_alpha", "0.9"), "slev_alpha");
  spec.fixed_design = parse_bool(cfg.get_or("fixed_design", "false"), "fixed_design");
  spec.measurement_constraint = parse_bool(cfg.get_or("measurement_constraint", "true"), "measurement_constraint");
  if (!(spec.solver.tol > 0.0)) throw Error(ErrorCode::invalid_argument, "config: tol must be positive");
  if (spec.solver.max_iter < 1) throw Error(ErrorCode::invalid_argument, "config: max_iter must be >= 1");
  spec.validate();
  return job;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path, const std::string& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path.string() + "'");
  out << header << '\n';
  return out;
}

}  // namespace detail

/// Writes records.csv, summary.csv, long.csv and beta0.csv (plus timing.csv
/// and one normalizer file per r when available) into the job's output
/// directory. Returns the paths written.
inline std::vector<std::string> write_bench_outputs(const BenchJob& job, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir(job.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create output directory '" + dir.string() + "'");
  const std::string header = provenance_line(job.config_hash, result.base_seed);
  std::vector<std::string> written;

  {
    auto out = detail::open_output(dir / "records.csv", header);
    write_records_csv(out, result, job.record_timing);
    written.push_back((dir / "records.csv").string());
  }
  {
    auto out = detail::open_output(dir / "summary.csv", header);
    write_summary_csv(out, result, job.record_timing);
    written.push_back((dir / "summary.csv").string());
  }
  {
    auto out = detail::open_output(dir / "long.csv", header);
    write_long_csv(out, result, job.record_timing);
    written.push_back((dir / "long.csv").string());
  }
  {
    auto out = detail::open_output(dir / "beta0.csv", header);
    for (Index j = 0; j < result.beta0.size(); ++j) out << (j ? "," : "") << format_double(result.beta0[j]);
    out << '\n';
    written.push_back((dir / "beta0.csv").string());
  }
  if (job.record_timing) {
    auto out = detail::open_output(dir / "timing.csv", header);
    write_timing_csv(out, timing_table(result, job.spec.methods, job.spec.r_grid));
    written.push_back((dir / "timing.csv").string());
  }
  for (const auto& [r, m] : result.oracle_normalizers) {
    const fs::path path = dir / ("qq_normalizer_r" + std::to_string(r) + ".csv");
    write_matrix_csv(path.string(), m, header);
    written.push_back(path.string());
  }
  return written;
}

}  // namespace osumc
