#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "osumc/config.hpp"

using namespace osumc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "osumc_test_io";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST(Csv, MissingResponseCellMasksRow) {
  const auto path = scratch("three.csv");
  write_text(path, "# a comment\nx1,x2,y\n1,2,1\n# skipped\n3,4,\n5,6,0\n");
  CsvSchema schema;
  schema.response_column = "y";
  const Dataset d = load_csv(path.string(), schema);
  EXPECT_EQ(d.n(), 3);
  EXPECT_EQ(d.p(), 2);
  EXPECT_EQ(d.responses.observed_count(), 2);
  EXPECT_FALSE(d.responses.is_available(1));
  EXPECT_EQ(d.X(1, 1), 4.0);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"x1", "x2"}));
}

TEST(Csv, MissingTokenAndFeatureSubset) {
  const auto path = scratch("token.csv");
  write_text(path, "a;b;c;resp\n1;2;3;NA\n4;5;6;1.5\n");
  CsvSchema schema;
  schema.response_column = "resp";
  schema.feature_columns = std::vector<std::string>{"c", "a"};
  schema.delimiter = ';';
  schema.missing_token = "NA";
  const Dataset d = load_csv(path.string(), schema);
  EXPECT_EQ(d.p(), 2);
  EXPECT_EQ(d.X(1, 0), 6.0);
  EXPECT_EQ(d.X(1, 1), 4.0);
  EXPECT_EQ(d.responses.observed_count(), 1);
}

TEST(Csv, ParseErrorCarriesLineNumber) {
  const auto path = scratch("bad.csv");
  write_text(path, "x1,y\n1,0\n2,oops\n");
  CsvSchema schema;
  schema.response_column = "y";
  try {
    load_csv(path.string(), schema);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
}

TEST(Csv, NonFiniteReportsCoordinates) {
  const auto path = scratch("inf.csv");
  write_text(path, "x1,x2,y\n1,2,0\n1,inf,1\n");
  CsvSchema schema;
  schema.response_column = "y";
  try {
    load_csv(path.string(), schema);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::non_finite_value);
    const std::string what = e.what();
    EXPECT_NE(what.find("3"), std::string::npos) << what;
    EXPECT_NE(what.find("x2"), std::string::npos) << what;
  }
}

TEST(Csv, MissingFileIsIoError) {
  EXPECT_EQ(code_of([] { load_csv("/nonexistent/osumc.csv"); }), ErrorCode::io_error);
}

TEST(Csv, GeneratedDatasetRoundTripsBitIdentically) {
  const Dataset d = generate_dataset(make_scenario(Design::T3, 300, 6, 17));
  const auto path = scratch("roundtrip.csv");
  write_csv(path.string(), d, "y", "# provenance");
  CsvSchema schema;
  schema.response_column = "y";
  const Dataset back = load_csv(path.string(), schema);
  EXPECT_EQ(back.X, d.X);
  EXPECT_EQ(back.responses.peek_values(), d.responses.peek_values());
  EXPECT_EQ(back.feature_names, default_feature_names(6));
}

TEST(Csv, UnobservedResponseWrittenAsEmptyCell) {
  const auto path = scratch("masked_in.csv");
  write_text(path, "x1,y\n1,\n2,3\n");
  CsvSchema schema;
  schema.response_column = "y";
  const Dataset d = load_csv(path.string(), schema);
  const auto out = scratch("masked_out.csv");
  write_csv(out.string(), d);
  const Dataset back = load_csv(out.string(), schema);
  EXPECT_EQ(back.responses.observed_count(), 1);
  EXPECT_FALSE(back.responses.is_available(0));
}

TEST(Numbers, FormatParseRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(*parse_double(format_double(v)), v);
  }
  EXPECT_FALSE(parse_double("1.5x").has_value());
  EXPECT_EQ(code_of([] { parse_int("12a", "n"); }), ErrorCode::parse_error);
  EXPECT_TRUE(parse_bool("yes", "b"));
  EXPECT_FALSE(parse_bool("0", "b"));
}

TEST(Config, ParsesCommentsAndOverrides) {
  RunConfig cfg = make_bench_config();
  cfg.parse_text("# experiment\ndesign = mzNormal\nn=2000  # trailing\n\nr_grid = 100, 200\n");
  cfg.apply_override("n=3000");
  EXPECT_EQ(cfg.get_or("n", ""), "3000");
  EXPECT_EQ(cfg.get_or("design", ""), "mzNormal");
  EXPECT_EQ(split_list(cfg.get_or("r_grid", "")), (std::vector<std::string>{"100", "200"}));
  EXPECT_FALSE(cfg.get("p").has_value());
}

TEST(Config, UnknownKeyIsNamed) {
  RunConfig cfg = make_bench_config();
  try {
    cfg.parse_text("design = GA\nreplicatons = 5\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_config_key);
    EXPECT_NE(std::string(e.what()).find("replicatons"), std::string::npos);
  }
  EXPECT_EQ(code_of([&] { cfg.apply_override("bogus=1"); }), ErrorCode::unknown_config_key);
  EXPECT_EQ(code_of([&] { cfg.apply_override("no_equals_sign"); }), ErrorCode::parse_error);
}

TEST(Config, HashIgnoresOutputDirAndParallelism) {
  RunConfig a = make_bench_config(), b = make_bench_config();
  a.parse_text("design=GA\nn=100\noutput_dir=/tmp/a\nparallelism=1\n");
  b.parse_text("parallelism=4\noutput_dir=/tmp/b\nn=100\ndesign=GA\n");
  EXPECT_EQ(results_hash(a), results_hash(b));
  b.set("n", "101");
  EXPECT_NE(results_hash(a), results_hash(b));
}

TEST(Config, JobValidation) {
  RunConfig cfg = make_bench_config();
  cfg.parse_text("design=GA\nfamily=logistic\n");
  EXPECT_EQ(code_of([&] { bench_job_from_config(cfg); }), ErrorCode::incompatible_scenario);

  RunConfig none = make_bench_config();
  EXPECT_EQ(code_of([&] { bench_job_from_config(none); }), ErrorCode::invalid_argument);

  RunConfig ok = make_bench_config();
  ok.parse_text("design=nzNormal\nn=1000\np=4\nmethods=osumc,unif\nr_grid=100\nreplications=3\n");
  const BenchJob job = bench_job_from_config(ok);
  EXPECT_EQ(job.spec.scenario.family, Family::logistic);
  EXPECT_EQ(job.spec.methods, (std::vector<Method>{Method::osumc, Method::uniform}));
  EXPECT_EQ(job.spec.replications, 3);
}

class BenchOutputs : public ::testing::Test {
 protected:
  static BenchJob job_in(const fs::path& dir) {
    RunConfig cfg = make_bench_config();
    cfg.parse_text(
        "design = mzNormal\nn = 3000\np = 4\nmethods = osumc, uniform, oracle_osumc\nr_grid = 150, 300\nr0 = 200\n"
        "replications = 6\nbase_seed = 9\nfixed_design = true\n");
    cfg.set("output_dir", dir.string());
    return bench_job_from_config(cfg);
  }
};

TEST_F(BenchOutputs, RecordsRecomputeAggregates) {
  const fs::path dir = scratch("bench_a");
  fs::remove_all(dir);
  const BenchJob job = job_in(dir);
  const ExperimentResult res = run_mse_experiment(job.spec);
  write_bench_outputs(job, res);

  const std::string records_text = read_text(dir / "records.csv");
  EXPECT_EQ(records_text.rfind(provenance_line(job.config_hash, 9), 0), 0u);
  for (const char* f : {"summary.csv", "long.csv", "beta0.csv", "qq_normalizer_r150.csv", "qq_normalizer_r300.csv"}) {
    EXPECT_EQ(read_text(dir / f).rfind("# osumc 0.1.0 config_hash=", 0), 0u) << f;
  }
  EXPECT_FALSE(fs::exists(dir / "timing.csv"));

  const auto rows = read_records_csv((dir / "records.csv").string());
  ASSERT_EQ(rows.size(), res.records.size());
  std::map<std::pair<std::string, Index>, std::vector<double>> by_cell;
  for (const auto& row : rows) {
    if (row.converged) by_cell[{row.method, row.r}].push_back(row.mse);
    EXPECT_EQ(row.time_ms, 0.0);
    EXPECT_EQ(row.beta.size(), 4);
  }
  for (const auto& s : res.summary) {
    const auto& errs = by_cell[{std::string(to_string(s.method)), s.r}];
    ASSERT_EQ(static_cast<int>(errs.size()), s.successes);
    double mean = 0.0;
    for (double e : errs) mean += e;
    mean /= static_cast<double>(errs.size());
    EXPECT_NEAR(mean, s.empirical_mse, 1e-12 * std::max(1.0, s.empirical_mse));
  }
  const MatrixXd b0 = load_matrix_csv((dir / "beta0.csv").string());
  EXPECT_EQ(VectorXd(b0.row(0).transpose()), res.beta0);
  EXPECT_EQ(load_matrix_csv((dir / "qq_normalizer_r300.csv").string()), res.oracle_normalizers.at(300));
}

TEST_F(BenchOutputs, TwoRunsAreByteIdentical) {
  const fs::path a = scratch("bench_b1"), b = scratch("bench_b2");
  fs::remove_all(a);
  fs::remove_all(b);
  const BenchJob ja = job_in(a), jb = job_in(b);
  write_bench_outputs(ja, run_mse_experiment(ja.spec));
  write_bench_outputs(jb, run_mse_experiment(jb.spec));
  for (const char* f : {"records.csv", "summary.csv", "long.csv", "beta0.csv", "qq_normalizer_r150.csv"}) {
    EXPECT_EQ(read_text(a / f), read_text(b / f)) << f;
  }
}
