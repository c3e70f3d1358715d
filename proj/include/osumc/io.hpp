#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "osumc/bench.hpp"
#include "osumc/error.hpp"
#include "osumc/glm.hpp"

namespace osumc {

inline constexpr std::string_view kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Text primitives.
// ---------------------------------------------------------------------------

/// Shortest round-trip-safe text: 17 significant digits.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::int64_t parse_int(std::string_view s, std::string_view what) {
  s = trim(s);
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::parse_error, std::string(what) + ": '" + std::string(s) + "' is not an integer");
  }
  return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::string_view what) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::parse_error, std::string(what) + ": '" + std::string(s) + "' is not a nonnegative integer");
  }
  return v;
}

inline double parse_real(std::string_view s, std::string_view what) {
  const auto v = parse_double(s);
  if (!v) throw Error(ErrorCode::parse_error, std::string(what) + ": '" + std::string(trim(s)) + "' is not a number");
  return *v;
}

inline bool parse_bool(std::string_view s, std::string_view what) {
  s = trim(s);
  if (s == "1" || s == "true" || s == "on" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "off" || s == "no") return false;
  throw Error(ErrorCode::parse_error, std::string(what) + ": '" + std::string(s) + "' is not a boolean");
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// First line of every file the tool writes.
inline std::string provenance_line(std::uint64_t config_hash, std::uint64_t base_seed) {
  return "# osumc " + std::string(kToolVersion) + " config_hash=" + hex64(config_hash) + " base_seed=" + std::to_string(base_seed);
}

// ---------------------------------------------------------------------------
// Dataset CSV.
// ---------------------------------------------------------------------------

struct CsvSchema {
  std::optional<std::string> response_column;
  std::optional<std::vector<std::string>> feature_columns;  // nullopt: every other column
  char delimiter = ',';
  bool has_header = true;
  std::string missing_token;  // empty field by default
};

namespace detail {

inline std::vector<std::string> read_data_lines(const std::string& path, std::vector<std::size_t>& line_numbers) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    lines.push_back(line);
    line_numbers.push_back(number);
  }
  return lines;
}

}  // namespace detail

/// Reads a delimited numeric table. Empty (or `missing_token`) cells are
/// allowed only in the response column and become unobserved responses.
inline Dataset load_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::vector<std::size_t> numbers;
  const std::vector<std::string> lines = detail::read_data_lines(path, numbers);
  if (lines.empty()) throw Error(ErrorCode::parse_error, path + ": no data");

  std::vector<std::string> header;
  std::size_t first_row = 0;
  const std::size_t width = split(lines.front(), schema.delimiter).size();
  if (schema.has_header) {
    for (auto f : split(lines.front(), schema.delimiter)) header.emplace_back(trim(f));
    first_row = 1;
  } else {
    for (std::size_t j = 0; j < width; ++j) header.push_back("c" + std::to_string(j + 1));
  }

  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::parse_error, path + ": column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };

  std::optional<std::size_t> response_col;
  if (schema.response_column) response_col = column_of(*schema.response_column);
  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns) {
    for (const auto& name : *schema.feature_columns) feature_cols.push_back(column_of(name));
  } else {
    for (std::size_t j = 0; j < width; ++j) {
      if (!response_col || j != *response_col) feature_cols.push_back(j);
    }
  }
  if (feature_cols.empty()) throw Error(ErrorCode::parse_error, path + ": no feature columns");

  const Index n = static_cast<Index>(lines.size() - first_row);
  const Index p = static_cast<Index>(feature_cols.size());
  if (n < 1) throw Error(ErrorCode::parse_error, path + ": header but no rows");
  MatrixXd X(n, p);
  VectorXd y = VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> observed(static_cast<std::size_t>(n), false);

  auto is_missing = [&](std::string_view cell) {
    const auto t = trim(cell);
    return t.empty() || (!schema.missing_token.empty() && t == schema.missing_token);
  };

  for (std::size_t li = first_row; li < lines.size(); ++li) {
    const auto cells = split(lines[li], schema.delimiter);
    const std::size_t line_no = numbers[li];
    if (cells.size() != width) {
      throw Error(ErrorCode::parse_error, path + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                                              " fields, found " + std::to_string(cells.size()));
    }
    const Index i = static_cast<Index>(li - first_row);
    for (Index j = 0; j < p; ++j) {
      const std::size_t c = feature_cols[static_cast<std::size_t>(j)];
      const auto v = parse_double(cells[c]);
      if (!v) {
        throw Error(ErrorCode::parse_error, path + ":" + std::to_string(line_no) + ": cannot parse '" +
                                                std::string(trim(cells[c])) + "' in column '" + header[c] + "'");
      }
      if (!std::isfinite(*v)) {
        throw Error(ErrorCode::non_finite_value, path + ": non-finite value at line " + std::to_string(line_no) + ", column '" +
                                                     header[c] + "'");
      }
      X(i, j) = *v;
    }
    if (response_col) {
      const auto cell = cells[*response_col];
      if (is_missing(cell)) continue;
      const auto v = parse_double(cell);
      if (!v) {
        throw Error(ErrorCode::parse_error, path + ":" + std::to_string(line_no) + ": cannot parse response '" +
                                                std::string(trim(cell)) + "'");
      }
      if (!std::isfinite(*v)) {
        throw Error(ErrorCode::non_finite_value, path + ": non-finite response at line " + std::to_string(line_no));
      }
      y[i] = *v;
      observed[static_cast<std::size_t>(i)] = true;
    }
  }

  std::vector<std::string> names;
  for (std::size_t c : feature_cols) names.push_back(header[c]);
  const bool all_observed = std::all_of(observed.begin(), observed.end(), [](bool b) { return b; });
  ResponseStore store = all_observed ? ResponseStore::full(std::move(y)) : ResponseStore::masked(std::move(y), std::move(observed));
  return make_dataset(std::move(X), std::move(store), std::move(names));
}

/// Writes features then the response column; unobserved responses are empty
/// cells. Does not touch the measurement ledger.
inline void write_csv(const std::string& path, const Dataset& data, const std::string& response_name = "y",
                      const std::string& comment = {}) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
  if (!comment.empty()) out << comment << '\n';
  const auto names = data.feature_names.empty() ? default_feature_names(data.p()) : data.feature_names;
  for (const auto& name : names) out << name << ',';
  out << response_name << '\n';
  const VectorXd& y = data.responses.peek_values();
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.p(); ++j) out << format_double(data.X(i, j)) << ',';
    if (data.responses.is_available(i)) out << format_double(y[i]);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::io_error, "failed writing '" + path + "'");
}

inline MatrixXd load_matrix_csv(const std::string& path) {
  std::vector<std::size_t> numbers;
  const auto lines = detail::read_data_lines(path, numbers);
  if (lines.empty()) throw Error(ErrorCode::parse_error, path + ": no data");
  const std::size_t width = split(lines.front(), ',').size();
  MatrixXd m(static_cast<Index>(lines.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto cells = split(lines[i], ',');
    if (cells.size() != width) throw Error(ErrorCode::parse_error, path + ":" + std::to_string(numbers[i]) + ": ragged row");
    for (std::size_t j = 0; j < width; ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = parse_real(cells[j], path + ":" + std::to_string(numbers[i]));
    }
  }
  return m;
}

inline void write_matrix_csv(const std::string& path, const MatrixXd& m, const std::string& comment = {}) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
  if (!comment.empty()) out << comment << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

inline void write_weights_csv(const std::string& path, const SamplingWeights& w, const std::string& comment = {}) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
  if (!comment.empty()) out << comment << '\n';
  out << "# strategy=" << to_string(w.strategy);
  for (const auto& [k, v] : w.params) out << ' ' << k << '=' << format_double(v);
  out << "\nindex,pi\n";
  for (Index i = 0; i < w.pi.size(); ++i) out << i << ',' << format_double(w.pi[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Flat key = value configuration.
// ---------------------------------------------------------------------------

/// Parsed `key = value` lines; `#` starts a comment. Keys outside `allowed`
/// are rejected by name.
class RunConfig {
 public:
  RunConfig() = default;
  explicit RunConfig(std::set<std::string> allowed) : allowed_(std::move(allowed)) {}

  void parse_text(std::string_view text, std::string_view origin = "config") {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto end = text.find('\n', start);
      std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
      ++line_no;
      start = end == std::string_view::npos ? text.size() + 1 : end + 1;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw Error(ErrorCode::parse_error, std::string(origin) + ":" + std::to_string(line_no) + ": expected 'key = value'");
      }
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  void parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    parse_text(ss.str(), path);
  }

  /// `key=value` from the command line; overrides file values.
  void apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::parse_error, "override '" + std::string(assignment) + "' lacks '='");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  void set(std::string_view key, std::string_view value) {
    const std::string k(key);
    if (!allowed_.empty() && !allowed_.count(k)) throw Error(ErrorCode::unknown_config_key, "unknown config key '" + k + "'");
    values_[k] = std::string(value);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<std::string> get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string get_or(const std::string& key, std::string fallback) const { return get(key).value_or(std::move(fallback)); }

  /// Canonical sorted text; the config hash covers exactly this.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

  std::uint64_t hash() const { return fnv1a(canonical()); }

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::set<std::string> allowed_;
  std::map<std::string, std::string> values_;
};

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  for (auto part : split(s, ',')) {
    const auto t = trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment outputs.
// ---------------------------------------------------------------------------

/// Per-replication records. Leading columns are the stable schema
/// (method, r, replication, seed, mse, time_ms, responses_measured,
/// converged); weights_phase_accesses and beta_1..beta_p follow.
/// `time_ms` is written as 0 unless `include_timing`, so that repeated runs
/// produce identical bytes.
inline void write_records_csv(std::ostream& out, const ExperimentResult& result, bool include_timing) {
  const Index p = result.beta0.size();
  out << "method,r,replication,seed,mse,time_ms,responses_measured,converged,weights_phase_accesses";
  for (Index j = 0; j < p; ++j) out << ",beta_" << (j + 1);
  out << '\n';
  for (const auto& rec : result.records) {
    out << to_string(rec.method) << ',' << rec.r << ',' << rec.replication << ',' << rec.seed << ','
        << format_double(rec.sq_error) << ',' << format_double(include_timing ? rec.time_ms : 0.0) << ','
        << rec.responses_measured << ',' << (rec.converged ? 1 : 0) << ',' << rec.weights_phase_accesses;
    for (Index j = 0; j < p; ++j) {
      out << ',' << (rec.beta_hat.size() == p ? format_double(rec.beta_hat[j]) : std::string("nan"));
    }
    out << '\n';
  }
}

struct RecordRow {
  std::string method;
  Index r = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  double time_ms = 0.0;
  Index responses_measured = 0;
  bool converged = false;
  Index weights_phase_accesses = 0;
  VectorXd beta;
};

inline std::vector<RecordRow> read_records_csv(const std::string& path) {
  std::vector<std::size_t> numbers;
  const auto lines = detail::read_data_lines(path, numbers);
  if (lines.empty()) throw Error(ErrorCode::parse_error, path + ": no records");
  const auto header = split(lines.front(), ',');
  if (header.size() < 9 || trim(header[0]) != "method" || trim(header[4]) != "mse") {
    throw Error(ErrorCode::parse_error, path + ": not a records file");
  }
  const std::size_t p = header.size() - 9;
  std::vector<RecordRow> rows;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto c = split(lines[li], ',');
    const std::string where = path + ":" + std::to_string(numbers[li]);
    if (c.size() != header.size()) throw Error(ErrorCode::parse_error, where + ": wrong field count");
    RecordRow row;
    row.method = std::string(trim(c[0]));
    row.r = parse_int(c[1], where);
    row.replication = static_cast<int>(parse_int(c[2], where));
    row.seed = parse_uint(c[3], where);
    row.mse = parse_real(c[4], where);
    row.time_ms = parse_real(c[5], where);
    row.responses_measured = parse_int(c[6], where);
    row.converged = parse_int(c[7], where) != 0;
    row.weights_phase_accesses = parse_int(c[8], where);
    row.beta.resize(static_cast<Index>(p));
    for (std::size_t j = 0; j < p; ++j) row.beta[static_cast<Index>(j)] = parse_real(c[9 + j], where);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_summary_csv(std::ostream& out, const ExperimentResult& result, bool include_timing) {
  out << "method,r,empirical_mse,mse_stderr,median_time_ms,successes,failures\n";
  for (const auto& s : result.summary) {
    out << to_string(s.method) << ',' << s.r << ',' << format_double(s.empirical_mse) << ',' << format_double(s.mse_stderr)
        << ',' << format_double(include_timing ? s.median_time_ms : 0.0) << ',' << s.successes << ',' << s.failures << '\n';
  }
}

/// Plot-ready long format: (method, r, metric, value).
inline void write_long_csv(std::ostream& out, const ExperimentResult& result, bool include_timing) {
  out << "method,r,metric,value\n";
  for (const auto& s : result.summary) {
    out << to_string(s.method) << ',' << s.r << ",mse," << format_double(s.empirical_mse) << '\n';
    out << to_string(s.method) << ',' << s.r << ",mse_stderr," << format_double(s.mse_stderr) << '\n';
    if (include_timing) out << to_string(s.method) << ',' << s.r << ",median_time_ms," << format_double(s.median_time_ms) << '\n';
    out << to_string(s.method) << ',' << s.r << ",failures," << s.failures << '\n';
  }
}

inline void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows) {
  out << "method,r,median_total_ms,median_pilot_ms,median_weights_ms,median_sample_ms,median_solve_ms\n";
  for (const auto& t : rows) {
    out << to_string(t.method) << ',' << t.r << ',' << format_double(t.median_total_ms) << ',' << format_double(t.median_pilot_ms)
        << ',' << format_double(t.median_weights_ms) << ',' << format_double(t.median_sample_ms) << ','
        << format_double(t.median_solve_ms) << '\n';
  }
}

}  // namespace osumc
