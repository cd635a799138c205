#include "wncs/results_csv.hpp"

#include <charconv>
#include <cstdio>
#include <limits>
#include <sstream>

#include "wncs/errors.hpp"

namespace wncs::csv {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Status strings are free text; commas and line breaks would break the row.
std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const char* field) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(std::string("csv: bad number in ") + field + ": '" + s + "'");
  }
  return v;
}

template <typename T>
T to_uint(const std::string& s, const char* field) {
  T v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(std::string("csv: bad integer in ") + field + ": '" + s + "'");
  }
  return v;
}

template <typename Row, typename Parse>
std::vector<Row> read_all(const std::string& text, const std::string& header, Parse parse) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw ConfigError("csv: unexpected header '" + line + "'");
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(parse(line));
  }
  return rows;
}

}  // namespace

const std::string& results_header() {
  static const std::string h =
      "variant,M,seed,objective,comm_cost,control_cost,stability_cost,controlling_cost,mean_aoi,"
      "mean_power,sched_success_rate,max_queue_over_K,status";
  return h;
}

const std::string& curve_header() {
  static const std::string h = "epoch,mean_return,std_return,variant";
  return h;
}

ResultRow to_row(const simulator::EpisodeResult& r) {
  ResultRow row;
  row.variant = r.variant;
  row.M = r.M;
  row.seed = r.seed;
  row.objective = r.objective;
  row.comm_cost = r.comm_cost;
  row.control_cost = r.control_cost;
  row.stability_cost = r.stability_cost;
  row.controlling_cost = r.controlling_cost;
  row.mean_aoi = r.mean_aoi;
  row.mean_power = r.mean_power;
  row.sched_success_rate = r.sched_success_rate;
  row.max_queue_over_K = r.max_queue_over_K;
  row.status = r.status;
  return row;
}

std::string format_row(const ResultRow& row) {
  std::string s = sanitize(row.variant) + "," + std::to_string(row.M) + "," + std::to_string(row.seed);
  for (double v : {row.objective, row.comm_cost, row.control_cost, row.stability_cost, row.controlling_cost,
                   row.mean_aoi, row.mean_power, row.sched_success_rate, row.max_queue_over_K}) {
    s += "," + num(v);
  }
  return s + "," + sanitize(row.status);
}

std::string format_curve_row(const CurveRow& row) {
  return std::to_string(row.epoch) + "," + num(row.mean_return) + "," + num(row.std_return) + "," +
         sanitize(row.variant);
}

ResultRow parse_row(const std::string& line) {
  const auto f = split(line);
  if (f.size() != 13) {
    throw ConfigError("csv: expected 13 fields, got " + std::to_string(f.size()) + " in '" + line + "'");
  }
  ResultRow r;
  r.variant = f[0];
  r.M = to_uint<std::size_t>(f[1], "M");
  r.seed = to_uint<std::uint64_t>(f[2], "seed");
  r.objective = to_double(f[3], "objective");
  r.comm_cost = to_double(f[4], "comm_cost");
  r.control_cost = to_double(f[5], "control_cost");
  r.stability_cost = to_double(f[6], "stability_cost");
  r.controlling_cost = to_double(f[7], "controlling_cost");
  r.mean_aoi = to_double(f[8], "mean_aoi");
  r.mean_power = to_double(f[9], "mean_power");
  r.sched_success_rate = to_double(f[10], "sched_success_rate");
  r.max_queue_over_K = to_double(f[11], "max_queue_over_K");
  r.status = f[12];
  return r;
}

CurveRow parse_curve_row(const std::string& line) {
  const auto f = split(line);
  if (f.size() != 4) {
    throw ConfigError("csv: expected 4 fields, got " + std::to_string(f.size()) + " in '" + line + "'");
  }
  CurveRow r;
  const std::string& e = f[0];
  auto [ptr, ec] = std::from_chars(e.data(), e.data() + e.size(), r.epoch);
  if (e.empty() || ec != std::errc() || ptr != e.data() + e.size()) {
    throw ConfigError("csv: bad integer in epoch: '" + e + "'");
  }
  r.mean_return = to_double(f[1], "mean_return");
  r.std_return = to_double(f[2], "std_return");
  r.variant = f[3];
  return r;
}

std::vector<ResultRow> read_results(const std::string& text) {
  return read_all<ResultRow>(text, results_header(), parse_row);
}

std::vector<CurveRow> read_curve(const std::string& text) {
  return read_all<CurveRow>(text, curve_header(), parse_curve_row);
}

std::vector<CurveRow> curve_rows(const std::vector<controller::CurvePoint>& curve, const std::string& variant) {
  std::vector<CurveRow> out;
  out.reserve(curve.size());
  for (const auto& p : curve) out.push_back({p.epoch, p.mean_return, p.std_return, variant});
  return out;
}

}  // namespace wncs::csv
