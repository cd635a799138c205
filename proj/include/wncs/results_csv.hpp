#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wncs/controller.hpp"
#include "wncs/simulator.hpp"

namespace wncs::csv {

// One results.csv row.
struct ResultRow {
  std::string variant;
  std::size_t M = 0;
  std::uint64_t seed = 0;
  double objective = 0.0;
  double comm_cost = 0.0;
  double control_cost = 0.0;
  double stability_cost = 0.0;
  double controlling_cost = 0.0;
  double mean_aoi = 0.0;
  double mean_power = 0.0;
  double sched_success_rate = 0.0;
  double max_queue_over_K = 0.0;
  std::string status = "ok";
};

struct CurveRow {
  int epoch = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  std::string variant;  // TAIL or CLASSIC-REF
};

const std::string& results_header();
const std::string& curve_header();

ResultRow to_row(const simulator::EpisodeResult& r);

// Lines without a trailing newline. Numbers use %.17g so they parse back exactly.
std::string format_row(const ResultRow& row);
std::string format_curve_row(const CurveRow& row);

// Throw ConfigError on malformed input.
ResultRow parse_row(const std::string& line);
CurveRow parse_curve_row(const std::string& line);

// Whole-file readers; the header line is required and checked.
std::vector<ResultRow> read_results(const std::string& text);
std::vector<CurveRow> read_curve(const std::string& text);

std::vector<CurveRow> curve_rows(const std::vector<controller::CurvePoint>& curve, const std::string& variant);

}  // namespace wncs::csv
