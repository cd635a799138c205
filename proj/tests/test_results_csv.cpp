#include <doctest.h>

#include <cmath>
#include <limits>

#include "wncs/results_csv.hpp"

using namespace wncs;

TEST_SUITE("results_csv") {
  TEST_CASE("headers") {
    CHECK(csv::results_header() ==
          "variant,M,seed,objective,comm_cost,control_cost,stability_cost,controlling_cost,mean_aoi,"
          "mean_power,sched_success_rate,max_queue_over_K,status");
    CHECK(csv::curve_header() == "epoch,mean_return,std_return,variant");
  }

  TEST_CASE("result rows round trip exactly") {
    csv::ResultRow row;
    row.variant = "Full";
    row.M = 21;
    row.seed = 18446744073709551615ull;
    row.objective = 1.0 / 3.0;
    row.comm_cost = 4.9;
    row.control_cost = 1e300;
    row.stability_cost = 1e-300;
    row.controlling_cost = 0.0;
    row.mean_aoi = 130.25;
    row.mean_power = 660.69344800759643;
    row.sched_success_rate = 0.1;
    row.max_queue_over_K = 0.99;
    const auto back = csv::parse_row(csv::format_row(row));
    CHECK(csv::format_row(back) == csv::format_row(row));
    CHECK(back.seed == row.seed);
    CHECK(back.objective == row.objective);
    CHECK(back.status == "ok");
  }

  TEST_CASE("status text is sanitised and non-finite numbers survive") {
    csv::ResultRow row;
    row.variant = "V1";
    row.objective = std::numeric_limits<double>::quiet_NaN();
    row.comm_cost = std::numeric_limits<double>::infinity();
    row.status = "aborted: bad, very bad\nstate";
    const std::string line = csv::format_row(row);
    CHECK(line.find('\n') == std::string::npos);
    const auto back = csv::parse_row(line);
    CHECK(std::isnan(back.objective));
    CHECK(std::isinf(back.comm_cost));
    CHECK(back.status == "aborted: bad; very bad;state");
  }

  TEST_CASE("curve rows round trip") {
    const auto rows = csv::curve_rows({{1, -3061.5, 20.25}, {2, -27.4, 1.5}}, "TAIL");
    std::string text = csv::curve_header() + "\n";
    for (const auto& r : rows) text += csv::format_curve_row(r) + "\n";
    const auto back = csv::read_curve(text);
    REQUIRE(back.size() == 2);
    CHECK(back[1].epoch == 2);
    CHECK(back[1].mean_return == -27.4);
    CHECK(back[0].variant == "TAIL");
  }

  TEST_CASE("malformed input") {
    CHECK_THROWS_AS(csv::parse_row("Full,6,1,2"), ConfigError);
    CHECK_THROWS_AS(csv::parse_row("Full,six,1,0,0,0,0,0,0,0,0,0,ok"), ConfigError);
    CHECK_THROWS_AS(csv::read_results("wrong,header\n"), ConfigError);
    CHECK(csv::read_results(csv::results_header() + "\n").empty());
    CHECK_THROWS_AS(csv::parse_curve_row("1,2"), ConfigError);
  }
}
