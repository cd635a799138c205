#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "wncs/config.hpp"

using namespace wncs;
using config::ExperimentConfig;

namespace {

std::string error_of(const std::string& text) {
  try {
    config::parse_text(text, "test.conf");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("empty text gives the defaults") {
    const ExperimentConfig c = config::parse_text("");
    const ExperimentConfig d;
    CHECK(config::to_text(c) == config::to_text(d));
    CHECK(c.sim.M == 6);
    CHECK(c.sim.K == 1000);
    CHECK(c.sim.channel.gamma0 == doctest::Approx(100.0));
    CHECK(c.variants.size() == 5);
  }

  TEST_CASE("decibel keys store linear values") {
    const auto c = config::parse_text("gamma0_db = 10\npmax_dbm = 40\n");
    CHECK(c.sim.channel.gamma0 == doctest::Approx(10.0));
    CHECK(c.sim.channel.pmax == doctest::Approx(10000.0));
    CHECK_THROWS_AS(config::parse_text("pmax_dbm = 20\n"), ConfigError);
  }

  TEST_CASE("vector and list values") {
    const auto c = config::parse_text("eta = [0.2, 0.3]\nM_list = 6, 21\nvariants = [V1, Full]\nseeds = 3\n"
                                      "seed_base = 10\n");
    CHECK(c.sim.plant_options.eta == (Vector(2) << 0.2, 0.3).finished());
    CHECK(c.M_list == std::vector<std::size_t>{6, 21});
    REQUIRE(c.variants.size() == 2);
    CHECK(c.variants[1].name == "Full");
    CHECK(c.sim.seeds == std::vector<std::uint64_t>{10, 11, 12});
  }

  TEST_CASE("comments and blank lines") {
    const auto c = config::parse_text("# header\n\nK = 50   # trailing\n");
    CHECK(c.sim.K == 50);
  }

  TEST_CASE("unknown keys list the valid ones") {
    const std::string e = error_of("M = 6\nbogus = 1\n");
    CHECK(e.find("test.conf:2") != std::string::npos);
    CHECK(e.find("unknown key 'bogus'") != std::string::npos);
    CHECK(e.find("gamma0_db") != std::string::npos);
  }

  TEST_CASE("bad values name the line and key") {
    const std::string e = error_of("\n\nK = abc\n");
    CHECK(e.find("test.conf:3") != std::string::npos);
    CHECK(e.find("'K'") != std::string::npos);
    CHECK(!error_of("M = 0\n").empty());
    CHECK(!error_of("eta = [0.1]\n").empty());
    CHECK(!error_of("lyapunov_form = sideways\n").empty());
    CHECK(!error_of("variants = [V9]\n").empty());
    CHECK(!error_of("missing equals sign\n").empty());
  }

  TEST_CASE("overrides apply left to right") {
    ExperimentConfig c;
    config::apply_overrides(c, {"K=10", "V=5", "K=20"});
    CHECK(c.sim.K == 20);
    CHECK(c.sim.V == 5.0);
    CHECK_THROWS_AS(config::apply_overrides(c, {"nope=1"}), ConfigError);
    CHECK_THROWS_AS(config::apply_overrides(c, {"K"}), ConfigError);
  }

  TEST_CASE("text form round trips") {
    auto c = config::parse_text("alpha = 0.0031\nx0 = [-1.25, 0.5]\nlyapunov_form = discrete\n"
                                "classic_control = rl\ngpr_tune = false\n");
    const auto back = config::parse_text(config::to_text(c));
    CHECK(config::to_text(back) == config::to_text(c));
    CHECK(back.sim.alpha == 0.0031);
    CHECK(back.train.x0 == c.train.x0);
    CHECK(back.sim.lyapunov_form == mathkit::LyapunovForm::kDiscrete);
    CHECK(back.classic_control == config::ClassicControl::kRl);
    CHECK(!back.sim.tune_kernel);
  }

  TEST_CASE("every valid key appears in the text form") {
    const std::string text = config::to_text(ExperimentConfig{});
    for (const auto& key : config::valid_keys()) CHECK(text.find(key + " = ") != std::string::npos);
  }

  TEST_CASE("files") {
    const std::filesystem::path shipped = std::filesystem::path(WNCS_SOURCE_DIR) / "configs" / "default.conf";
    const auto c = config::parse_config(shipped);
    CHECK(config::to_text(c) == config::to_text(ExperimentConfig{}));
    CHECK(config::parse_config(shipped, {"K=7"}).sim.K == 7);
    CHECK_THROWS_AS(config::parse_config("/nonexistent/x.conf"), ConfigError);

    const auto desk = config::parse_config(std::filesystem::path(WNCS_SOURCE_DIR) / "configs" / "desk.conf");
    CHECK(desk.train.epochs == 20);
  }
}
