#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wncs/controller.hpp"
#include "wncs/simulator.hpp"

namespace wncs::config {

enum class ClassicControl { kLqr, kRl };

struct ExperimentConfig {
  simulator::SimConfig sim;
  controller::TrainConfig train;
  std::vector<simulator::VariantSpec> variants = simulator::standard_variants();
  std::vector<std::size_t> M_list = {6, 11, 16, 21};
  bool train_classic_ref = true;
  ClassicControl classic_control = ClassicControl::kLqr;
  std::string classic_policy_path = "policy_classic.txt";

  void validate() const;
};

/// Flat `key = value` text. '#' starts a comment, blank lines are ignored,
/// vectors are comma lists with optional brackets ("eta = [0.2, 0.2]").
/// Later assignments win. Unknown keys and malformed values throw
/// ConfigError naming the source line; the result is validated.
ExperimentConfig parse_text(const std::string& text, const std::string& source_name = "<config>");

// Applies KEY=VALUE overrides left to right on top of `base`.
void apply_overrides(ExperimentConfig& base, const std::vector<std::string>& overrides);

// Reads the file (must exist), applies the overrides, then validates.
ExperimentConfig parse_config(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides = {});

// Canonical text form of every key; parse_text(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& cfg);

std::vector<std::string> valid_keys();

}  // namespace wncs::config
