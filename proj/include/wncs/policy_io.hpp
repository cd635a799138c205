#pragma once

#include <filesystem>
#include <string>

#include "wncs/controller.hpp"

namespace wncs::policy_io {

inline constexpr const char* kMagic = "WNCS-GAUSSIAN-POLICY";
inline constexpr int kFormatVersion = 1;

/// Flat text form, one token per line:
///   magic, version, D, N, action_low[N], action_high[N],
///   mean_weights[N x (D+1)] row-major, log_std[N].
/// Numbers are printed with 17 significant digits so parse -> serialize
/// reproduces the text exactly.
std::string serialize(const controller::GaussianPolicy& policy);
controller::GaussianPolicy parse(const std::string& text);

void save(const controller::GaussianPolicy& policy, const std::filesystem::path& path);
controller::GaussianPolicy load(const std::filesystem::path& path);

}  // namespace wncs::policy_io
