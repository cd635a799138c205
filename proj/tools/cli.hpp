#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace wncs::cli {

// Parses argv and runs one command. Returns the process exit status.
int run(int argc, const char* const* argv);

// Convenience for tests: argv[0] is supplied.
int run(const std::vector<std::string>& args);

using CellKey = std::tuple<std::string, std::size_t, std::uint64_t>;  // variant, M, seed

/// Reads the completed (variant, M, seed) rows of an existing results file.
/// A trailing partial line left by an interrupted writer is cut off so
/// appends resume on a clean row boundary. A missing or empty file yields
/// an empty set and gets a header.
std::set<CellKey> prepare_results_file(const std::filesystem::path& path);

}  // namespace wncs::cli
