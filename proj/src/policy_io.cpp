#include "wncs/policy_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace wncs::policy_io {

namespace {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  std::string next(const char* what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return line;
    }
    throw ConfigError(std::string("policy file: unexpected end of input while reading ") + what);
  }

  double number(const char* what) {
    const std::string tok = next(what);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw ConfigError("policy file line " + std::to_string(line_no_) + ": expected a number for " +
                        what + ", got '" + tok + "'");
    }
    return v;
  }

  long integer(const char* what) {
    const double v = number(what);
    if (v != static_cast<double>(static_cast<long>(v)) || v < 1) {
      throw ConfigError("policy file line " + std::to_string(line_no_) + ": expected a positive integer for " +
                        what);
    }
    return static_cast<long>(v);
  }

  bool exhausted() {
    std::string line;
    while (std::getline(in_, line)) {
      if (!line.empty() && line != "\r") return false;
    }
    return true;
  }

 private:
  std::istringstream in_;
  int line_no_ = 0;
};

}  // namespace

std::string serialize(const controller::GaussianPolicy& policy) {
  policy.validate();
  std::ostringstream out;
  out << kMagic << '\n' << kFormatVersion << '\n';
  out << policy.state_dim() << '\n' << policy.action_dim() << '\n';
  for (Eigen::Index i = 0; i < policy.action_dim(); ++i) out << format_number(policy.action_low[i]) << '\n';
  for (Eigen::Index i = 0; i < policy.action_dim(); ++i) out << format_number(policy.action_high[i]) << '\n';
  for (Eigen::Index r = 0; r < policy.mean_weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < policy.mean_weights.cols(); ++c) {
      out << format_number(policy.mean_weights(r, c)) << '\n';
    }
  }
  for (Eigen::Index i = 0; i < policy.action_dim(); ++i) out << format_number(policy.log_std[i]) << '\n';
  return out.str();
}

controller::GaussianPolicy parse(const std::string& text) {
  LineReader in(text);
  if (in.next("magic") != kMagic) throw ConfigError("policy file: bad magic string");
  const long version = in.integer("format version");
  if (version != kFormatVersion) {
    throw ConfigError("policy file: unsupported format version " + std::to_string(version));
  }
  const long d = in.integer("state dimension");
  const long n = in.integer("action dimension");
  controller::GaussianPolicy p;
  p.action_low.resize(n);
  p.action_high.resize(n);
  p.mean_weights.resize(n, d + 1);
  p.log_std.resize(n);
  for (long i = 0; i < n; ++i) p.action_low[i] = in.number("action_low");
  for (long i = 0; i < n; ++i) p.action_high[i] = in.number("action_high");
  for (long r = 0; r < n; ++r) {
    for (long c = 0; c <= d; ++c) p.mean_weights(r, c) = in.number("mean_weights");
  }
  for (long i = 0; i < n; ++i) p.log_std[i] = in.number("log_std");
  if (!in.exhausted()) throw ConfigError("policy file: trailing data after log_std");
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("policy file: ") + e.what());
  }
  return p;
}

void save(const controller::GaussianPolicy& policy, const std::filesystem::path& path) {
  const std::string text = serialize(policy);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write policy file " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

controller::GaussianPolicy load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("policy file not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace wncs::policy_io
