#include "wncs/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "wncs/channel.hpp"

namespace wncs::config {

namespace {

// Raised by value parsers; the caller adds the source location.
struct BadValue {
  std::string message;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw BadValue{"expected a number, got '" + s + "'"};
  }
  return v;
}

long long parse_int(const std::string& raw) {
  const std::string s = trim(raw);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw BadValue{"expected an integer, got '" + s + "'"};
  }
  return v;
}

long long parse_positive_int(const std::string& raw) {
  const long long v = parse_int(raw);
  if (v < 1) throw BadValue{"expected a positive integer, got " + std::to_string(v)};
  return v;
}

bool parse_bool(const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw BadValue{"expected true or false, got '" + s + "'"};
}

std::vector<std::string> split_list(const std::string& raw) {
  std::string s = trim(raw);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw BadValue{"unterminated '[' in list"};
    s = s.substr(1, s.size() - 2);
  }
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream in(s);
  for (std::string tok; std::getline(in, tok, ',');) out.push_back(trim(tok));
  return out;
}

Vector parse_vector(const std::string& raw) {
  const auto parts = split_list(raw);
  if (parts.empty()) throw BadValue{"expected a nonempty list of numbers"};
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_double(parts[i]);
  return v;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(const Vector& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += fmt(v[i]);
  }
  return s + "]";
}

struct Key {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename Field>
Key number_key(std::string name, Field field) {
  return {std::move(name),
          [field](ExperimentConfig& c, const std::string& v) { field(c) = parse_double(v); },
          [field](const ExperimentConfig& c) {
            return fmt(field(const_cast<ExperimentConfig&>(c)));
          }};
}

template <typename Field>
Key positive_number_key(std::string name, Field field) {
  return {std::move(name),
          [field](ExperimentConfig& c, const std::string& v) {
            const double x = parse_double(v);
            if (!(x > 0.0)) throw BadValue{"expected a positive number, got " + trim(v)};
            field(c) = x;
          },
          [field](const ExperimentConfig& c) {
            return fmt(field(const_cast<ExperimentConfig&>(c)));
          }};
}

template <typename Field>
Key int_key(std::string name, Field field) {
  return {std::move(name),
          [field](ExperimentConfig& c, const std::string& v) {
            using T = std::remove_reference_t<decltype(field(c))>;
            field(c) = static_cast<T>(parse_positive_int(v));
          },
          [field](const ExperimentConfig& c) {
            return std::to_string(field(const_cast<ExperimentConfig&>(c)));
          }};
}

template <typename Field>
Key dbm_key(std::string name, Field field) {
  return {std::move(name),
          [field](ExperimentConfig& c, const std::string& v) {
            field(c) = channel::db_to_linear(parse_double(v));
          },
          [field](const ExperimentConfig& c) {
            return fmt(channel::linear_to_db(field(const_cast<ExperimentConfig&>(c))));
          }};
}

std::vector<Key> build_keys() {
  using C = ExperimentConfig;
  std::vector<Key> k;
  // Network size and horizon.
  k.push_back(int_key("M", [](C& c) -> std::size_t& { return c.sim.M; }));
  k.push_back(int_key("K", [](C& c) -> std::int64_t& { return c.sim.K; }));
  k.push_back({"seeds",
               [](C& c, const std::string& v) {
                 const auto n = parse_positive_int(v);
                 const std::uint64_t base = c.sim.seeds.empty() ? 1 : c.sim.seeds.front();
                 c.sim.seeds.clear();
                 for (long long i = 0; i < n; ++i) c.sim.seeds.push_back(base + static_cast<std::uint64_t>(i));
               },
               [](const C& c) { return std::to_string(c.sim.seeds.size()); }});
  k.push_back({"seed_base",
               [](C& c, const std::string& v) {
                 const auto base = static_cast<std::uint64_t>(parse_int(v));
                 const std::size_t n = std::max<std::size_t>(c.sim.seeds.size(), 1);
                 c.sim.seeds.clear();
                 for (std::size_t i = 0; i < n; ++i) c.sim.seeds.push_back(base + i);
               },
               [](const C& c) { return std::to_string(c.sim.seeds.empty() ? 1 : c.sim.seeds.front()); }});
  k.push_back({"M_list",
               [](C& c, const std::string& v) {
                 std::vector<std::size_t> out;
                 for (const auto& tok : split_list(v)) out.push_back(static_cast<std::size_t>(parse_positive_int(tok)));
                 if (out.empty()) throw BadValue{"M_list must not be empty"};
                 c.M_list = out;
               },
               [](const C& c) {
                 std::string s = "[";
                 for (std::size_t i = 0; i < c.M_list.size(); ++i) s += (i ? ", " : "") + std::to_string(c.M_list[i]);
                 return s + "]";
               }});
  k.push_back({"variants",
               [](C& c, const std::string& v) {
                 std::vector<simulator::VariantSpec> out;
                 for (const auto& tok : split_list(v)) {
                   try {
                     out.push_back(simulator::variant_by_name(tok));
                   } catch (const ConfigError& e) {
                     throw BadValue{e.what()};
                   }
                 }
                 if (out.empty()) throw BadValue{"variants must not be empty"};
                 c.variants = out;
               },
               [](const C& c) {
                 std::string s = "[";
                 for (std::size_t i = 0; i < c.variants.size(); ++i) s += (i ? ", " : "") + c.variants[i].name;
                 return s + "]";
               }});

  // Plant.
  k.push_back(number_key("alpha", [](C& c) -> double& { return c.sim.alpha; }));
  k.push_back(positive_number_key("b", [](C& c) -> double& { return c.sim.b; }));
  k.push_back(number_key("plant_noise_var", [](C& c) -> double& { return c.sim.plant_options.plant_noise_var; }));
  k.push_back(positive_number_key("action_weight", [](C& c) -> double& { return c.sim.plant_options.action_weight; }));
  k.push_back(number_key("zeta", [](C& c) -> double& { return c.sim.plant_options.zeta; }));
  k.push_back({"eta", [](C& c, const std::string& v) { c.sim.plant_options.eta = parse_vector(v); },
               [](const C& c) { return fmt(c.sim.plant_options.eta); }});
  k.push_back({"x0",
               [](C& c, const std::string& v) {
                 c.sim.x0 = parse_vector(v);
                 c.train.x0 = c.sim.x0;
               },
               [](const C& c) { return fmt(c.sim.x0); }});
  k.push_back({"tail_norm",
               [](C& c, const std::string& v) {
                 const std::string s = trim(v);
                 if (s == "inf") c.sim.plant_options.tail_norm = plant::TailNorm::kInfinity;
                 else if (s == "2") c.sim.plant_options.tail_norm = plant::TailNorm::kTwo;
                 else throw BadValue{"expected inf or 2, got '" + s + "'"};
               },
               [](const C& c) {
                 return std::string(c.sim.plant_options.tail_norm == plant::TailNorm::kTwo ? "2" : "inf");
               }});

  // Channel.
  k.push_back(positive_number_key("n0", [](C& c) -> double& { return c.sim.channel.n0; }));
  k.push_back(positive_number_key("omega", [](C& c) -> double& { return c.sim.channel.omega; }));
  k.push_back(dbm_key("gamma0_db", [](C& c) -> double& { return c.sim.channel.gamma0; }));
  k.push_back(dbm_key("pmax_dbm", [](C& c) -> double& { return c.sim.channel.pmax; }));
  k.push_back(positive_number_key("channel_var", [](C& c) -> double& { return c.sim.channel.sigma2_h; }));
  k.push_back(dbm_key("p_rr_dbm", [](C& c) -> double& { return c.sim.p_rr; }));

  // Scheduler.
  k.push_back(positive_number_key("V", [](C& c) -> double& { return c.sim.V; }));
  k.push_back(number_key("psi_beta", [](C& c) -> double& { return c.sim.psi_beta; }));
  k.push_back(number_key("psi_p", [](C& c) -> double& { return c.sim.psi_p; }));
  k.push_back({"lyapunov_form",
               [](C& c, const std::string& v) {
                 const std::string s = trim(v);
                 if (s == "continuous") c.sim.lyapunov_form = mathkit::LyapunovForm::kContinuous;
                 else if (s == "discrete") c.sim.lyapunov_form = mathkit::LyapunovForm::kDiscrete;
                 else throw BadValue{"expected continuous or discrete, got '" + s + "'"};
               },
               [](const C& c) {
                 return std::string(c.sim.lyapunov_form == mathkit::LyapunovForm::kContinuous ? "continuous"
                                                                                              : "discrete");
               }});

  // Predictor.
  k.push_back(int_key("window", [](C& c) -> std::size_t& { return c.sim.window; }));
  k.push_back(positive_number_key("gpr_h", [](C& c) -> double& { return c.sim.kernel.h; }));
  k.push_back(positive_number_key("gpr_l", [](C& c) -> double& { return c.sim.kernel.l; }));
  k.push_back(positive_number_key("gpr_s", [](C& c) -> double& { return c.sim.kernel.s; }));
  k.push_back(number_key("gpr_noise", [](C& c) -> double& { return c.sim.kernel.noise; }));
  k.push_back({"gpr_tune", [](C& c, const std::string& v) { c.sim.tune_kernel = parse_bool(v); },
               [](const C& c) { return std::string(c.sim.tune_kernel ? "true" : "false"); }});
  k.push_back(int_key("warmup_steps", [](C& c) -> int& { return c.sim.warmup_steps; }));

  // Action space, shared by training and the online loop.
  k.push_back({"action_low",
               [](C& c, const std::string& v) { c.sim.action_low = c.train.action_low = parse_double(v); },
               [](const C& c) { return fmt(c.sim.action_low); }});
  k.push_back({"action_high",
               [](C& c, const std::string& v) { c.sim.action_high = c.train.action_high = parse_double(v); },
               [](const C& c) { return fmt(c.sim.action_high); }});

  // Training.
  k.push_back(int_key("epochs", [](C& c) -> int& { return c.train.epochs; }));
  k.push_back(int_key("episodes_per_epoch", [](C& c) -> int& { return c.train.episodes_per_epoch; }));
  k.push_back(int_key("horizon", [](C& c) -> int& { return c.train.horizon; }));
  k.push_back(number_key("discount", [](C& c) -> double& { return c.train.discount; }));
  k.push_back(positive_number_key("learning_rate", [](C& c) -> double& { return c.train.learning_rate; }));
  k.push_back(positive_number_key("grad_clip", [](C& c) -> double& { return c.train.grad_clip; }));
  k.push_back(number_key("x0_jitter", [](C& c) -> double& { return c.train.x0_jitter; }));
  k.push_back(number_key("state_bound", [](C& c) -> double& { return c.train.state_bound; }));
  k.push_back(number_key("initial_log_std", [](C& c) -> double& { return c.train.initial_log_std; }));
  k.push_back({"train_seed",
               [](C& c, const std::string& v) { c.train.seed = static_cast<std::uint64_t>(parse_int(v)); },
               [](const C& c) { return std::to_string(c.train.seed); }});
  k.push_back({"train_classic_ref", [](C& c, const std::string& v) { c.train_classic_ref = parse_bool(v); },
               [](const C& c) { return std::string(c.train_classic_ref ? "true" : "false"); }});
  k.push_back({"classic_control",
               [](C& c, const std::string& v) {
                 const std::string s = trim(v);
                 if (s == "lqr") c.classic_control = ClassicControl::kLqr;
                 else if (s == "rl") c.classic_control = ClassicControl::kRl;
                 else throw BadValue{"expected lqr or rl, got '" + s + "'"};
               },
               [](const C& c) { return std::string(c.classic_control == ClassicControl::kRl ? "rl" : "lqr"); }});
  k.push_back({"classic_policy_path", [](C& c, const std::string& v) { c.classic_policy_path = trim(v); },
               [](const C& c) { return c.classic_policy_path; }});
  return k;
}

const std::vector<Key>& keys() {
  static const std::vector<Key> k = build_keys();
  return k;
}

std::string joined_keys() {
  std::string s;
  for (const auto& k : keys()) s += (s.empty() ? "" : ", ") + k.name;
  return s;
}

void assign(ExperimentConfig& cfg, const std::string& key, const std::string& value,
            const std::string& where) {
  const auto& all = keys();
  const auto it = std::find_if(all.begin(), all.end(), [&](const Key& k) { return k.name == key; });
  if (it == all.end()) {
    throw ConfigError(where + ": unknown key '" + key + "'; valid keys: " + joined_keys());
  }
  try {
    it->set(cfg, value);
  } catch (const BadValue& e) {
    throw ConfigError(where + ": bad value for '" + key + "': " + e.message);
  }
}

std::pair<std::string, std::string> split_assignment(const std::string& line, const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError(where + ": expected KEY=VALUE, got '" + trim(line) + "'");
  std::string key = trim(line.substr(0, eq));
  if (key.empty()) throw ConfigError(where + ": missing key before '='");
  return {key, trim(line.substr(eq + 1))};
}

}  // namespace

void ExperimentConfig::validate() const {
  sim.validate();
  train.validate();
  if (variants.empty()) throw ConfigError("no variants selected");
  if (M_list.empty()) throw ConfigError("M_list must not be empty");
  const auto model = sim.model();
  if (sim.plant_options.eta.size() != model.state_dim()) throw ConfigError("eta has the wrong dimension");
  if (train.x0.size() != model.state_dim()) throw ConfigError("training x0 has the wrong dimension");
}

namespace {

void validate_as_config(const ExperimentConfig& cfg, const std::string& source_name) {
  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(source_name + ": invalid configuration: " + e.what());
  }
}

ExperimentConfig parse_unvalidated(const std::string& text, const std::string& source_name) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    const auto [key, value] = split_assignment(line, where);
    assign(cfg, key, value, where);
  }
  return cfg;
}

}  // namespace

ExperimentConfig parse_text(const std::string& text, const std::string& source_name) {
  ExperimentConfig cfg = parse_unvalidated(text, source_name);
  validate_as_config(cfg, source_name);
  return cfg;
}

void apply_overrides(ExperimentConfig& base, const std::vector<std::string>& overrides) {
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    const std::string where = "override #" + std::to_string(i + 1) + " ('" + overrides[i] + "')";
    const auto [key, value] = split_assignment(overrides[i], where);
    assign(base, key, value, where);
  }
}

ExperimentConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg = parse_unvalidated(buf.str(), path.string());
  apply_overrides(cfg, overrides);
  validate_as_config(cfg, path.string());
  return cfg;
}

std::string to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

std::vector<std::string> valid_keys() {
  std::vector<std::string> out;
  for (const auto& k : keys()) out.push_back(k.name);
  return out;
}

}  // namespace wncs::config
