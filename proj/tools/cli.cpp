#include "cli.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "wncs/config.hpp"
#include "wncs/controller.hpp"
#include "wncs/errors.hpp"
#include "wncs/policy_io.hpp"
#include "wncs/results_csv.hpp"
#include "wncs/simulator.hpp"

namespace wncs::cli {

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDiverged = 2, kFailure = 3 };

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out = ".";
  int seeds = 0;
  int workers = 1;
  std::string policy;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Config file (key = value lines)");
  cmd->add_option("--set", c.sets, "Override KEY=VALUE, applied left to right")->allow_extra_args(false);
  cmd->add_option("--out", c.out, "Output directory (created if missing)");
  cmd->add_option("--seeds", c.seeds, "Number of seeds, counted up from seed_base")->check(CLI::PositiveNumber);
  cmd->add_option("--workers", c.workers, "Parallel episodes")->check(CLI::PositiveNumber);
  cmd->add_option("--policy", c.policy, "Policy file (default OUT/policy.txt)");
}

config::ExperimentConfig load(const Common& c) {
  config::ExperimentConfig cfg;
  if (!c.config.empty()) {
    cfg = config::parse_config(c.config, c.sets);
  } else {
    config::apply_overrides(cfg, c.sets);
  }
  if (c.seeds > 0) {
    const std::uint64_t base = cfg.sim.seeds.empty() ? 1 : cfg.sim.seeds.front();
    cfg.sim.seeds.clear();
    for (int i = 0; i < c.seeds; ++i) cfg.sim.seeds.push_back(base + static_cast<std::uint64_t>(i));
  }
  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

fs::path policy_path(const Common& c) {
  return c.policy.empty() ? fs::path(c.out) / "policy.txt" : fs::path(c.policy);
}

fs::path classic_path(const Common& c, const config::ExperimentConfig& cfg) {
  const fs::path p(cfg.classic_policy_path);
  return p.is_absolute() ? p : fs::path(c.out) / p;
}

void write_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string curve_text(const std::vector<csv::CurveRow>& rows) {
  std::string text = csv::curve_header() + "\n";
  for (const auto& r : rows) text += csv::format_curve_row(r) + "\n";
  return text;
}

int cmd_train(const Common& c) {
  const config::ExperimentConfig cfg = load(c);
  fs::create_directories(c.out);
  const plant::SystemModel model = cfg.sim.model();
  const fs::path curve_file = fs::path(c.out) / "learning_curve.csv";

  std::vector<csv::CurveRow> rows;
  controller::TrainConfig tail_cfg = cfg.train;
  tail_cfg.objective = controller::Objective::kTail;
  controller::TrainResult tail;
  try {
    tail = controller::train_policy(model, tail_cfg);
  } catch (const controller::TrainingDiverged& e) {
    write_atomically(curve_file, curve_text(csv::curve_rows(e.curve(), "TAIL")));
    std::cerr << "error: " << e.what() << " (curve written to " << curve_file.string() << ")\n";
    return kDiverged;
  }
  rows = csv::curve_rows(tail.curve, "TAIL");

  if (cfg.train_classic_ref || cfg.classic_control == config::ClassicControl::kRl) {
    controller::TrainConfig classic_cfg = cfg.train;
    classic_cfg.objective = controller::Objective::kClassic;
    try {
      const controller::TrainResult classic = controller::train_policy(model, classic_cfg);
      const auto extra = csv::curve_rows(classic.curve, "CLASSIC-REF");
      rows.insert(rows.end(), extra.begin(), extra.end());
      if (cfg.classic_control == config::ClassicControl::kRl) {
        policy_io::save(classic.policy, classic_path(c, cfg));
      }
    } catch (const controller::TrainingDiverged& e) {
      const auto extra = csv::curve_rows(e.curve(), "CLASSIC-REF");
      rows.insert(rows.end(), extra.begin(), extra.end());
      write_atomically(curve_file, curve_text(rows));
      std::cerr << "error: classic reference " << e.what() << "\n";
      return kDiverged;
    }
  }

  write_atomically(curve_file, curve_text(rows));
  policy_io::save(tail.policy, policy_path(c));
  std::printf("final mean return (TAIL): %.6g\n", tail.curve.back().mean_return);
  std::printf("policy: %s\ncurve: %s\n", policy_path(c).string().c_str(), curve_file.string().c_str());
  return kOk;
}

simulator::Policies load_policies(const Common& c, const config::ExperimentConfig& cfg) {
  simulator::Policies p;
  bool tail = false, classic = false;
  for (const auto& v : cfg.variants) {
    (v.control == simulator::ControlKind::kTail ? tail : classic) = true;
  }
  if (tail) p.tail = policy_io::load(policy_path(c));
  if (classic && cfg.classic_control == config::ClassicControl::kRl) {
    p.classic_rl = policy_io::load(classic_path(c, cfg));
  }
  return p;
}

struct Cell {
  simulator::VariantSpec variant;
  std::size_t M;
  std::uint64_t seed;
};

// Runs every cell on a pool of workers. `sink` is called under a lock, once
// per finished cell, in completion order.
template <typename Sink>
void run_cells(const std::vector<Cell>& cells, const config::ExperimentConfig& cfg,
               const simulator::Policies& policies, int workers, Sink sink) {
  std::atomic<std::size_t> next{0};
  std::mutex lock;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      {
        std::lock_guard<std::mutex> g(lock);
        if (failure) return;
      }
      try {
        simulator::SimConfig sim = cfg.sim;
        sim.M = cells[i].M;
        const auto result = simulator::run_episode(sim, cells[i].variant, cells[i].seed, policies);
        std::lock_guard<std::mutex> g(lock);
        sink(i, result);
      } catch (...) {
        std::lock_guard<std::mutex> g(lock);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(cells.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

void print_summary(const std::vector<csv::ResultRow>& rows, const std::vector<simulator::VariantSpec>& variants) {
  std::map<std::size_t, std::map<std::string, std::vector<const csv::ResultRow*>>> by_m;
  for (const auto& r : rows) by_m[r.M][r.variant].push_back(&r);

  std::printf("%-4s %-14s %5s %7s %14s %14s %14s %14s %10s\n", "M", "variant", "runs", "aborted",
              "objective", "ci95_half", "stability", "controlling", "mean_aoi");
  for (const auto& [m, per_variant] : by_m) {
    std::map<std::string, double> means;
    for (const auto& v : variants) {
      const auto it = per_variant.find(v.name);
      if (it == per_variant.end()) continue;
      std::vector<double> obj, stab, ctrl, aoi;
      int aborted = 0;
      for (const auto* r : it->second) {
        if (r->status != "ok") {
          ++aborted;
          continue;
        }
        obj.push_back(r->objective);
        stab.push_back(r->stability_cost);
        ctrl.push_back(r->controlling_cost);
        aoi.push_back(r->mean_aoi);
      }
      const auto so = simulator::summarize(obj);
      means[v.name] = so.mean;
      std::printf("%-4zu %-14s %5zu %7d %14.6g %14.6g %14.6g %14.6g %10.4g\n", m, v.name.c_str(),
                  it->second.size(), aborted, so.mean, so.ci_high - so.mean,
                  simulator::summarize(stab).mean, simulator::summarize(ctrl).mean,
                  simulator::summarize(aoi).mean);
    }
    if (means.count("Full") && means.count("V1") && means["V1"] != 0.0) {
      const double ratio = means["Full"] / means["V1"];
      std::printf("M=%zu Full/V1 objective ratio %.6g (reduction %.2f%%)\n", m, ratio, 100.0 * (1.0 - ratio));
    }
  }
}

int cmd_run(const Common& c) {
  const config::ExperimentConfig cfg = load(c);
  fs::create_directories(c.out);
  const simulator::Policies policies = load_policies(c, cfg);

  std::vector<Cell> cells;
  for (const auto& v : cfg.variants) {
    for (auto seed : cfg.sim.seeds) cells.push_back({v, cfg.sim.M, seed});
  }
  std::vector<csv::ResultRow> rows(cells.size());
  run_cells(cells, cfg, policies, c.workers,
            [&](std::size_t i, const simulator::EpisodeResult& r) { rows[i] = csv::to_row(r); });

  std::string text = csv::results_header() + "\n";
  for (const auto& r : rows) text += csv::format_row(r) + "\n";
  const fs::path out = fs::path(c.out) / "results.csv";
  write_atomically(out, text);
  print_summary(rows, cfg.variants);
  std::printf("results: %s\n", out.string().c_str());
  return kOk;
}

int cmd_sweep(const Common& c) {
  const config::ExperimentConfig cfg = load(c);
  fs::create_directories(c.out);
  const simulator::Policies policies = load_policies(c, cfg);
  const fs::path out = fs::path(c.out) / "results.csv";
  const std::set<CellKey> done = prepare_results_file(out);

  std::vector<Cell> cells;
  std::size_t skipped = 0;
  for (auto m : cfg.M_list) {
    for (const auto& v : cfg.variants) {
      for (auto seed : cfg.sim.seeds) {
        if (done.count({v.name, m, seed})) {
          ++skipped;
          continue;
        }
        cells.push_back({v, m, seed});
      }
    }
  }
  if (skipped > 0) std::fprintf(stderr, "resuming: %zu completed rows kept\n", skipped);

  std::FILE* file = std::fopen(out.string().c_str(), "ab");
  if (!file) throw Error("cannot append to " + out.string());
  std::size_t finished = 0;
  try {
    run_cells(cells, cfg, policies, c.workers, [&](std::size_t, const simulator::EpisodeResult& r) {
      const std::string line = csv::format_row(csv::to_row(r)) + "\n";
      std::fwrite(line.data(), 1, line.size(), file);
      std::fflush(file);
      ++finished;
      if (!r.ok()) std::fprintf(stderr, "%s M=%zu seed=%llu: %s\n", r.variant.c_str(), r.M,
                                static_cast<unsigned long long>(r.seed), r.status.c_str());
    });
  } catch (...) {
    std::fclose(file);
    throw;
  }
  std::fclose(file);

  std::ifstream in(out, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  print_summary(csv::read_results(buf.str()), cfg.variants);
  std::printf("results: %s (%zu new rows)\n", out.string().c_str(), finished);
  return kOk;
}

int cmd_validate(const Common& c) {
  const config::ExperimentConfig cfg = load(c);
  std::printf("%s", config::to_text(cfg).c_str());
  std::printf("# configuration is valid\n");
  return kOk;
}

}  // namespace

std::set<CellKey> prepare_results_file(const fs::path& path) {
  std::set<CellKey> done;
  std::string text;
  if (fs::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  if (text.empty()) {
    write_atomically(path, csv::results_header() + "\n");
    return done;
  }
  const auto last_newline = text.find_last_of('\n');
  const std::size_t clean = last_newline == std::string::npos ? 0 : last_newline + 1;
  if (clean != text.size()) {
    text.resize(clean);
    if (text.empty()) text = csv::results_header() + "\n";
    write_atomically(path, text);
  }
  for (const auto& r : csv::read_results(text)) done.insert({r.variant, r.M, r.seed});
  return done;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Wireless networked control simulator"};
  app.require_subcommand(1);
  Common common;
  auto* train = app.add_subcommand("train", "Train the TAIL policy and write the learning curve");
  auto* run_cmd = app.add_subcommand("run", "Run the configured variants at one M");
  auto* sweep = app.add_subcommand("sweep", "Run variants x M_list x seeds, appending to results.csv");
  auto* validate = app.add_subcommand("validate-config", "Resolve and print the configuration");
  for (auto* cmd : {train, run_cmd, sweep, validate}) add_common(cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (train->parsed()) return cmd_train(common);
    if (run_cmd->parsed()) return cmd_run(common);
    if (sweep->parsed()) return cmd_sweep(common);
    return cmd_validate(common);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"wncs"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace wncs::cli
