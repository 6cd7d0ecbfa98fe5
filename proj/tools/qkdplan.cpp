#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qkdplan/cli_commands.hpp"

namespace {

using namespace qkdplan;
using nlohmann::json;

struct Args {
  std::string config_path;
  std::vector<double> distances;
  std::vector<std::int64_t> m_F;
  std::optional<std::int64_t> N;
  std::vector<std::string> strategies{"fraction"};
  double g = 1.0 / 3.0;
  std::string p_extra;
  std::uint64_t seed = 1;
  int iterations = 0;
  std::string out;
  bool emit_keys = false;
  bool wall_time = false;
  unsigned threads = 0;
};

Config load(const Args& a) { return a.config_path.empty() ? Config{} : load_config(a.config_path); }

std::optional<double> parse_p_extra(const std::string& s) {
  if (s.empty() || s == "opt") return std::nullopt;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("--p-extra expects a number or 'opt'");
  return v;
}

std::vector<StrategyKind> kinds(const Args& a) {
  std::vector<StrategyKind> out;
  for (const auto& s : a.strategies) out.push_back(parse_strategy_kind(s));
  return out;
}

double single_distance(const Args& a) {
  if (a.distances.size() != 1) throw std::invalid_argument("exactly one --distance is required");
  return a.distances.front();
}

std::optional<std::int64_t> single_mf(const Args& a) {
  if (a.m_F.empty()) return std::nullopt;
  if (a.m_F.size() != 1) throw std::invalid_argument("only one --mf is accepted here");
  return a.m_F.front();
}

void emit_json(const json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << '\n';
}

template <class Writer>
void emit_csv(const std::string& path, Writer&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  write(f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pulse budgeting and simulation for variable-length BB84"};
  app.require_subcommand(1);
  Args a;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", a.config_path, "JSON file with link and security parameters");
    sub->add_option("-d,--distance", a.distances, "Fiber length in km (repeatable for sweeps)")->required();
    sub->add_option("--out", a.out, "Output file (default: stdout)");
  };

  auto* link_info = app.add_subcommand("link-info", "Derived channel quantities and limit distance");
  common(link_info);

  auto add_strategy = [&](CLI::App* sub) {
    sub->add_option("--strategy", a.strategies, "fraction, count or sqrt")
        ->check(CLI::IsMember({"fraction", "count", "sqrt"}));
    sub->add_option("--g", a.g, "Estimation fraction for the fraction strategy");
    sub->add_option("--p-extra", a.p_extra, "Artificial noise: a value or 'opt'");
  };

  auto* plan_cmd = app.add_subcommand("plan", "Pulses needed for a target output length");
  common(plan_cmd);
  add_strategy(plan_cmd);
  plan_cmd->add_option("--mf", a.m_F, "Target output length in bits")->required();

  auto* plan_sweep = app.add_subcommand("plan-sweep", "Planner CSV over distances and targets");
  common(plan_sweep);
  add_strategy(plan_sweep);
  plan_sweep->add_option("--mf", a.m_F, "Target output length (repeatable)")->required();

  auto run_opts = [&](CLI::App* sub) {
    add_strategy(sub);
    auto* mf = sub->add_option("--mf", a.m_F, "Target output length; pulses from the planner");
    auto* n = sub->add_option("--n", a.N, "Fixed pulse count");
    mf->excludes(n);
    sub->add_option("--seed", a.seed, "Base random seed");
  };

  auto* run_cmd = app.add_subcommand("run", "Simulate one protocol run");
  common(run_cmd);
  run_opts(run_cmd);
  run_cmd->add_flag("--emit-keys", a.emit_keys, "Always include the final key");
  run_cmd->add_flag("--wall-time", a.wall_time, "Record post-processing wall time");

  auto* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo sweep over distances");
  common(sweep_cmd);
  run_opts(sweep_cmd);
  sweep_cmd->add_option("--iterations", a.iterations, "Runs per point (default 20 with --mf, 50 with --n)");
  sweep_cmd->add_option("--threads", a.threads, "Worker threads (default: hardware concurrency)");

  CLI11_PARSE(app, argc, argv);

  try {
    const Config cfg = load(a);
    if (*link_info) {
      emit_json(cmd_link_info(cfg, single_distance(a)), a.out);
    } else if (*plan_cmd) {
      PlanRequest req;
      req.d = single_distance(a);
      req.m_F = *single_mf(a);
      req.kind = kinds(a).at(0);
      req.g = a.g;
      req.p_extra = parse_p_extra(a.p_extra);
      emit_json(cmd_plan(cfg, req), a.out);
    } else if (*plan_sweep) {
      PlanSweepSpec spec;
      spec.d_values = a.distances;
      spec.m_F_values = a.m_F;
      spec.strategies = kinds(a);
      spec.g = a.g;
      spec.p_extra = parse_p_extra(a.p_extra);
      emit_csv(a.out, [&](std::ostream& os) { write_plan_sweep_csv(os, cfg, spec); });
    } else if (*run_cmd) {
      RunRequest req;
      req.d = single_distance(a);
      req.m_F = single_mf(a);
      req.N = a.N;
      req.kind = kinds(a).at(0);
      req.g = a.g;
      req.p_extra = parse_p_extra(a.p_extra);
      if (req.N && a.p_extra == "opt") throw std::invalid_argument("--p-extra opt needs --mf");
      req.seed = a.seed;
      RunRecordFormat fmt;
      fmt.emit_keys = a.emit_keys;
      fmt.include_post_time = a.wall_time;
      emit_json(cmd_run(cfg, req, fmt), a.out);
    } else if (*sweep_cmd) {
      SweepSpec spec;
      spec.d_values = a.distances;
      spec.strategies = kinds(a);
      spec.m_F = single_mf(a);
      spec.N = a.N;
      spec.g = a.g;
      spec.p_extra = parse_p_extra(a.p_extra);
      if (spec.N && a.p_extra == "opt") throw std::invalid_argument("--p-extra opt needs --mf");
      spec.iterations = a.iterations;
      spec.base_seed = a.seed;
      spec.threads = a.threads ? a.threads : std::max(1u, std::thread::hardware_concurrency());
      const auto points = run_sweep(cfg, spec);
      emit_csv(a.out, [&](std::ostream& os) { write_sweep_csv(os, points, spec); });
    }
  } catch (const Infeasible& e) {
    std::cout << json{{"error", "infeasible"}, {"stage", e.stage()}, {"message", e.what()}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
