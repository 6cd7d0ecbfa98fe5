#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qkdplan/json_io.hpp"
#include "qkdplan/planner.hpp"
#include "qkdplan/protocol.hpp"

namespace qkdplan {

/// Channel quantities at one distance plus the limiting distance (null if
/// the error rate never reaches the threshold).
nlohmann::json cmd_link_info(const Config& cfg, double d);

struct PlanRequest {
  double d = 0.0;
  std::int64_t m_F = 0;
  StrategyKind kind = StrategyKind::ConstantFraction;
  double g = 1.0 / 3.0;
  std::optional<double> p_extra;  // nullopt: optimize
};

nlohmann::json cmd_plan(const Config& cfg, const PlanRequest& req);

/// Either a target output length (pulses from the planner) or a fixed pulse
/// count. With a fixed N, P_extra defaults to 0 and cannot be optimized.
struct RunRequest {
  double d = 0.0;
  std::optional<std::int64_t> m_F;
  std::optional<std::int64_t> N;
  StrategyKind kind = StrategyKind::ConstantFraction;
  double g = 1.0 / 3.0;
  std::optional<double> p_extra;
  std::uint64_t seed = 1;
};

/// Resolves pulses, strategy and P_extra for a request; throws Infeasible.
struct ResolvedRun {
  RunConfig config;
  std::optional<Plan> plan;
  ChannelDerived channel;
};
ResolvedRun resolve_run(const Config& cfg, const RunRequest& req);

nlohmann::json cmd_run(const Config& cfg, const RunRequest& req, const RunRecordFormat& fmt = {});

struct SweepSpec {
  std::vector<double> d_values;
  std::vector<StrategyKind> strategies{StrategyKind::ConstantFraction};
  std::optional<std::int64_t> m_F;
  std::optional<std::int64_t> N;
  double g = 1.0 / 3.0;
  std::optional<double> p_extra;
  int iterations = 0;  // 0: 20 with a target m_F, 50 with a fixed N
  std::uint64_t base_seed = 1;
  unsigned threads = 1;
};

struct RunSummary {
  std::size_t n_sifted = 0;
  double Q_inferred = 0.0;
  bool estimated = false;
  bool aborted = false;
  std::int64_t m = 0;
  double t_quantum = 0.0;
  double t_post = 0.0;
};

struct SweepPoint {
  double d = 0.0;
  StrategyKind kind = StrategyKind::ConstantFraction;
  bool feasible = false;
  std::string infeasible_stage;
  std::int64_t N = 0;
  double P_extra = 0.0;
  Strategy strategy;
  double p = 0.0;
  double P_flip = 0.0;
  double P_success_pred = 0.0;
  double m_pred = 0.0;
  double kbr_pred = 0.0;
  double kbr_std_pred = 0.0;
  double Q_std_pred = 0.0;
  std::vector<RunSummary> runs;  // in run-index order
};

/// Runs every (d, strategy) point. Run i of a point uses seed
/// derive_seed(base_seed, point_index * iterations + i), so results do not
/// depend on the thread count.
std::vector<SweepPoint> run_sweep(const Config& cfg, const SweepSpec& spec);
void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points,
                     const SweepSpec& spec);

struct PlanSweepSpec {
  std::vector<double> d_values;
  std::vector<std::int64_t> m_F_values;
  std::vector<StrategyKind> strategies{StrategyKind::ConstantFraction};
  double g = 1.0 / 3.0;
  std::optional<double> p_extra;
};

void write_plan_sweep_csv(std::ostream& out, const Config& cfg, const PlanSweepSpec& spec);

/// Fixed nine-significant-digit formatting used by every CSV writer.
std::string format_number(double v);

}  // namespace qkdplan
