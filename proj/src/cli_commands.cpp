#include "qkdplan/cli_commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "qkdplan/rng.hpp"

namespace qkdplan {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

json cmd_link_info(const Config& cfg, double d) {
  LinkParams link = cfg.link;
  link.distance_km = d;
  link.validate();
  json j;
  j["d"] = d;
  j["channel"] = derive_channel(link);
  auto dlim = limit_distance(link, cfg.security);
  j["d_lim"] = dlim ? json(*dlim) : json(nullptr);
  j["link"] = link;
  j["security"] = cfg.security;
  return j;
}

json cmd_plan(const Config& cfg, const PlanRequest& req) {
  PlanOptions opts;
  opts.g = req.g;
  opts.fixed_p_extra = req.p_extra;
  Plan p = plan(req.d, req.m_F, req.kind, cfg.link, cfg.security, opts);
  return json(p);
}

ResolvedRun resolve_run(const Config& cfg, const RunRequest& req) {
  if (req.m_F.has_value() == req.N.has_value())
    throw std::invalid_argument("exactly one of m_F and N must be given");
  LinkParams link = cfg.link;
  link.distance_km = req.d;
  link.validate();
  ResolvedRun out;
  out.channel = derive_channel(link);

  if (req.m_F) {
    PlanOptions opts;
    opts.g = req.g;
    opts.fixed_p_extra = req.p_extra;
    Plan pl = plan(req.d, *req.m_F, req.kind, cfg.link, cfg.security, opts);
    out.config = run_config_from(pl);
    out.plan = pl;
    return out;
  }

  if (*req.N <= 0) throw std::invalid_argument("N must be positive");
  const double p_extra = req.p_extra.value_or(0.0);
  if (!(p_extra >= 0.0 && p_extra < 0.5)) throw std::invalid_argument("P_extra must be in [0, 0.5)");
  const ChannelDerived& ch = out.channel;
  if (!ch.signal_detectable) throw Infeasible("channel", "no detectable signal at this distance");
  const double p_hat = effective_flip(ch.p_flip, p_extra);
  out.config.N = *req.N;
  out.config.p_extra = p_extra;
  if (req.kind != StrategyKind::ConstantFraction && p_hat <= 0.0)
    throw Infeasible("accuracy", "effective error rate is zero; count and sqrt strategies undefined");
  out.config.strategy =
      resolve_strategy(req.kind, static_cast<double>(*req.N), ch.p_sift, p_hat, cfg.security, req.g);
  return out;
}

json cmd_run(const Config& cfg, const RunRequest& req, const RunRecordFormat& fmt) {
  ResolvedRun rr = resolve_run(cfg, req);
  LinkParams link = cfg.link;
  link.distance_km = req.d;
  RunOptions opts;
  opts.measure_post_time = fmt.include_post_time;
  RunRecord rec = run_protocol(rr.config, link, cfg.security, req.seed, opts);
  json j = run_record_json(rec, fmt);
  if (rr.plan) j["plan"] = *rr.plan;
  return j;
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return v.empty() ? std::nan("") : 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::vector<SweepPoint> run_sweep(const Config& cfg, const SweepSpec& spec) {
  if (spec.m_F.has_value() == spec.N.has_value())
    throw std::invalid_argument("exactly one of m_F and N must be given");
  const int iterations = spec.iterations > 0 ? spec.iterations : (spec.m_F ? 20 : 50);

  std::vector<SweepPoint> points;
  std::vector<RunConfig> configs;
  for (double d : spec.d_values) {
    for (StrategyKind kind : spec.strategies) {
      SweepPoint pt;
      pt.d = d;
      pt.kind = kind;
      RunRequest req{d, spec.m_F, spec.N, kind, spec.g, spec.p_extra, 0};
      RunConfig rc;
      try {
        ResolvedRun rr = resolve_run(cfg, req);
        rc = rr.config;
        pt.feasible = true;
        pt.N = rc.N;
        pt.P_extra = rc.p_extra;
        pt.strategy = rc.strategy;
        pt.p = rr.channel.p_sift;
        pt.P_flip = rr.channel.p_flip;
        const double Nd = static_cast<double>(rc.N);
        pt.P_success_pred = success_probability(d, Nd, rc.strategy, rc.p_extra, cfg.link, cfg.security);
        OutputStats os = expected_output(Nd, d, rc.strategy, rc.p_extra, cfg.link, cfg.security);
        pt.m_pred = static_cast<double>(os.mean_m) * pt.P_success_pred;
        KeyRateStats ks = kbr_stats(Nd, d, rc.strategy, rc.p_extra, cfg.link, cfg.security);
        pt.kbr_pred = ks.mean;
        pt.kbr_std_pred = ks.std;
        const double p_hat = effective_flip(pt.P_flip, rc.p_extra);
        EstimatorStats es = strategy_stats(Nd, pt.p, p_hat, rc.strategy);
        pt.Q_std_pred = es.std_Qhat / (1.0 - 2.0 * rc.p_extra);
      } catch (const Infeasible& e) {
        pt.feasible = false;
        pt.infeasible_stage = e.stage();
      }
      points.push_back(std::move(pt));
      configs.push_back(rc);
    }
  }

  struct Job {
    std::size_t point;
    int run;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].feasible) continue;
    points[i].runs.resize(static_cast<std::size_t>(iterations));
    for (int r = 0; r < iterations; ++r) jobs.push_back({i, r});
  }

  parallel_for(jobs.size(), spec.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    SweepPoint& pt = points[job.point];
    LinkParams link = cfg.link;
    link.distance_km = pt.d;
    const std::uint64_t seed =
        derive_seed(spec.base_seed, job.point * static_cast<std::uint64_t>(iterations) +
                                        static_cast<std::uint64_t>(job.run));
    RunRecord rec = run_protocol(configs[job.point], link, cfg.security, seed);
    RunSummary& s = pt.runs[static_cast<std::size_t>(job.run)];
    s.n_sifted = rec.n_sifted;
    s.Q_inferred = rec.Q_inferred;
    s.estimated = rec.sample_size > 0;
    s.aborted = rec.aborted;
    s.m = rec.m;
    s.t_quantum = rec.t_quantum;
    s.t_post = rec.t_post;
  });
  return points;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points, const SweepSpec& spec) {
  out << "d_km,strategy,N,P_extra,n_sifted_mean,Q_mean,Q_std,abort_rate,m_mean,m_std,m_min,"
         "kbr_mean,kbr_std,t_quantum_mean,t_post_mean,p,P_flip,P_success_pred,m_pred,kbr_pred,"
         "kbr_std_pred,Q_std_pred,m_F,frac_m_ge_mF,status\n";
  const std::string mf = spec.m_F ? std::to_string(*spec.m_F) : "";
  for (const SweepPoint& pt : points) {
    out << format_number(pt.d) << ',' << to_string(pt.kind) << ',';
    if (!pt.feasible) {
      out << std::string(20, ',') << mf << ",,infeasible:" << pt.infeasible_stage << '\n';
      continue;
    }
    std::vector<double> sifted, q, m, kbr, tq, tp;
    double aborts = 0.0, reached = 0.0;
    std::int64_t m_min = pt.runs.empty() ? 0 : pt.runs.front().m;
    for (const RunSummary& r : pt.runs) {
      sifted.push_back(static_cast<double>(r.n_sifted));
      if (r.estimated) q.push_back(r.Q_inferred);
      m.push_back(static_cast<double>(r.m));
      kbr.push_back(static_cast<double>(r.m) / static_cast<double>(pt.N));
      tq.push_back(r.t_quantum);
      tp.push_back(r.t_post);
      aborts += r.aborted ? 1.0 : 0.0;
      if (spec.m_F && r.m >= *spec.m_F) reached += 1.0;
      m_min = std::min(m_min, r.m);
    }
    const double n = static_cast<double>(pt.runs.size());
    const std::vector<double> row{static_cast<double>(pt.N), pt.P_extra, mean_of(sifted),
                                  mean_of(q), std_of(q), aborts / n, mean_of(m), std_of(m),
                                  static_cast<double>(m_min), mean_of(kbr), std_of(kbr),
                                  mean_of(tq), mean_of(tp), pt.p, pt.P_flip, pt.P_success_pred,
                                  pt.m_pred, pt.kbr_pred, pt.kbr_std_pred, pt.Q_std_pred};
    for (double v : row) out << format_number(v) << ',';
    out << mf << ',' << (spec.m_F ? format_number(reached / n) : std::string()) << ",ok\n";
  }
}

void write_plan_sweep_csv(std::ostream& out, const Config& cfg, const PlanSweepSpec& spec) {
  out << "d_km,strategy,m_F,N_F,P_extra_opt,A0,l_F,expected_m,P_success,kbr_mean,kbr_std,status\n";
  for (double d : spec.d_values) {
    for (std::int64_t m_F : spec.m_F_values) {
      for (StrategyKind kind : spec.strategies) {
        out << format_number(d) << ',' << to_string(kind) << ',' << m_F << ',';
        try {
          PlanOptions opts;
          opts.g = spec.g;
          opts.fixed_p_extra = spec.p_extra;
          const Plan p = plan(d, m_F, kind, cfg.link, cfg.security, opts);
          out << p.N_F << ',' << format_number(p.P_extra_opt) << ',' << format_number(p.A_0) << ','
              << format_number(p.l_F) << ',' << p.expected_m << ',' << format_number(p.P_success)
              << ',' << format_number(p.expected_KBR) << ',' << format_number(p.std_KBR) << ",ok\n";
        } catch (const Infeasible& e) {
          out << ",,,,,,,,infeasible:" << e.stage() << '\n';
        }
      }
    }
  }
}

}  // namespace qkdplan
