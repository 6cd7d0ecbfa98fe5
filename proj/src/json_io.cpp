#include "qkdplan/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace qkdplan {
namespace {

using nlohmann::json;

void read(const json& obj, const char* key, double& field) {
  if (auto it = obj.find(key); it != obj.end()) {
    if (!it->is_number()) throw std::invalid_argument(std::string("config field '") + key + "' must be a number");
    field = it->get<double>();
  }
}

}  // namespace

Config config_from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");
  const json& lj = doc.contains("link") ? doc.at("link") : doc;
  const json& sj = doc.contains("security") ? doc.at("security") : doc;

  Config c;
  LinkParams& l = c.link;
  if (lj.contains("mu") && !lj.contains("eta_e")) {
    double mu = 0.0;
    read(lj, "mu", mu);
    l.emission_efficiency = emission_efficiency_from_mu(mu);
  }
  read(lj, "eta_e", l.emission_efficiency);
  read(lj, "eta_d", l.detection_efficiency);
  read(lj, "R", l.attenuation_db_per_km);
  read(lj, "v_f", l.fiber_speed_km_s);
  read(lj, "std", l.jitter_fraction);
  read(lj, "R_depolar", l.depolarizing_rate);
  read(lj, "R_DCR", l.dark_count_rate);
  read(lj, "DD", l.detection_delay);
  read(lj, "DT", l.dead_time);
  read(lj, "GD_A", l.gate_duration_alice);
  read(lj, "GD_B", l.gate_duration_bob);
  read(lj, "C", l.coverage_factor);
  read(lj, "d", l.distance_km);

  SecurityParams& s = c.security;
  read(sj, "Q_t", s.abort_threshold);
  read(sj, "f_max", s.max_reconciliation_efficiency);
  read(sj, "eps_max", s.extractor_epsilon);
  read(sj, "C_F", s.confidence_factor);
  read(sj, "eps", s.accuracy_base);
  read(sj, "alpha", s.accuracy_amplitude);
  read(sj, "beta", s.accuracy_decay);

  l.validate();
  s.validate();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

void to_json(json& j, const LinkParams& p) {
  j = json{{"eta_e", p.emission_efficiency}, {"eta_d", p.detection_efficiency},
           {"R", p.attenuation_db_per_km},   {"v_f", p.fiber_speed_km_s},
           {"std", p.jitter_fraction},       {"R_depolar", p.depolarizing_rate},
           {"R_DCR", p.dark_count_rate},     {"DD", p.detection_delay},
           {"DT", p.dead_time},              {"GD_A", p.gate_duration_alice},
           {"GD_B", p.gate_duration_bob},    {"C", p.coverage_factor},
           {"d", p.distance_km}};
}

void to_json(json& j, const SecurityParams& p) {
  j = json{{"Q_t", p.abort_threshold}, {"f_max", p.max_reconciliation_efficiency},
           {"eps_max", p.extractor_epsilon}, {"C_F", p.confidence_factor},
           {"eps", p.accuracy_base}, {"alpha", p.accuracy_amplitude},
           {"beta", p.accuracy_decay}};
}

void to_json(json& j, const ChannelDerived& c) {
  j = json{{"tau", c.propagation_time}, {"delta_tau", c.jitter_std},
           {"window", c.window},        {"P_DCR", c.p_dark_count},
           {"P_0", c.p_device_loss},    {"P_loss", c.p_loss},
           {"P_depolar", c.p_depolar},  {"p", c.p_sift},
           {"P_flip", c.p_flip},        {"s", c.repetition_time},
           {"s_lim", c.repetition_time_min},
           {"signal_detectable", c.signal_detectable}};
}

void to_json(json& j, const Strategy& s) {
  j = json{{"kind", std::string(to_string(s.kind))}, {"param", s.param}};
}

void to_json(json& j, const Plan& p) {
  j = json{{"strategy", p.strategy},       {"N_F", p.N_F},
           {"P_extra_opt", p.P_extra_opt}, {"l_F", p.l_F},
           {"A_0", p.A_0},                 {"n_lim", p.n_lim},
           {"expected_m", p.expected_m},   {"std_m", p.std_m},
           {"expected_KBR", p.expected_KBR}, {"kbr_std", p.std_KBR},
           {"P_success", p.P_success},     {"d", p.d},
           {"m_F", p.m_F},                 {"p", p.p},
           {"P_flip", p.P_flip},           {"P_hat", p.P_hat}};
}

json run_record_json(const RunRecord& r, const RunRecordFormat& fmt) {
  json j{{"N", r.N},
         {"d", r.d},
         {"strategy", r.strategy},
         {"n_sifted", r.n_sifted},
         {"sample_size", r.sample_size},
         {"Q_hat", r.Q_hat},
         {"Q_inferred", r.Q_inferred},
         {"Q_clamped", r.Q_clamped},
         {"aborted", r.aborted},
         {"abort_cause", std::string(to_string(r.abort_cause))},
         {"l", r.l},
         {"n_exp", r.n_exp},
         {"f_realized", r.f_realized},
         {"reconciled", r.reconciled},
         {"P_hat_prior", r.P_hat_prior},
         {"k", r.k},
         {"m", r.m},
         {"P_extra", r.P_extra},
         {"seed", r.seed},
         {"t_quantum", r.t_quantum},
         {"clock_model", "N*s + tau + window + DD; classical message latency not modeled"}};
  if (fmt.emit_keys || r.final_key.size() <= fmt.max_key_bits) {
    j["final_key"] = r.final_key.to_hex();
  } else {
    j["final_key"] = nullptr;
  }
  if (fmt.include_post_time) j["t_post"] = r.t_post;
  return j;
}

}  // namespace qkdplan
