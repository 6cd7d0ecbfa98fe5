#include <doctest.h>

#include <cmath>

#include "qkdplan/extract.hpp"
#include "qkdplan/numerics.hpp"
#include "qkdplan/protocol.hpp"
#include "qkdplan/rng.hpp"

using namespace qkdplan;

namespace {

ChannelDerived channel_at(double d) {
  LinkParams l;
  l.distance_km = d;
  return derive_channel(l);
}

std::size_t sifted_mismatches(const SiftedKeys& s) { return hamming_distance(s.alice, s.bob); }

SiftedKeys run_and_sift(std::int64_t N, double d, std::uint64_t seed) {
  const QuantumTranscript t = quantum_phase(N, channel_at(d), seed);
  return sift(t.alice_key, t.alice_bases, t.bob_bases, t.outcomes);
}

}  // namespace

TEST_CASE("noiseless channel at zero distance") {
  const std::int64_t N = 100000;
  const QuantumTranscript t = quantum_phase(N, channel_at(0.0), 42);
  REQUIRE(t.outcomes.size() == static_cast<std::size_t>(N));
  for (const PulseOutcome& o : t.outcomes) {
    CHECK(o.detected == o.bob_bit.has_value());
    CHECK((o.source == DetectionSource::None) == !o.detected);
    CHECK(o.source != DetectionSource::DarkCount);
    CHECK(o.source != DetectionSource::PhotonDepolarized);
  }
  const SiftedKeys s = sift(t.alice_key, t.alice_bases, t.bob_bases, t.outcomes);
  CHECK(s.alice.size() == s.bob.size());
  CHECK(sifted_mismatches(s) == 0);
  const double n = static_cast<double>(s.alice.size());
  CHECK(std::abs(n - 6000.0) <= 3.0 * std::sqrt(N * 0.06 * 0.94));
}

TEST_CASE("event sampler reproduces the closed-form flip probability at 50 km") {
  const std::int64_t N = 2000000;
  const ChannelDerived c = channel_at(50.0);
  const SiftedKeys s = run_and_sift(N, 50.0, 7);
  const double n = static_cast<double>(s.alice.size());
  CHECK(std::abs(n - N * c.p_sift) <= 4.0 * std::sqrt(N * c.p_sift * (1.0 - c.p_sift)));
  const double rate = static_cast<double>(sifted_mismatches(s)) / n;
  CHECK(std::abs(rate - c.p_flip) <= 4.0 * std::sqrt(c.p_flip * (1.0 - c.p_flip) / n));
}

TEST_CASE("sifting keeps matched detections only") {
  const Bitstring key{0, 1, 1};
  const Bitstring ba{0, 1, 1};
  const Bitstring bb{0, 0, 1};
  std::vector<PulseOutcome> out(3);
  out[0] = {true, DetectionSource::Photon, true, std::uint8_t{0}};
  out[1] = {false, DetectionSource::None, false, std::nullopt};
  out[2] = {true, DetectionSource::Photon, true, std::uint8_t{1}};
  const SiftedKeys s = sift(key, ba, bb, out);
  CHECK(s.alice == Bitstring{0, 1});
  CHECK(s.bob == Bitstring{0, 1});

  std::vector<PulseOutcome> lost(3);
  const SiftedKeys e = sift(key, ba, bb, lost);
  CHECK(e.alice.empty());
  CHECK(e.bob.empty());
}

TEST_CASE("controlled randomization") {
  Rng rng(1);
  Bitstring key;
  for (int i = 0; i < 100000; ++i) key.push_back(rng.bit());
  CHECK(controlled_randomization(key, 0.0, 9) == key);
  const double flips = static_cast<double>(hamming_distance(key, controlled_randomization(key, 0.5, 9)));
  CHECK(std::abs(flips - 50000.0) <= 3.0 * std::sqrt(1e5 * 0.25));

  const SiftedKeys s = run_and_sift(400000, 0.0, 3);
  const Bitstring noisy = controlled_randomization(s.bob, 0.04, 4);
  const double n = static_cast<double>(noisy.size());
  const double rate = static_cast<double>(hamming_distance(s.alice, noisy)) / n;
  CHECK(std::abs(rate - 0.04) <= 4.0 * std::sqrt(0.04 * 0.96 / n));
}

TEST_CASE("property: randomized mismatch follows the composed flip rate") {
  const ChannelDerived c = channel_at(40.0);
  const SiftedKeys s = run_and_sift(3000000, 40.0, 21);
  for (double e : {0.01, 0.05}) {
    const Bitstring noisy = controlled_randomization(s.bob, e, 22);
    const double n = static_cast<double>(noisy.size());
    const double expect = effective_flip(c.p_flip, e);
    const double rate = static_cast<double>(hamming_distance(s.alice, noisy)) / n;
    CHECK(std::abs(rate - expect) <= 4.0 * std::sqrt(expect * (1.0 - expect) / n));
  }
}

TEST_CASE("estimation sample size rounding") {
  CHECK(estimation_sample_size(Strategy::fraction(1.0 / 3.0), 9) == 3);
  CHECK(estimation_sample_size(Strategy::fraction(0.25), 10) == 3);  // 2.5 rounds up
  CHECK(estimation_sample_size(Strategy::count(100.0), 50) == 25);
  CHECK(estimation_sample_size(Strategy::fraction(0.01), 10) == 1);
  CHECK(estimation_sample_size(Strategy::fraction(0.3), 1) == 0);
}

TEST_CASE("parameter estimation edge cases") {
  const SecurityParams sec;
  Bitstring a(200, 0);
  const Estimation same = estimate_parameters(a, a, Strategy::fraction(0.25), 0.0, sec, 1);
  CHECK(same.q_hat == 0.0);
  CHECK_FALSE(same.aborted);
  CHECK(same.sample_size == 50);
  CHECK(same.remaining_A.size() == 150);
  CHECK(same.remaining_B.size() == 150);

  const Estimation all = estimate_parameters(a, Bitstring(200, 1), Strategy::fraction(0.25), 0.0, sec, 1);
  CHECK(all.q_hat == 1.0);
  CHECK(all.aborted);
  CHECK(all.cause == AbortCause::Threshold);

  const Estimation none = estimate_parameters(Bitstring{}, Bitstring{}, Strategy::fraction(0.25), 0.0, sec, 1);
  CHECK(none.aborted);
  CHECK(none.cause == AbortCause::NoSignal);
}

TEST_CASE("noiseless run keeps everything and never aborts") {
  const LinkParams link;
  const SecurityParams sec;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RunRecord r = run_protocol({10000, 0.0, Strategy::fraction(1.0 / 3.0)}, link, sec, seed);
    CHECK_FALSE(r.aborted);
    CHECK(r.Q_hat == 0.0);
    CHECK(r.l == r.n_sifted - r.sample_size);
    CHECK(r.m == output_length_fixed_point(static_cast<double>(r.l), sec.extractor_epsilon));
    CHECK(r.reconciled);
    CHECK(r.final_key.size() == static_cast<std::size_t>(r.m));
  }
}

TEST_CASE("same seed replays the same run") {
  LinkParams link;
  link.distance_km = 30.0;
  const RunConfig cfg{200000, 0.01, Strategy::fraction(1.0 / 3.0)};
  const RunRecord a = run_protocol(cfg, link, SecurityParams{}, 99, {false});
  const RunRecord b = run_protocol(cfg, link, SecurityParams{}, 99, {false});
  CHECK(a.final_key == b.final_key);
  CHECK(a.n_exp == b.n_exp);
  CHECK(a.Q_hat == b.Q_hat);
  CHECK(a.n_sifted == b.n_sifted);
  const RunRecord c = run_protocol(cfg, link, SecurityParams{}, 100, {false});
  CHECK(c.final_key != a.final_key);
}

TEST_CASE("run record invariants across distances") {
  const SecurityParams sec;
  for (double d : {5.0, 30.0, 60.0, 76.0, 85.0}) {
    LinkParams link;
    link.distance_km = d;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const RunRecord r = run_protocol({200000, 0.0, Strategy::fraction(1.0 / 3.0)}, link, sec, seed, {false});
      CHECK(r.l + r.sample_size == r.n_sifted);
      CHECK(r.m <= static_cast<std::int64_t>(r.l));
      CHECK(r.n_exp >= 0);
      if (r.aborted) CHECK(r.m == 0);
      CHECK(r.t_quantum > 0.0);
    }
  }
}

TEST_CASE("plan at 30 km delivers the target in at least 95 of 100 runs") {
  const LinkParams link;
  const SecurityParams sec;
  const Plan pl = plan(30.0, 1000, StrategyKind::ConstantCount, link, sec);
  LinkParams at30 = link;
  at30.distance_km = 30.0;
  int hits = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const RunRecord r = run_protocol(run_config_from(pl), at30, sec, derive_seed(2024, i), {false});
    hits += r.m >= 1000 ? 1 : 0;
  }
  CHECK(hits >= 95);
}

TEST_CASE("abort frequency at the planned size matches the success probability") {
  const LinkParams link;
  const SecurityParams sec;
  const Strategy g = Strategy::fraction(1.0 / 3.0);
  LinkParams at = link;
  at.distance_km = 75.0;
  const std::int64_t N = 200000;
  const double ps = success_probability(75.0, static_cast<double>(N), g, 0.0, link, sec);
  int aborts = 0;
  const int runs = 500;
  for (int i = 0; i < runs; ++i) {
    aborts += run_protocol({N, 0.0, g}, at, sec, derive_seed(77, static_cast<std::uint64_t>(i)), {false}).aborted;
  }
  const double rate = static_cast<double>(aborts) / runs;
  const double se = std::sqrt(std::max(ps * (1.0 - ps), 1.0 / runs) / runs);
  CHECK(std::abs(rate - (1.0 - ps)) <= 3.0 * se);
}
