#include "qkdplan/reconcile.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "qkdplan/numerics.hpp"
#include "qkdplan/rng.hpp"

namespace qkdplan {
namespace {

struct Pass {
  std::size_t block_size = 0;
  std::vector<std::uint32_t> order;     // position at each slot
  std::vector<std::uint32_t> slot_of;   // inverse of order
  std::vector<std::uint8_t> parity_A;
  std::vector<std::uint8_t> parity_B;

  std::size_t block_of(std::uint32_t pos) const { return slot_of[pos] / block_size; }
  std::size_t block_count() const { return (order.size() + block_size - 1) / block_size; }
};

class CascadeRun {
 public:
  CascadeRun(const Bitstring& a, const Bitstring& b, std::size_t k1, std::uint64_t seed,
             std::vector<ParityDisclosure>* transcript)
      : a_(a), b_(b), k1_(k1), rng_(seed), transcript_(transcript) {}

  void run() {
    for (int p = 0; p < kCascadePasses; ++p) {
      open_pass(p);
      std::vector<std::pair<int, std::size_t>> work;
      for (std::size_t blk = 0; blk < passes_[p].block_count(); ++blk) {
        if (passes_[p].parity_A[blk] != passes_[p].parity_B[blk]) work.emplace_back(p, blk);
      }
      drain(work);
    }
  }

  const Bitstring& corrected() const { return b_; }
  std::int64_t leaked() const { return leaked_; }
  std::int64_t corrections() const { return corrections_; }

 private:
  void open_pass(int p) {
    const std::size_t l = a_.size();
    Pass& ps = passes_[p];
    ps.block_size = std::min(l, k1_ << p);
    ps.order.resize(l);
    for (std::size_t i = 0; i < l; ++i) ps.order[i] = static_cast<std::uint32_t>(i);
    if (p > 0) {
      for (std::size_t i = l - 1; i > 0; --i) std::swap(ps.order[i], ps.order[rng_.below(i + 1)]);
    }
    ps.slot_of.resize(l);
    for (std::size_t s = 0; s < l; ++s) ps.slot_of[ps.order[s]] = static_cast<std::uint32_t>(s);

    const std::size_t nb = ps.block_count();
    ps.parity_A.assign(nb, 0);
    ps.parity_B.assign(nb, 0);
    for (std::size_t s = 0; s < l; ++s) {
      ps.parity_A[s / ps.block_size] ^= a_[ps.order[s]];
      ps.parity_B[s / ps.block_size] ^= b_[ps.order[s]];
    }
    for (std::size_t blk = 0; blk < nb; ++blk) disclose(p, blk, ps.parity_A[blk], ps.parity_B[blk]);
    opened_ = p + 1;
  }

  void disclose(int p, std::size_t blk, std::uint8_t pa, std::uint8_t pb) {
    ++leaked_;
    if (transcript_) transcript_->push_back({p + 1, blk, pa, pb});
  }

  // Locates one error inside an odd block of pass p by halving.
  std::uint32_t bisect(int p, std::size_t blk) {
    const Pass& ps = passes_[p];
    std::size_t lo = blk * ps.block_size;
    std::size_t hi = std::min(lo + ps.block_size, ps.order.size());
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      std::uint8_t pa = 0, pb = 0;
      for (std::size_t s = lo; s < mid; ++s) {
        pa ^= a_[ps.order[s]];
        pb ^= b_[ps.order[s]];
      }
      disclose(p, blk, pa, pb);
      if (pa != pb) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return ps.order[lo];
  }

  void drain(std::vector<std::pair<int, std::size_t>>& work) {
    while (!work.empty()) {
      const auto [p, blk] = work.back();
      work.pop_back();
      if (passes_[p].parity_A[blk] == passes_[p].parity_B[blk]) continue;
      const std::uint32_t pos = bisect(p, blk);
      b_.flip(pos);
      ++corrections_;
      for (int q = 0; q < opened_; ++q) {
        Pass& other = passes_[q];
        const std::size_t ob = other.block_of(pos);
        other.parity_B[ob] ^= 1;
        if (other.parity_A[ob] != other.parity_B[ob]) work.emplace_back(q, ob);
      }
    }
  }

  const Bitstring& a_;
  Bitstring b_;
  std::size_t k1_;
  Rng rng_;
  std::vector<ParityDisclosure>* transcript_;
  std::array<Pass, kCascadePasses> passes_{};
  int opened_ = 0;
  std::int64_t leaked_ = 0;
  std::int64_t corrections_ = 0;
};

}  // namespace

ReconcileResult cascade(const Bitstring& key_A, const Bitstring& key_B, double q_ref,
                        std::uint64_t seed, std::vector<ParityDisclosure>* transcript) {
  if (key_A.size() != key_B.size()) throw std::invalid_argument("cascade: key length mismatch");
  const std::size_t l = key_A.size();
  if (l < kCascadeMinLength) throw std::invalid_argument("cascade: key shorter than 16 bits");
  if (!(q_ref >= 0.0 && q_ref < 0.5)) throw std::invalid_argument("cascade: Q_ref outside [0, 1/2)");

  const double q = std::max(q_ref, 1.0 / static_cast<double>(l));
  const auto k1 = std::min<std::size_t>(l, static_cast<std::size_t>(std::ceil(0.73 / q)));

  CascadeRun run(key_A, key_B, k1, seed, transcript);
  run.run();

  ReconcileResult r;
  r.corrected_B = run.corrected();
  r.n_exp = run.leaked();
  r.corrections = run.corrections();
  r.first_block_size = k1;
  r.f_realized = static_cast<double>(r.n_exp) / (static_cast<double>(l) * binary_entropy(q));
  r.verified = r.corrected_B == key_A;
  return r;
}

double leakage_upper_bound(double l, double p_hat, const SecurityParams& sec) {
  if (l < 0.0) throw std::invalid_argument("leakage_upper_bound: negative length");
  return sec.max_reconciliation_efficiency * l * binary_entropy(p_hat);
}

void write_parity_transcript(std::ostream& out, const std::vector<ParityDisclosure>& transcript) {
  out << "pass,block_index,parity_A,parity_B\n";
  for (const auto& d : transcript) {
    out << d.pass << ',' << d.block_index << ',' << int(d.parity_A) << ',' << int(d.parity_B) << '\n';
  }
}

}  // namespace qkdplan
