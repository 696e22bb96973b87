#pragma once

// Counting, enumeration, sampling and prefix laws of random CCA and Carlitz
// compositions. A CCA composition is weighted by the number of column-convex
// animals with those column heights, prod (i_r + i_{r+1} - 1).

#include <cstdint>
#include <utility>
#include <vector>

#include "tightchains/model.hpp"
#include "tightchains/rng.hpp"

namespace tc {

struct Composition {
  std::vector<int> parts;
  int nu = 0;
};

bool is_valid(Model model, const Composition& c);

// prod of transfer weights over adjacent pairs (1 for a single part).
BigInt composition_weight(Model model, const std::vector<int>& parts);

enum class TableMode { Exact, Scaled };

// Weighted completion counts G(s, j): the total weight of compositions of s
// that may follow a part j,
//   G(0, j) = 1,  G(s, j) = sum_{k=1..s} w(j, k) G(s - k, k).
// Both models collapse to one-dimensional sequences U(s) = sum_k G(s-k, k)
// (= T(s)): CCA has G(s, j) = (j - 1) U(s) + V(s) with V(s) = sum_k k G(s-k, k),
// Carlitz has G(s, j) = U(s) - G(s - j, j) for j <= s and U(s) otherwise.
//
// Scaled mode stores G(s, j) z*^s in double precision and truncates part
// sizes at kcut, where z*^kcut kcut^2 < 1e-21; Carlitz keeps the columns
// j <= kcut. Exact mode stores big integers and a scaled mirror for sampling.
class CompletionTable {
 public:
  static CompletionTable build(Model model, int nu, TableMode mode, const Guards& guards = {});

  Model model() const { return model_; }
  int nu() const { return nu_; }
  TableMode mode() const { return mode_; }
  int kcut() const { return kcut_; }
  double z() const { return z_; }

  // Exact mode only.
  BigInt exact(int s, int j) const;
  BigInt total() const { return exact_total(nu_); }
  BigInt exact_total(int s) const;

  // G(s, j) z*^s; j = 0 means "no previous part" (the first-part normalizer U(s)).
  double scaled(int s, int j) const;
  double log_total() const;  // ln T(nu)
  // A priori bound on the relative error of every scaled entry.
  double relative_error_bound() const;
  double zpow(int k) const { return zpow_[k]; }

 private:
  Model model_ = Model::Cca;
  int nu_ = 0;
  TableMode mode_ = TableMode::Exact;
  int kcut_ = 0;
  double z_ = 0.0;
  std::vector<double> zpow_;
  std::vector<double> u_hat_, v_hat_;
  std::vector<std::vector<double>> col_hat_;  // Carlitz: col_hat_[j][s]
  std::vector<BigInt> u_, v_;                 // CCA exact
  std::vector<std::vector<BigInt>> g_;        // Carlitz exact: g_[j][s], s + j <= nu

  friend Composition sample(const CompletionTable& table, SplitMix64& rng);
};

// T(nu, mu) for mu = 0..nu.
std::vector<BigInt> count_by_parts(Model model, int nu);

std::vector<std::pair<Composition, BigInt>> enumerate(Model model, int nu,
                                                      const Guards& guards = {});

// Sequential conditional sampling:
//   P(first = k) = G(nu - k, k) / T(nu),
//   P(next = k | previous j, remaining s) = w(j, k) G(s - k, k) / G(s, j).
Composition sample(const CompletionTable& table, SplitMix64& rng);

// P{Y_1 = i_1, ..., Y_k = i_k} as an exact rational (table in exact mode).
Rational prefix_probability(const CompletionTable& table, const std::vector<int>& prefix);
Rational prefix_probability(Model model, int nu, const std::vector<int>& prefix);

// P{Z(1) = i_1, ..., Z(k) = i_k} for the limiting chain started from the first-part law.
double chain_prefix_probability(Model model, const std::vector<int>& prefix);

struct PrefixTvReport {
  int nu = 0;
  int k = 0;
  double threshold = 0.0;     // nu - ln^2 nu
  double tv = 0.0;            // composition vs chain, one overflow atom each
  double overflow_composition = 0.0;
  double overflow_chain = 0.0;
  std::size_t prefixes = 0;
  // max |ln(P_nu / P)| over length-k prefixes with nu - |i| = d, d = 0..nu;
  // NaN when no prefix has that residual.
  std::vector<double> max_log_ratio_by_residual;

  // max over prefixes with nu - |i| >= d.
  double max_log_ratio_from(int d) const;
};

PrefixTvReport prefix_tv(Model model, int nu, int k, const Guards& guards = {});

struct PrefixSplit {
  int hat_m = 0;
  std::vector<int> prefix;
  double threshold = 0.0;
};

// hat_m = max{1 <= m < #parts : Y_1 + ... + Y_m <= nu - ln^2 nu}, 0 if none.
PrefixSplit split_hat_m(const Composition& c);

// Visit all length-k prefixes (strictly positive parts) with sum <= max_sum.
template <class F>
void for_each_prefix(int k, int max_sum, F&& visit) {
  std::vector<int> prefix(k, 0);
  auto rec = [&](auto&& self, int pos, int used) -> void {
    if (pos == k) {
      visit(static_cast<const std::vector<int>&>(prefix), used);
      return;
    }
    int remaining_slots = k - pos - 1;
    for (int v = 1; used + v + remaining_slots <= max_sum; ++v) {
      prefix[pos] = v;
      self(self, pos + 1, used + v);
    }
  };
  if (k >= 1 && max_sum >= k) rec(rec, 0, 0);
}

struct PartsCountStats {
  std::vector<Rational> pmf;  // index mu = 0..nu
  double mean = 0.0;
  double variance = 0.0;
  BigInt total;
};

PartsCountStats parts_count_stats(Model model, int nu, const Guards& guards = {});

}  // namespace tc
