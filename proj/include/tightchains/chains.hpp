#pragma once

// The two limiting Markov chains on {1, 2, ...}: kernels, stationary and
// first-part laws, tail masses, mixing diagnostics, simulation and finite
// truncation with explicit defect.

#include <cstdint>
#include <vector>

#include "tightchains/model.hpp"
#include "tightchains/rng.hpp"
#include "tightchains/series.hpp"

namespace tc {

// CCA: z^k (i+k-1) (k+a)/(i+a). Carlitz: z^k (1+z^i)/(1+z^k) for i != k, else 0.
double transition(Model model, std::int64_t i, std::int64_t k);

// CCA: z^k (k+a)^2 / A. Carlitz: z^k / (1+z^k)^2 / A.
double stationary(Model model, std::int64_t k);

// CCA: z^k (k+a). Carlitz: z^k / (1+z^k).
double initial(Model model, std::int64_t k);

// Limit of transition(model, i, k) as i -> infinity.
double limiting_transition(Model model, std::int64_t k);

// Sums over k > n. All are exact closed forms (CCA) or series summed to a
// relative tail below 1e-17 (Carlitz).
double row_tail(Model model, std::int64_t i, std::int64_t n);
double sup_row_tail(Model model, std::int64_t n);
double stationary_tail(Model model, std::int64_t n);
double initial_tail(Model model, std::int64_t n);

// sum_{k >= n+1} k^p z^k for p = 0, 1, 2.
double power_tail(double z, std::int64_t n, int p);

// Probabilities on {1..K} plus the mass beyond K.
struct DistributionOnN {
  std::vector<double> mass;  // mass[k-1] = P{k}
  double tail = 0.0;

  int size() const { return static_cast<int>(mass.size()); }
  double operator()(int k) const { return k >= 1 && k <= size() ? mass[k - 1] : 0.0; }
  static DistributionOnN point(int k);
};

DistributionOnN stationary_distribution(Model model, int K);
DistributionOnN initial_distribution(Model model, int K);

struct MixingDiagnostics {
  double delta0 = 0.0;  // min_{i,j} sum_k p(i,k) p(j,k)
  double rho0 = 0.0;    // max_{i,j} (1/2) sum_k |p(i,k) - p(j,k)|
  int argmin_i = 0;     // 0 stands for the limiting row
  int argmin_j = 0;
};

// Scan over i, j in {1..K} and the limiting row; k sums run until the
// remaining row mass is below 1e-16.
MixingDiagnostics mixing_diagnostics(Model model, int K);

struct TruncatedChain {
  Model model = Model::Cca;
  int K = 0;
  std::vector<double> matrix;      // row-major K x K, states 1..K
  std::vector<double> row_defect;  // row_defect[i-1] = p(i, {k > K})
  std::vector<double> pi_trunc;    // pi(1..K)
  double pi_tail = 0.0;            // pi({k > K})

  double p(int i, int k) const { return matrix[static_cast<std::size_t>(i - 1) * K + (k - 1)]; }
};

// Substochastic restriction to {1..K}; no renormalization. Requires K >= 2.
TruncatedChain truncate(Model model, int K);

// max_k |sum_{i<=K} pi(i) p(i,k) - pi(k)| over k <= K.
double stationarity_residual(const TruncatedChain& chain);

// Inverse-CDF sampler for kernel rows. Rows 1..cache_rows are tabulated,
// other rows are scanned on the fly. A row scan stops once the cumulative
// mass reaches 1 - 1e-14 and the remainder goes to the last scanned state.
class RowSampler {
 public:
  explicit RowSampler(Model model, int cache_rows = 128);

  Model model() const { return model_; }
  int step(int i, SplitMix64& rng) const;
  int sample(const DistributionOnN& law, SplitMix64& rng) const;

 private:
  Model model_;
  std::vector<std::vector<double>> cdf_;  // cdf_[i][k-1]
};

int step(Model model, int i, SplitMix64& rng);

struct Path {
  int start = 0;
  std::vector<int> states;  // X(1..length)
};

Path simulate_path(const RowSampler& sampler, const DistributionOnN& init,
                   std::int64_t length, SplitMix64& rng);
Path simulate_path(Model model, const DistributionOnN& init, std::int64_t length,
                   SplitMix64& rng);

}  // namespace tc
