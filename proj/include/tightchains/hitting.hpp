#pragma once

// Hitting times and hit locations of rare sets for the truncated chains:
// hitting-time systems, moments, Perron data of the restricted block, the
// exact joint law of (hit location, hit time), the product law, total
// variation, multi-hit simulation and the Poisson extreme-value formulas.

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "tightchains/chains.hpp"
#include "tightchains/model.hpp"
#include "tightchains/rng.hpp"

namespace tc {

inline constexpr std::int64_t kInfinity = std::numeric_limits<std::int64_t>::max();

// Union of disjoint bands (a, b]; b = kInfinity gives an upper tail.
struct RareSet {
  std::vector<std::pair<std::int64_t, std::int64_t>> bands;

  static RareSet upper(std::int64_t n);  // S_n = {n+1, n+2, ...}
  static RareSet band(std::int64_t a, std::int64_t b);
  static RareSet all();                  // every state

  bool contains(std::int64_t k) const;
  bool unbounded() const;
  double stationary_mass(Model model) const;
  // p(i, S), summed band by band from closed-form tails.
  double entry_probability(Model model, std::int64_t i) const;
};

enum class SolverKind { Direct, FixedPoint };

// A function i -> E_i[...] determined by its values on S^c ∩ [1..K].
struct HitSolution {
  Model model = Model::Cca;
  std::vector<int> states;     // S^c ∩ [1..K], increasing
  std::vector<double> values;  // on `states`
  double residual = 0.0;       // relative residual of the linear system
  double leak = 0.0;           // max row mass lost beyond K outside S
  int iterations = 0;
  int order = 1;                            // moment order k
  std::vector<std::vector<double>> lower;   // orders 1..k-1 on `states`

  // Value for any initial state i via one step from i.
  double at(std::int64_t i, const RareSet& S) const;
};

// E_j[T] = 1 + sum_{k in S^c} p(j, k) E_k[T].
HitSolution expected_hits(const TruncatedChain& chain, const RareSet& S,
                          SolverKind solver = SolverKind::Direct);

// E_i[T^k] for k = 1..max_order; entry k-1 holds order k.
std::vector<HitSolution> hit_moments(const TruncatedChain& chain, const RareSet& S,
                                     int max_order, SolverKind solver = SolverKind::Direct);

// sum_{k in S} pi(k) E_k[T(S)], with states beyond K handled through
// reversibility: sum_{k > K} pi(k) p(k, j) = pi(j) p(j, {k > K}).
double kac_sum(const TruncatedChain& chain, const RareSet& S, const HitSolution& hits);

struct PerronData {
  double lambda = 0.0;
  double one_minus_lambda = 0.0;  // from the exit decomposition, no cancellation
  double cw_lower = 0.0;          // Collatz-Wielandt bracket for 1 - lambda
  double cw_upper = 0.0;
  std::vector<int> states;
  std::vector<double> f;          // min f = 1
  double residual = 0.0;          // ||P f - lambda f|| / ||f||
  double eps_n = 0.0;             // sup_{i in S^c} p(i, S)
  double f_bound = 0.0;           // 1 / (1 - 6 eps_n / delta0), inf if not applicable
  int iterations = 0;
};

PerronData perron(const TruncatedChain& chain, const RareSet& S, double delta0 = kNaN);

// Joint law of (location, time) with an explicit block for tau = 1..explicit
// and a geometric continuation P{T = explicit + m, X = loc} = amp[loc] (1 - omega)^m.
// Label 0 collects locations beyond K.
struct JointLaw {
  std::vector<int> labels;
  std::vector<std::vector<double>> table;  // table[tau-1][loc]
  std::vector<double> tail_amp;            // per location; empty means no continuation
  double omega = 1.0;                      // leave rate of the continuation
  double unaccounted = 0.0;                // mass not represented

  int explicit_steps() const { return static_cast<int>(table.size()); }
  double mass(int tau, std::size_t loc) const;  // P{T = tau, X = labels[loc]}
  double total_mass() const;
  double expected_time() const;
  JointLaw time_marginal() const;            // single label 0
  std::vector<double> location_marginal() const;
};

struct HitLawOptions {
  std::int64_t tau_max = 50'000'000;
  double mass_tolerance = 1e-9;
  double ratio_tolerance = 1e-13;
};

// First positive hit of S from X(0) = i, by forward iteration through the
// restricted block. Switches to the exact geometric continuation once the
// per-state one-step ratios agree to `ratio_tolerance`.
JointLaw exact_hit_law(const TruncatedChain& chain, const RareSet& S, std::int64_t i,
                       const HitLawOptions& options = {});

// Location pi(.)/pi(S) on S ∩ [1..K] (label 0 for the rest) times Geometric(pi(S)).
JointLaw product_law(const TruncatedChain& chain, const RareSet& S);

// Geometric time law with success probability p on the single label 0.
JointLaw geometric_time_law(double p);

struct TvResult {
  double value = 0.0;  // (1/2) L1 on the represented part + unaccounted mass
  double lower = 0.0;  // (1/2) L1 minus unaccounted mass
};

TvResult tv(const JointLaw& a, const JointLaw& b);

struct HitRecord {
  int location = 0;
  std::int64_t gap = 0;  // time since the previous hit (or since 0)
};

// Faithful simulation from X(0) ~ init, recording the first `count` visits to S.
std::vector<HitRecord> simulate_hits(const RowSampler& sampler, const DistributionOnN& init,
                                     const RareSet& S, std::int64_t count, SplitMix64& rng,
                                     std::uint64_t step_cap = 1'000'000'000ULL);

// P{Poisson(N piS) < mu}.
double poisson_extreme_cdf(double N, double piS, int mu);

// prod_l P{Poisson(N pi((a_l, b_l])) <= mu_l}; overlapping bands are rejected.
double band_visits_joint(Model model, double N,
                         const std::vector<std::pair<std::int64_t, std::int64_t>>& bands,
                         const std::vector<int>& caps);

// sum over nu_1..nu_mu with nu_1 + ... + nu_r <= r - 1 for all r of
// prod_r P{Poisson(lambdas[r-1]) = nu_r}.
double order_stats_pmf(const std::vector<double>& lambdas);

// lambda_r = N pi((n_r, n_{r-1}]) with n_0 = infinity.
std::vector<double> order_stats_lambdas(Model model, double N,
                                        const std::vector<std::int64_t>& thresholds);

// Mass assigned to an explicit top-mu tuple x_1 >= ... >= x_mu by the
// range/multiplicity product formula. Point reading: exactly a_r visits at
// y_r; Interval reading: pi(y_r) replaced by pi([y_r, y_{r-1})).
enum class RangeReading { Point, Interval };

struct RangeMass {
  double product_form = 0.0;     // prod_r e^{-N pi([y_r, y_{r-1}))} (N pi_r)^{a_r} / a_r!
  double normalized_form = 0.0;  // e^{-N pi([y_m, inf))} (N pi([y_m, inf)))^mu prod sigma^{a_r}/a_r!
};

RangeMass range_multiplicity_mass(Model model, double N, const std::vector<std::int64_t>& x,
                                  RangeReading reading);

// Poisson-visit law of the top-mu tuple: as the point reading, except that
// the lowest value y_m may be visited a_m or more times.
double top_tuple_mass(Model model, double N, const std::vector<std::int64_t>& x);

}  // namespace tc
