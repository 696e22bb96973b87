#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tightchains/chains.hpp"
#include "tightchains/errors.hpp"
#include "tightchains/hitting.hpp"

using namespace tc;

namespace {

// Plain dense solve of (I - Q) x = 1 on S^c ∩ [1..K].
std::vector<double> dense_expected_hits(const TruncatedChain& t, const RareSet& S) {
  std::vector<int> states;
  for (int i = 1; i <= t.K; ++i) {
    if (!S.contains(i)) states.push_back(i);
  }
  const int n = static_cast<int>(states.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) A(a, b) -= t.p(states[a], states[b]);
  }
  Eigen::VectorXd x = A.fullPivLu().solve(Eigen::VectorXd::Ones(n));
  return {x.data(), x.data() + n};
}

double poisson_pmf(int k, double l) { return std::exp(k * std::log(l) - l - std::lgamma(k + 1.0)); }

}  // namespace

TEST_CASE("rare sets") {
  RareSet S = RareSet::upper(5);
  CHECK_FALSE(S.contains(5));
  CHECK(S.contains(6));
  CHECK(S.unbounded());
  RareSet B = RareSet::band(3, 7);
  CHECK(B.contains(4));
  CHECK_FALSE(B.contains(8));
  CHECK_FALSE(B.unbounded());
  for (Model m : kAllModels) {
    CHECK(S.stationary_mass(m) == doctest::Approx(stationary_tail(m, 5)).epsilon(1e-14));
    double direct = 0;
    for (int k = 4; k <= 7; ++k) direct += transition(m, 2, k);
    CHECK(B.entry_probability(m, 2) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(RareSet::all().stationary_mass(m) == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(RareSet::upper(-1), DomainError);
  CHECK_THROWS_AS(RareSet::band(4, 2), DomainError);
}

TEST_CASE("expected hitting times: direct, fixed point and dense oracle agree") {
  for (Model m : kAllModels) {
    TruncatedChain t = truncate(m, 80);
    for (int n : {3, 6}) {
      RareSet S = RareSet::upper(n);
      HitSolution d = expected_hits(t, S, SolverKind::Direct);
      HitSolution f = expected_hits(t, S, SolverKind::FixedPoint);
      std::vector<double> o = dense_expected_hits(t, S);
      REQUIRE(d.values.size() == o.size());
      for (std::size_t a = 0; a < o.size(); ++a) {
        CHECK(d.values[a] == doctest::Approx(o[a]).epsilon(1e-10));
        CHECK(f.values[a] == doctest::Approx(o[a]).epsilon(1e-9));
      }
      CHECK(d.residual <= 1e-10);
      CHECK(d.leak == 0.0);
    }
  }
}

TEST_CASE("Kac identity with truncation beyond K") {
  for (Model m : kAllModels) {
    for (int K : {30, 120}) {
      TruncatedChain t = truncate(m, K);
      for (int n : {2, 5, 9}) {
        RareSet S = RareSet::upper(n);
        HitSolution h = expected_hits(t, S);
        CHECK(kac_sum(t, S, h) == doctest::Approx(1.0).epsilon(1e-9));
      }
      // A band leaves S^c unbounded: chains escaping beyond K are lost, so
      // the defect is of order leak * max E[T].
      RareSet band = RareSet::band(2, 4);
      HitSolution h = expected_hits(t, band);
      double emax = *std::max_element(h.values.begin(), h.values.end());
      CHECK(std::abs(kac_sum(t, band, h) - 1) <= 1e-12 + 5 * h.leak * emax);
      if (K == 120) CHECK(kac_sum(t, band, h) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("hitting moments match the exact hit-time law") {
  for (Model m : kAllModels) {
    TruncatedChain t = truncate(m, 100);
    RareSet S = RareSet::upper(4);
    auto mom = hit_moments(t, S, 2);
    for (int i : {1, 3, 7}) {
      JointLaw law = exact_hit_law(t, S, i);
      CHECK(law.total_mass() + law.unaccounted == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(law.expected_time() == doctest::Approx(mom[0].at(i, S)).epsilon(1e-7));
      // Second moment from the explicit block plus the geometric tail.
      double m2 = 0;
      const int T = law.explicit_steps();
      for (int tau = 1; tau <= T; ++tau) {
        for (std::size_t l = 0; l < law.labels.size(); ++l) m2 += double(tau) * tau * law.mass(tau, l);
      }
      double r = 1 - law.omega;
      for (double amp : law.tail_amp) {
        // sum_{k>=1} (T+k)^2 r^k
        double s0 = r / (1 - r), s1 = r / ((1 - r) * (1 - r)), s2 = r * (1 + r) / std::pow(1 - r, 3);
        m2 += amp * (double(T) * T * s0 + 2.0 * T * s1 + s2);
      }
      CHECK(m2 == doctest::Approx(mom[1].at(i, S)).epsilon(1e-6));
      // First row of the law is the kernel row into S.
      for (std::size_t l = 0; l < law.labels.size(); ++l) {
        if (law.labels[l] > 0) CHECK(law.mass(1, l) == doctest::Approx(transition(m, i, law.labels[l])));
      }
    }
  }
}

TEST_CASE("Perron data against a dense eigen solve") {
  for (Model m : kAllModels) {
    TruncatedChain t = truncate(m, 60);
    RareSet S = RareSet::upper(6);
    PerronData p = perron(t, S, mixing_diagnostics(m, 60).delta0);
    const int n = static_cast<int>(p.states.size());
    Eigen::MatrixXd Q(n, n);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) Q(a, b) = t.p(p.states[a], p.states[b]);
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(Q);
    double lam = es.eigenvalues().real().maxCoeff();
    CHECK(p.lambda == doctest::Approx(lam).epsilon(1e-12));
    CHECK(p.cw_lower <= p.one_minus_lambda);
    CHECK(p.one_minus_lambda <= p.cw_upper);
    CHECK(p.residual < 1e-12);
    double fmin = 1e300;
    for (double v : p.f) fmin = std::min(fmin, v);
    CHECK(fmin == doctest::Approx(1.0));
    CHECK(1 - p.lambda >= 0);
    CHECK(1 - p.lambda <= p.eps_n + 1e-15);
  }
}

TEST_CASE("product law and total variation") {
  for (Model m : kAllModels) {
    TruncatedChain t = truncate(m, 60);
    RareSet S = RareSet::upper(5);
    JointLaw prod = product_law(t, S);
    CHECK(prod.total_mass() + prod.unaccounted == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tv(prod, prod).value == doctest::Approx(0.0));
    JointLaw law = exact_hit_law(t, S, 2);
    TvResult d = tv(law, prod);
    CHECK(d.lower <= d.value);
    CHECK(d.value < 3 * sup_row_tail(m, 5));
  }
  // Two geometric laws against a brute-force sum.
  const double p = 0.013, q = 0.021;
  double brute = 0;
  for (int k = 1; k < 200000; ++k) brute += std::abs(p * std::pow(1 - p, k - 1) - q * std::pow(1 - q, k - 1));
  CHECK(tv(geometric_time_law(p), geometric_time_law(q)).value == doctest::Approx(brute / 2).epsilon(1e-9));
}

TEST_CASE("simulated first hits agree with the exact mean") {
  Model m = Model::Carlitz;
  TruncatedChain t = truncate(m, 60);
  RareSet S = RareSet::upper(5);
  double exact = expected_hits(t, S).at(1, S);
  RowSampler sampler(m);
  const int reps = 40000;
  double s = 0, s2 = 0;
  for (int r = 0; r < reps; ++r) {
    SplitMix64 rng(3, r);
    auto h = simulate_hits(sampler, DistributionOnN::point(1), S, 1, rng);
    REQUIRE(h.size() == 1);
    CHECK(S.contains(h[0].location));
    s += h[0].gap;
    s2 += double(h[0].gap) * h[0].gap;
  }
  double mean = s / reps, sd = std::sqrt((s2 / reps - mean * mean) / reps);
  CHECK(std::abs(mean - exact) < 4 * sd);
  SplitMix64 rng(1);
  CHECK_THROWS_AS(simulate_hits(sampler, DistributionOnN::point(1), RareSet::upper(60), 1, rng, 1000),
                  ResourceError);
}

TEST_CASE("Poisson extreme-value formulas") {
  CHECK(poisson_extreme_cdf(1000, 0.002, 1) == doctest::Approx(std::exp(-2.0)));
  CHECK(poisson_extreme_cdf(1000, 0.002, 2) == doctest::Approx(3 * std::exp(-2.0)));
  // Order statistics against a brute-force nested sum.
  std::vector<double> l{0.7, 1.3, 0.4};
  double brute = 0;
  for (int a = 0; a <= 0; ++a) {
    for (int b = 0; a + b <= 1; ++b) {
      for (int c = 0; a + b + c <= 2; ++c) brute += poisson_pmf(a, l[0]) * poisson_pmf(b, l[1]) * poisson_pmf(c, l[2]);
    }
  }
  CHECK(order_stats_pmf(l) == doctest::Approx(brute).epsilon(1e-14));
  CHECK(order_stats_pmf({2.0}) == doctest::Approx(std::exp(-2.0)));
  for (Model m : kAllModels) {
    auto lam = order_stats_lambdas(m, 1e4, {12, 10});
    CHECK(lam[0] == doctest::Approx(1e4 * stationary_tail(m, 12)));
    CHECK(lam[1] == doctest::Approx(1e4 * (stationary_tail(m, 10) - stationary_tail(m, 12))));
    double j = band_visits_joint(m, 1e4, {{12, kInfinity}, {8, 10}}, {0, 2});
    double l1 = 1e4 * stationary_tail(m, 12);
    double l2 = 1e4 * (stationary_tail(m, 8) - stationary_tail(m, 10));
    double e2 = std::exp(-l1) * std::exp(-l2) * (1 + l2 + l2 * l2 / 2);
    CHECK(j == doctest::Approx(e2).epsilon(1e-12));
    CHECK_THROWS_AS(band_visits_joint(m, 10, {{1, 5}, {4, 8}}, {1, 1}), DomainError);
  }
}

TEST_CASE("top-tuple law sums to one and matches the maximum law") {
  for (Model m : kAllModels) {
    const double N = 60;
    for (int x = 1; x < 30; ++x) {
      double got = top_tuple_mass(m, N, {x});
      double want = std::exp(-N * stationary_tail(m, x)) - std::exp(-N * stationary_tail(m, x - 1));
      CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
    double total = 0;
    for (int x1 = 1; x1 < 60; ++x1) {
      for (int x2 = 1; x2 <= x1; ++x2) total += top_tuple_mass(m, N, {x1, x2});
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    RangeMass rm = range_multiplicity_mass(m, N, {9, 7, 7}, RangeReading::Point);
    CHECK(rm.product_form > 0);
    CHECK(rm.normalized_form > 0);
    RangeMass ri = range_multiplicity_mass(m, N, {9, 7, 7}, RangeReading::Interval);
    CHECK(ri.product_form >= rm.product_form);
    CHECK_THROWS_AS(top_tuple_mass(m, N, {3, 5}), DomainError);
  }
}
