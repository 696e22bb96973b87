#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "tightchains/chains.hpp"
#include "tightchains/compositions.hpp"
#include "tightchains/errors.hpp"
#include "tightchains/series.hpp"

using namespace tc;

namespace {

// All compositions of nu with their weights, by direct recursion.
std::map<std::vector<int>, BigInt> brute_compositions(Model model, int nu) {
  std::map<std::vector<int>, BigInt> out;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int left) {
    if (left == 0) {
      BigInt w = 1;
      for (std::size_t i = 1; i < cur.size(); ++i) {
        int a = cur[i - 1], b = cur[i];
        w *= model == Model::Cca ? a + b - 1 : (a != b ? 1 : 0);
      }
      if (w != 0) out[cur] = w;
      return;
    }
    for (int k = 1; k <= left; ++k) {
      cur.push_back(k);
      rec(left - k);
      cur.pop_back();
    }
  };
  rec(nu);
  return out;
}

double chi2_pvalue(const std::map<std::vector<int>, BigInt>& law, const BigInt& total,
                   const std::map<std::vector<int>, long>& counts, long n) {
  double stat = 0;
  int cells = 0;
  for (const auto& [c, w] : law) {
    double e = n * static_cast<double>(Rational(w, total));
    auto it = counts.find(c);
    double o = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    stat += (o - e) * (o - e) / e;
    ++cells;
  }
  boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace

TEST_CASE("transfer weights and validity") {
  CHECK(transfer_weight(Model::Cca, 2, 3) == 4);
  CHECK(transfer_weight(Model::Carlitz, 2, 2) == 0);
  CHECK(composition_weight(Model::Cca, {2, 3, 1}) == 12);
  CHECK(composition_weight(Model::Carlitz, {1, 2, 2}) == 0);
  CHECK(composition_weight(Model::Cca, {5}) == 1);
  CHECK(is_valid(Model::Carlitz, {{1, 2, 1}, 4}));
  CHECK_FALSE(is_valid(Model::Carlitz, {{1, 1, 2}, 4}));
  CHECK_FALSE(is_valid(Model::Cca, {{1, 2}, 4}));
  CHECK_FALSE(is_valid(Model::Cca, {{}, 0}));
}

TEST_CASE("enumeration, parts DP and series agree exactly") {
  for (Model m : kAllModels) {
    for (int nu = 1; nu <= 12; ++nu) {
      auto brute = brute_compositions(m, nu);
      auto listed = enumerate(m, nu);
      CHECK(listed.size() == brute.size());
      std::vector<BigInt> by_parts(nu + 1, 0);
      for (const auto& [c, w] : listed) {
        CHECK(is_valid(m, c));
        CHECK(brute.at(c.parts) == w);
        by_parts[c.parts.size()] += w;
      }
      CHECK(count_by_parts(m, nu) == by_parts);
      auto series = bivariate_counting_series(m, nu);
      for (int mu = 0; mu <= nu; ++mu) CHECK(series[nu][mu] == by_parts[mu]);
    }
  }
}

TEST_CASE("completion table totals match the counting series") {
  for (Model m : kAllModels) {
    SeriesExpansion s = counting_series(m, 120);
    CompletionTable t = CompletionTable::build(m, 120, TableMode::Exact);
    for (int nu = 1; nu <= 120; ++nu) CHECK(t.exact_total(nu) == s.coefficients[nu]);
    // G(s, j) recursion against its definition at a few points.
    for (int sres : {0, 1, 5, 17}) {
      for (int j : {1, 2, 3, 7}) {
        BigInt direct = sres == 0 ? BigInt(1) : BigInt(0);
        for (int k = 1; k <= sres; ++k) {
          direct += transfer_weight(m, j, k) * t.exact(sres - k, k);
        }
        CHECK(t.exact(sres, j) == direct);
      }
    }
  }
}

TEST_CASE("scaled table tracks the exact one") {
  for (Model m : kAllModels) {
    CompletionTable ex = CompletionTable::build(m, 250, TableMode::Exact);
    CompletionTable sc = CompletionTable::build(m, 250, TableMode::Scaled);
    CHECK(sc.relative_error_bound() < 1e-10);
    double exact_log = static_cast<double>(log(HighReal(ex.total())));
    CHECK(sc.log_total() == doctest::Approx(exact_log).epsilon(1e-12));
    for (int s : {0, 3, 40, 249}) {
      for (int j : {0, 1, 2, 5}) {
        double a = ex.scaled(s, j), b = sc.scaled(s, j);
        CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
      }
    }
  }
}

TEST_CASE("guards") {
  CHECK_THROWS_AS(enumerate(Model::Carlitz, 21), ResourceError);
  CHECK_THROWS_AS(CompletionTable::build(Model::Cca, 301, TableMode::Exact), ResourceError);
  Guards g;
  g.unsafe = true;
  CHECK_NOTHROW(CompletionTable::build(Model::Cca, 301, TableMode::Exact, g));
  CHECK_THROWS_AS(CompletionTable::build(Model::Cca, 0, TableMode::Scaled), DomainError);
}

TEST_CASE("sampler matches the exact law (chi-squared)") {
  for (Model m : kAllModels) {
    for (TableMode mode : {TableMode::Exact, TableMode::Scaled}) {
      const int nu = 8;
      auto law = brute_compositions(m, nu);
      BigInt total = 0;
      for (const auto& kv : law) total += kv.second;
      CompletionTable t = CompletionTable::build(m, nu, mode);
      SplitMix64 rng(20240607, mode == TableMode::Exact ? 1 : 2);
      std::map<std::vector<int>, long> counts;
      const long n = 200000;
      for (long r = 0; r < n; ++r) {
        Composition c = sample(t, rng);
        REQUIRE(is_valid(m, c));
        ++counts[c.parts];
      }
      CHECK(chi2_pvalue(law, total, counts, n) > 1e-4);
    }
  }
}

TEST_CASE("large-nu scaled sampling produces valid compositions") {
  for (Model m : kAllModels) {
    CompletionTable t = CompletionTable::build(m, 5000, TableMode::Scaled);
    SplitMix64 rng(7);
    for (int r = 0; r < 20; ++r) CHECK(is_valid(m, sample(t, rng)));
  }
}

TEST_CASE("prefix probabilities are the exact marginals") {
  for (Model m : kAllModels) {
    const int nu = 9;
    auto law = brute_compositions(m, nu);
    BigInt total = 0;
    for (const auto& kv : law) total += kv.second;
    std::map<std::vector<int>, BigInt> marg;
    for (const auto& [c, w] : law) {
      marg[{c[0]}] += w;
      if (c.size() >= 2) marg[{c[0], c[1]}] += w;
    }
    Rational sum1 = 0;
    for (int a = 1; a <= nu; ++a) {
      Rational p = prefix_probability(m, nu, {a});
      sum1 += p;
      CHECK(p == Rational(marg[{a}], total));
      for (int b = 1; a + b <= nu; ++b) {
        CHECK(prefix_probability(m, nu, {a, b}) == Rational(marg[{a, b}], total));
      }
    }
    CHECK(sum1 == 1);
    CHECK(prefix_probability(m, nu, {nu + 1}) == 0);
  }
}

TEST_CASE("chain prefix law") {
  for (Model m : kAllModels) {
    for (int k = 1; k <= 6; ++k) CHECK(chain_prefix_probability(m, {k}) == doctest::Approx(initial(m, k)));
    CHECK(chain_prefix_probability(m, {2, 3}) ==
          doctest::Approx(initial(m, 2) * transition(m, 2, 3)).epsilon(1e-14));
  }
}

TEST_CASE("prefix enumeration visits C(max_sum, k) prefixes") {
  for (int k = 1; k <= 3; ++k) {
    for (int ms : {k, 5, 9}) {
      std::size_t count = 0;
      for_each_prefix(k, ms, [&](const std::vector<int>& p, int sum) {
        int s = 0;
        for (int v : p) s += v;
        CHECK(s == sum);
        CHECK(sum <= ms);
        ++count;
      });
      double binom = std::round(std::exp(std::lgamma(ms + 1.0) - std::lgamma(k + 1.0) -
                                         std::lgamma(ms - k + 1.0)));
      CHECK(count == static_cast<std::size_t>(binom));
    }
  }
}

TEST_CASE("prefix TV report") {
  PrefixTvReport r = prefix_tv(Model::Cca, 20, 1);
  CHECK(r.tv >= 0);
  CHECK(r.tv < 0.05);
  CHECK(r.threshold == doctest::Approx(20 - std::pow(std::log(20.0), 2)));
  CHECK(r.prefixes == 11);  // first parts 1..11 lie below the threshold
  CHECK(r.max_log_ratio_by_residual.size() == 21);
  CHECK(r.max_log_ratio_from(10) <= r.max_log_ratio_from(5));
}

TEST_CASE("split at the last prefix below nu - ln^2 nu") {
  Composition c{{5, 5, 5, 5}, 20};
  PrefixSplit s = split_hat_m(c);
  // 20 - ln^2 20 = 11.03: prefixes 5, 10 qualify.
  CHECK(s.hat_m == 2);
  CHECK(s.prefix == std::vector<int>{5, 5});
  Composition one{{20}, 20};
  CHECK(split_hat_m(one).hat_m == 0);
}

TEST_CASE("exact parts-count statistics") {
  for (Model m : kAllModels) {
    const int nu = 12;
    auto law = brute_compositions(m, nu);
    BigInt total = 0, m1 = 0;
    for (const auto& [c, w] : law) {
      total += w;
      m1 += w * static_cast<int>(c.size());
    }
    PartsCountStats st = parts_count_stats(m, nu);
    CHECK(st.total == total);
    CHECK(st.mean == doctest::Approx(static_cast<double>(Rational(m1, total))).epsilon(1e-14));
    Rational s = 0;
    for (const auto& q : st.pmf) s += q;
    CHECK(s == 1);
  }
}

TEST_CASE("sampled compositions satisfy the prefix split bracket") {
  for (Model m : kAllModels) {
    for (int nu : {30, 400}) {
      CompletionTable t = CompletionTable::build(m, nu, TableMode::Scaled);
      SplitMix64 rng(31, nu);
      for (int r = 0; r < 200; ++r) {
        Composition c = sample(t, rng);
        PrefixSplit s = split_hat_m(c);
        const int M = static_cast<int>(c.parts.size());
        CHECK(s.hat_m > M - std::pow(std::log(double(nu)), 2) - 1);
        CHECK(s.hat_m < M);
        int sum = 0;
        for (int v : s.prefix) sum += v;
        CHECK(sum <= s.threshold);
        if (s.hat_m < M) CHECK(sum + c.parts[s.hat_m] > s.threshold);
      }
    }
  }
}
