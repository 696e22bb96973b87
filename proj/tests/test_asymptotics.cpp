#include <doctest.h>

#include <cmath>
#include <vector>

#include "tightchains/asymptotics.hpp"
#include "tightchains/chains.hpp"
#include "tightchains/errors.hpp"

using namespace tc;

namespace {

// Composite Simpson rule for the Erlang(mu) density on [s, s + 60].
double erlang_tail_simpson(int mu, double s) {
  auto dens = [mu](double x) { return std::pow(x, mu - 1) * std::exp(-x) / std::tgamma(mu); };
  const int n = 20000;
  const double a = s, b = s + 60, h = (b - a) / n;
  double acc = dens(a) + dens(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4 : 2) * dens(a + i * h);
  return acc * h / 3;
}

}  // namespace

TEST_CASE("Erlang tail") {
  for (double s : {0.0, 0.3, 1.0, 4.0}) CHECK(gamma_tail(1, s) == doctest::Approx(std::exp(-s)));
  CHECK(gamma_tail(5, 0.0) == 1.0);
  CHECK(gamma_tail(3, 2.0) == doctest::Approx(erlang_tail_simpson(3, 2.0)).epsilon(1e-10));
  CHECK(gamma_tail(4, 0.7) == doctest::Approx(erlang_tail_simpson(4, 0.7)).epsilon(1e-10));
  CHECK_THROWS_AS(gamma_tail(0, 1.0), DomainError);
  CHECK_THROWS_AS(gamma_tail(1, -1.0), DomainError);
}

TEST_CASE("extreme predictions") {
  for (Model m : kAllModels) {
    ExtremePrediction p = predict_extreme(m, 5000, 1, 12);
    CHECK(p.cdf == doctest::Approx(std::exp(-p.lambda)));
    CHECK(p.N0 == static_cast<std::int64_t>(std::floor(constants(m).alpha * 5000)));
    CHECK(p.N1 <= p.N0);
    CHECK(p.N0 <= p.N2);
    // Amplitude form tracks N pi(S_n) once n is large.
    ExtremePrediction q = predict_extreme(m, 5000, 1, 40);
    CHECK(q.lambda / q.lambda_exact == doctest::Approx(1.0).epsilon(m == Model::Cca ? 0.5 : 1e-6));
    // CDF increases in n and decreases in mu.
    CHECK(predict_extreme_cdf(m, 5000, 1, 13) > p.cdf);
    CHECK(predict_extreme_cdf(m, 5000, 2, 12) > p.cdf);
  }
}

TEST_CASE("Carlitz median of the largest parts sits near the centering") {
  const Model m = Model::Carlitz;
  const int nu = 20000;
  for (int mu : {1, 2, 4}) {
    std::int64_t n = 1;
    while (predict_extreme_cdf(m, nu, mu, n) < 0.5) ++n;
    CHECK(std::abs(n - extreme_centering(m, nu, mu)) <= 2.0);
  }
  CHECK(extreme_gap(m, 1) == 0.0);
  CHECK(extreme_gap(m, 4) == doctest::Approx(std::log(4.0) / std::log(1 / constants(m).z_star)));
}

TEST_CASE("W scaling inverts the centering map") {
  for (Model m : kAllModels) {
    std::int64_t N0 = parts_scale(m, 20000);
    const ModelConstants& c = constants(m);
    for (double s : {0.5, 1.0, 2.0}) {
      double r = m == Model::Cca ? std::pow(std::log(double(N0)) / std::log(c.z_star), 2) : 1.0;
      double y = std::log(c.B * N0 * r / s) / std::log(1 / c.z_star);
      CHECK(w_from_part(m, N0, y) == doctest::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("empirical extremes are ordered and scheduling independent") {
  for (Model m : kAllModels) {
    EmpiricalExtremes a = empirical_extremes(m, 2000, 4, 40, 17, 1);
    EmpiricalExtremes b = empirical_extremes(m, 2000, 4, 40, 17, 3);
    CHECK(a.top == b.top);
    CHECK(a.w == b.w);
    for (const auto& row : a.top) {
      REQUIRE(row.size() == 4);
      for (std::size_t r = 1; r < row.size(); ++r) CHECK(row[r - 1] >= row[r]);
    }
    for (const auto& row : a.w) {
      for (std::size_t r = 1; r < row.size(); ++r) CHECK(row[r - 1] <= row[r]);
    }
    CHECK(a.w_tail(1, 0.0) == 1.0);
    EmpiricalExtremes none = empirical_extremes(m, 2000, 1, 0, 1);
    CHECK(none.top.empty());
  }
}

TEST_CASE("log count: exact and amplitude routes agree") {
  for (Model m : kAllModels) {
    Guards g;
    double exact = log_count(m, 300, g);
    g.exact_max_nu = 100;
    double amp = log_count(m, 300, g);
    CHECK(std::abs(exact - amp) < 1e-9);
  }
}

TEST_CASE("Chernoff saddle") {
  for (Model m : kAllModels) {
    const ModelConstants& c = constants(m);
    const int nu = 2000;
    ChernoffPoint center = chernoff_saddle(m, nu, c.alpha * (nu + 1));
    CHECK(std::abs(center.w_bar - 1) < 1e-8);
    CHECK(center.z_bar == doctest::Approx(nu / (nu + 1.0) * c.z_star).epsilon(1e-12));
    for (double m_ : {c.alpha * nu + 10, c.alpha * nu + 40}) {
      ChernoffPoint p = chernoff_saddle(m, nu, m_);
      CHECK(p.w_bar > 1);
      // Saddle equation residual.
      double lhs = p.w_bar * z_prime_of_w(m, p.w_bar) / z_of_w(m, p.w_bar);
      CHECK(std::abs(lhs + m_ / (nu + 1.0)) < 1e-10);
      CHECK(p.z_bar == doctest::Approx(nu / (nu + 1.0) * p.z_w).epsilon(1e-14));
      // The saddle minimizes H over a neighbourhood.
      for (double dw : {-1e-3, 1e-3}) {
        double w = p.w_bar + dw;
        double z = nu / (nu + 1.0) * z_of_w(m, w);
        CHECK(chernoff_exponent(m, nu, m_, w, z) >= p.exponent);
        CHECK(chernoff_exponent(m, nu, m_, p.w_bar, p.z_bar * (1 + dw / 10)) >= p.exponent);
      }
    }
    CHECK(chernoff_saddle(m, nu, c.alpha * nu - 20).w_bar < 1);
    CHECK_THROWS_AS(chernoff_saddle(m, nu, c.alpha * nu + 0.3 * nu), DomainError);
  }
}

TEST_CASE("local expansion of the Chernoff exponent") {
  // Quadratic fit of H(m_bar + d) - H(m_bar) for d = nu^0.6: the curvature is
  // 1 / (beta (nu + 1)), from w_bar'(m_bar) = 1 / (beta (nu + 1)).
  for (Model m : kAllModels) {
    const ModelConstants& c = constants(m);
    const int nu = 20000;
    const double mbar = c.alpha * (nu + 1);
    const double d = std::pow(nu, 0.6);
    double h0 = chernoff_saddle(m, nu, mbar).exponent;
    double hp = chernoff_saddle(m, nu, mbar + d).exponent;
    double hm = chernoff_saddle(m, nu, mbar - d).exponent;
    double curvature = -(hp + hm - 2 * h0) / (d * d);
    CHECK(curvature == doctest::Approx(1 / (c.beta * (nu + 1))).epsilon(0.05));
    // O(1) agreement of the center value with -nu ln z* + ln nu.
    CHECK(std::abs(h0 - (-nu * std::log(c.z_star) + std::log(double(nu)))) < 3);
  }
}

TEST_CASE("rate function is convex in m") {
  for (Model m : kAllModels) {
    const ModelConstants& c = constants(m);
    const int nu = 2000;
    std::vector<double> H;
    for (int j = -8; j <= 8; ++j) H.push_back(chernoff_saddle(m, nu, c.alpha * nu + 5.0 * j).exponent);
    for (std::size_t j = 1; j + 1 < H.size(); ++j) CHECK(-(H[j + 1] + H[j - 1] - 2 * H[j]) >= -1e-8);
  }
}

TEST_CASE("LDP bounds") {
  for (Model m : kAllModels) {
    const ModelConstants& c = constants(m);
    // O(nu) at the center: doubling nu doubles the bound.
    double b1 = ldp_bound(m, 2000, c.alpha * 2000, Side::Upper).saddle_bound;
    double b2 = ldp_bound(m, 4000, c.alpha * 4000, Side::Upper).saddle_bound;
    CHECK(b2 / b1 == doctest::Approx(2.0).epsilon(0.02));
    // Decreasing beyond the center.
    double prev = 1e300;
    for (int j = 1; j <= 8; ++j) {
      LdpBound b = ldp_bound(m, 2000, c.alpha * 2000 + 6.0 * j, Side::Upper);
      CHECK(b.saddle_bound < prev);
      prev = b.saddle_bound;
      CHECK(b.rigorous > 0);
      // Two forms agree within e^3 nu on this grid.
      double ratio = b.saddle_bound / b.gaussian;
      CHECK(ratio < std::exp(3.0) * 2000);
      CHECK(ratio > 1 / (std::exp(3.0) * 2000));
    }
    // The wrong side of the center falls back to w = 1.
    LdpBound low = ldp_bound(m, 2000, c.alpha * 2000 - 30, Side::Upper);
    CHECK(low.saddle.w_bar == 1.0);
  }
}

TEST_CASE("parts-count CLT with the exact pmf") {
  CltReport cca = clt_check(Model::Cca, 300, 0, 1);
  CHECK(cca.exact);
  CHECK(std::abs(cca.mean_over_nu / constants(Model::Cca).alpha - 1) < 0.02);
  CltReport car = clt_check(Model::Carlitz, 300, 0, 1);
  CHECK(std::abs(car.mean_over_nu / constants(Model::Carlitz).alpha - 1) < 0.02);
  CHECK(std::abs(car.standardized_variance - 1) < 0.1);
  CHECK(std::abs(car.skewness) < 0.2);
  CHECK_THROWS_AS(clt_check(Model::Cca, 1000, 1, 1), DomainError);
  std::vector<int> counts{0, 100, 200};
  TailFrequency f = parts_tail_frequency(Model::Cca, 2, counts, 50);
  CHECK(f.value == doctest::Approx(2.0 / 3));
}

TEST_CASE("order-statistics gap law at nu = 20000") {
  const Model m = Model::Carlitz;
  EmpiricalExtremes e = empirical_extremes(m, 20000, 8, 600, 2468);
  for (int mu : {2, 4, 8}) CHECK(std::abs(e.median_gap(mu) - extreme_gap(m, mu)) <= 2.0);
}
