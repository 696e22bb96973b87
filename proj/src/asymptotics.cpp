#include "tightchains/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "tightchains/chains.hpp"
#include "tightchains/errors.hpp"
#include "tightchains/rng.hpp"

namespace tc {

namespace {

double ln_ratio_base(Model model) { return std::log(1.0 / constants(model).z_star); }

// Runs body(r) for r = 0..reps-1 over `jobs` threads in contiguous blocks.
void parallel_replicas(int reps, int jobs, const std::function<void(int)>& body) {
  jobs = std::max(1, std::min(jobs, reps));
  if (jobs == 1) {
    for (int r = 0; r < reps; ++r) body(r);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(jobs);
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int r = t; r < reps; r += jobs) body(r);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

CompletionTable sampling_table(Model model, int nu, const Guards& guards) {
  if (nu < 1) throw DomainError("sampling needs nu >= 1");
  return CompletionTable::build(model, nu, TableMode::Scaled, guards);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::int64_t parts_scale(Model model, int nu) {
  return static_cast<std::int64_t>(std::floor(constants(model).alpha * nu));
}

double extreme_lambda(Model model, double N, double n) {
  const ModelConstants& c = constants(model);
  double base = c.B * N * std::pow(c.z_star, n);
  if (model == Model::Cca) {
    double r = std::log(N) / std::log(c.z_star);
    base *= r * r;
  }
  return base;
}

ExtremePrediction predict_extreme(Model model, int nu, int mu, std::int64_t n) {
  if (nu < 2 || mu < 1 || n < 1) throw DomainError("predict_extreme: need nu >= 2, mu >= 1, n >= 1");
  const ModelConstants& c = constants(model);
  ExtremePrediction p;
  p.model = model;
  p.nu = nu;
  p.mu = mu;
  p.n = n;
  p.N0 = parts_scale(model, nu);
  double spread = 2 * std::sqrt(static_cast<double>(nu)) * std::log(static_cast<double>(nu));
  p.N1 = static_cast<std::int64_t>(std::floor(c.alpha * nu - spread));
  p.N2 = static_cast<std::int64_t>(std::floor(c.alpha * nu + spread));
  p.lambda = extreme_lambda(model, static_cast<double>(p.N0), static_cast<double>(n));
  p.lambda_exact = static_cast<double>(p.N0) * stationary_tail(model, n);
  p.cdf = boost::math::gamma_q(static_cast<double>(mu), p.lambda);
  p.cdf_exact = boost::math::gamma_q(static_cast<double>(mu), p.lambda_exact);
  return p;
}

double predict_extreme_cdf(Model model, int nu, int mu, std::int64_t n) {
  return predict_extreme(model, nu, mu, n).cdf;
}

double w_from_part(Model model, std::int64_t N0, double y) {
  if (N0 < 2) throw DomainError("w_from_part: N0 must be >= 2");
  return extreme_lambda(model, static_cast<double>(N0), y);
}

double gamma_tail(int mu, double s) {
  if (mu < 1 || !(s >= 0)) throw DomainError("gamma_tail: need mu >= 1, s >= 0");
  if (s == 0) return 1.0;
  return boost::math::gamma_q(static_cast<double>(mu), s);
}

double extreme_centering(Model model, int nu, int mu) {
  if (nu < 2 || mu < 1) throw DomainError("extreme_centering: need nu >= 2, mu >= 1");
  double x = static_cast<double>(nu) / mu;
  if (model == Model::Cca) x *= std::pow(std::log(static_cast<double>(nu)), 2);
  return std::log(x) / ln_ratio_base(model);
}

double extreme_gap(Model model, int mu) {
  if (mu < 1) throw DomainError("extreme_gap: mu must be >= 1");
  return std::log(static_cast<double>(mu)) / ln_ratio_base(model);
}

double EmpiricalExtremes::w_tail(int r, double s) const {
  if (w.empty()) return kNaN;
  std::size_t hits = 0;
  for (const auto& row : w) {
    if (static_cast<int>(row.size()) >= r && row[r - 1] >= s) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(w.size());
}

double EmpiricalExtremes::w_tail_sigma(int r, double s) const {
  double p = w_tail(r, s);
  return std::sqrt(p * (1 - p) / static_cast<double>(w.size()));
}

double EmpiricalExtremes::median_gap(int r) const {
  std::vector<double> gaps;
  for (const auto& row : top) {
    if (static_cast<int>(row.size()) >= r) gaps.push_back(row[0] - row[r - 1]);
  }
  return median_of(std::move(gaps));
}

double EmpiricalExtremes::median_part(int r) const {
  std::vector<double> v;
  for (const auto& row : top) {
    if (static_cast<int>(row.size()) >= r) v.push_back(row[r - 1]);
  }
  return median_of(std::move(v));
}

EmpiricalExtremes empirical_extremes(Model model, int nu, int mu, int reps, std::uint64_t seed,
                                     int jobs, const Guards& guards) {
  if (mu < 1 || reps < 0) throw DomainError("empirical_extremes: need mu >= 1, reps >= 0");
  EmpiricalExtremes out;
  out.model = model;
  out.nu = nu;
  out.mu = mu;
  out.N0 = parts_scale(model, nu);
  out.top.resize(reps);
  out.w.resize(reps);
  out.parts.resize(reps);
  if (reps == 0) return out;
  CompletionTable table = sampling_table(model, nu, guards);
  parallel_replicas(reps, jobs, [&](int r) {
    SplitMix64 rng(seed, static_cast<std::uint64_t>(r));
    Composition c = sample(table, rng);
    std::vector<int> parts = c.parts;
    int take = std::min<int>(mu, static_cast<int>(parts.size()));
    std::partial_sort(parts.begin(), parts.begin() + take, parts.end(), std::greater<int>());
    parts.resize(take);
    std::vector<double> ws;
    for (int y : parts) ws.push_back(w_from_part(model, out.N0, y));
    out.parts[r] = static_cast<int>(c.parts.size());
    out.top[r] = std::move(parts);
    out.w[r] = std::move(ws);
  });
  return out;
}

std::vector<int> sample_parts_counts(Model model, int nu, int reps, std::uint64_t seed, int jobs,
                                     const Guards& guards) {
  if (reps < 0) throw DomainError("sample_parts_counts: reps must be >= 0");
  std::vector<int> counts(reps);
  if (reps == 0) return counts;
  CompletionTable table = sampling_table(model, nu, guards);
  parallel_replicas(reps, jobs, [&](int r) {
    SplitMix64 rng(seed, static_cast<std::uint64_t>(r));
    counts[r] = static_cast<int>(sample(table, rng).parts.size());
  });
  return counts;
}

double log_count(Model model, int nu, const Guards& guards) {
  if (nu < 1) throw DomainError("log_count: nu must be >= 1");
  if (nu <= guards.exact_max_nu) {
    BigInt t = counting_series(model, nu).coefficients[nu];
    return static_cast<double>(log(HighReal(t)));
  }
  const ModelConstants& c = constants(model);
  return std::log(c.C) - nu * std::log(c.z_star);
}

double bivariate_generating(Model model, double w, double z) {
  if (model == Model::Cca) {
    double zm = z - 1;
    return w * z * zm * zm * zm / cca_h(w, z);
  }
  return 1.0 / carlitz_h(w, z).value - 1.0;
}

double chernoff_exponent(Model model, int nu, double m, double w, double z) {
  double zw = z_of_w(model, w);
  if (!(z > 0 && z < zw)) throw DomainError("chernoff_exponent: need 0 < z < z(w)");
  return -nu * std::log(z) - m * std::log(w) - std::log(zw - z);
}

namespace {

ChernoffPoint evaluate_point(Model model, int nu, double m, double w, const Guards& guards) {
  ChernoffPoint p;
  p.m = m;
  p.w_bar = w;
  p.z_w = z_of_w(model, w);
  p.z_bar = static_cast<double>(nu) / (nu + 1.0) * p.z_w;
  p.exponent = chernoff_exponent(model, nu, m, w, p.z_bar);
  p.bound = std::exp(p.exponent - log_count(model, nu, guards));
  return p;
}

}  // namespace

ChernoffPoint chernoff_saddle(Model model, int nu, double m, const Guards& guards) {
  if (nu < 1) throw DomainError("chernoff_saddle: nu must be >= 1");
  const double eps = validity_window();
  const double target = -m / (nu + 1.0);
  auto g = [&](double w) { return w * z_prime_of_w(model, w) / z_of_w(model, w) - target; };
  double lo = 1 - eps, hi = 1 + eps;
  double glo = g(lo), ghi = g(hi);
  if (!(glo > 0 && ghi < 0)) {
    throw DomainError("chernoff_saddle: m too far from alpha nu; saddle outside the window");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    double mid = 0.5 * (lo + hi);
    double gm = g(mid);
    if (gm == 0) {
      lo = hi = mid;
      break;
    }
    (gm > 0 ? lo : hi) = mid;
  }
  return evaluate_point(model, nu, m, 0.5 * (lo + hi), guards);
}

LdpBound ldp_bound(Model model, int nu, double m, Side side, const Guards& guards) {
  const ModelConstants& c = constants(model);
  LdpBound b;
  b.side = side;
  b.m = m;
  ChernoffPoint p = chernoff_saddle(model, nu, m, guards);
  bool wrong_side = side == Side::Upper ? p.w_bar < 1 : p.w_bar > 1;
  if (wrong_side) p = evaluate_point(model, nu, m, 1.0, guards);
  b.saddle = p;
  b.saddle_bound = p.bound;
  double log_f = std::log(bivariate_generating(model, p.w_bar, p.z_bar));
  b.rigorous = std::exp(log_f - nu * std::log(p.z_bar) - m * std::log(p.w_bar) -
                        log_count(model, nu, guards));
  double d = m - c.alpha * nu;
  b.gaussian = nu * std::exp(-d * d / (3 * c.beta * nu));
  return b;
}

TwoSidedLdp ldp_two_sided(Model model, int nu, double s, const Guards& guards) {
  if (!(s >= 0)) throw DomainError("ldp_two_sided: s must be >= 0");
  const ModelConstants& c = constants(model);
  TwoSidedLdp t;
  t.s = s;
  t.upper = ldp_bound(model, nu, c.alpha * nu + s, Side::Upper, guards);
  t.lower = ldp_bound(model, nu, c.alpha * nu - s, Side::Lower, guards);
  t.saddle_bound = t.upper.saddle_bound + t.lower.saddle_bound;
  t.rigorous = t.upper.rigorous + t.lower.rigorous;
  t.gaussian = nu * std::exp(-s * s / (3 * c.beta * nu));
  return t;
}

CltReport clt_check(Model model, int nu, int reps, std::uint64_t seed, int jobs,
                    const Guards& guards) {
  const ModelConstants& c = constants(model);
  CltReport r;
  r.model = model;
  r.nu = nu;
  double m1 = 0, m2 = 0, m3 = 0;
  if (nu <= guards.exact_max_nu) {
    r.exact = true;
    PartsCountStats st = parts_count_stats(model, nu, guards);
    std::vector<double> pmf;
    for (const Rational& q : st.pmf) pmf.push_back(static_cast<double>(q));
    for (std::size_t k = 0; k < pmf.size(); ++k) m1 += pmf[k] * k;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      double d = k - m1;
      m2 += pmf[k] * d * d;
      m3 += pmf[k] * d * d * d;
    }
    r.mean = static_cast<double>(st.mean);
    r.variance = static_cast<double>(st.variance);
  } else {
    if (reps < 2) throw DomainError("clt_check: Monte Carlo needs reps >= 2");
    r.reps = reps;
    std::vector<int> counts = sample_parts_counts(model, nu, reps, seed, jobs, guards);
    for (int k : counts) m1 += k;
    m1 /= reps;
    for (int k : counts) {
      double d = k - m1;
      m2 += d * d;
      m3 += d * d * d;
    }
    m2 /= reps;
    m3 /= reps;
    r.mean = m1;
    r.variance = m2 * reps / (reps - 1.0);
    r.mean_sigma = std::sqrt(r.variance / reps);
  }
  r.skewness = m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
  r.mean_over_nu = r.mean / nu;
  r.variance_over_nu = r.variance / nu;
  r.standardized_mean = (r.mean - c.alpha * nu) / std::sqrt(c.beta * nu);
  r.standardized_variance = r.variance / (c.beta * nu);
  return r;
}

TailFrequency parts_tail_frequency(Model model, int nu, const std::vector<int>& counts, double s) {
  TailFrequency f;
  if (counts.empty()) return f;
  double center = constants(model).alpha * nu;
  std::size_t hits = 0;
  for (int k : counts) {
    if (std::abs(k - center) >= s) ++hits;
  }
  double n = static_cast<double>(counts.size());
  f.value = hits / n;
  f.sigma = std::sqrt(f.value * (1 - f.value) / n);
  return f;
}

}  // namespace tc
