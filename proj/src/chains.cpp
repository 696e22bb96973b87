#include "tightchains/chains.hpp"

#include <algorithm>
#include <cmath>

#include "tightchains/errors.hpp"

namespace tc {

namespace {

constexpr double kRowCutoff = 1e-14;

// sum_{k>n} g(z^k) for a decreasing positive summand, to relative 1e-18.
template <class F>
double carlitz_tail_sum(double z, std::int64_t n, F term) {
  double zk = std::pow(z, static_cast<double>(n + 1));
  double sum = 0;
  for (int it = 0; it < 100000; ++it) {
    double t = term(zk);
    sum += t;
    if (t <= 1e-18 * sum || zk == 0) break;
    zk *= z;
  }
  return sum;
}

double carlitz_r(double z, std::int64_t n) {
  return carlitz_tail_sum(z, n, [](double x) { return x / (1 + x); });
}

int row_length(Model model) {
  double z = constants(model).z_star;
  int k = 1;
  while (std::pow(z, k) * (k + 1.0) * (k + 1.0) > 1e-19) ++k;
  return k;
}

std::vector<double> build_cdf(Model model, std::int64_t i) {
  std::vector<double> cdf;
  double cum = 0;
  for (std::int64_t k = 1; k < 100000; ++k) {
    double p = (i == 0) ? limiting_transition(model, k) : transition(model, i, k);
    cum += p;
    cdf.push_back(cum);
    if (cum >= 1 - kRowCutoff && p < kRowCutoff) break;
  }
  return cdf;
}

}  // namespace

double power_tail(double z, std::int64_t n, int p) {
  double zn1 = std::pow(z, static_cast<double>(n + 1));
  double q = 1 - z;
  double nn = static_cast<double>(n);
  switch (p) {
    case 0:
      return zn1 / q;
    case 1:
      return zn1 * ((nn + 1) - nn * z) / (q * q);
    case 2:
      return zn1 * ((nn + 1) * (nn + 1) - (2 * nn * nn + 2 * nn - 1) * z + nn * nn * z * z) /
             (q * q * q);
    default:
      throw DomainError("power_tail: p must be 0, 1 or 2");
  }
}

double transition(Model model, std::int64_t i, std::int64_t k) {
  if (i < 1 || k < 1) throw DomainError("transition: states are positive integers");
  const ModelConstants& c = constants(model);
  double z = c.z_star;
  double zk = std::pow(z, static_cast<double>(k));
  if (model == Model::Cca) {
    return zk * static_cast<double>(i + k - 1) * (static_cast<double>(k) + c.a) /
           (static_cast<double>(i) + c.a);
  }
  if (i == k) return 0.0;
  double zi = std::pow(z, static_cast<double>(i));
  return zk * (1 + zi) / (1 + zk);
}

double limiting_transition(Model model, std::int64_t k) {
  if (k < 1) throw DomainError("limiting_transition: states are positive integers");
  const ModelConstants& c = constants(model);
  double zk = std::pow(c.z_star, static_cast<double>(k));
  if (model == Model::Cca) return zk * (static_cast<double>(k) + c.a);
  return zk / (1 + zk);
}

double stationary(Model model, std::int64_t k) {
  if (k < 1) throw DomainError("stationary: states are positive integers");
  const ModelConstants& c = constants(model);
  double zk = std::pow(c.z_star, static_cast<double>(k));
  if (model == Model::Cca) {
    double ka = static_cast<double>(k) + c.a;
    return zk * ka * ka / c.A;
  }
  return zk / ((1 + zk) * (1 + zk)) / c.A;
}

double initial(Model model, std::int64_t k) { return limiting_transition(model, k); }

double row_tail(Model model, std::int64_t i, std::int64_t n) {
  if (i < 1 || n < 0) throw DomainError("row_tail: need i >= 1, n >= 0");
  const ModelConstants& c = constants(model);
  double z = c.z_star;
  if (model == Model::Cca) {
    double s0 = power_tail(z, n, 0), s1 = power_tail(z, n, 1), s2 = power_tail(z, n, 2);
    double y = s1 + c.a * s0;
    double x = s2 + (c.a - 1) * s1 - c.a * s0;
    double di = static_cast<double>(i);
    return (x + di * y) / (di + c.a);
  }
  double zi = std::pow(z, static_cast<double>(i));
  double r = carlitz_r(z, n);
  if (i > n) r -= zi / (1 + zi);
  return (1 + zi) * std::max(r, 0.0);
}

double sup_row_tail(Model model, std::int64_t n) {
  if (n < 1) return 1.0;
  return row_tail(model, 1, n);
}

double stationary_tail(Model model, std::int64_t n) {
  if (n < 0) throw DomainError("stationary_tail: n must be >= 0");
  const ModelConstants& c = constants(model);
  double z = c.z_star;
  if (model == Model::Cca) {
    double s0 = power_tail(z, n, 0), s1 = power_tail(z, n, 1), s2 = power_tail(z, n, 2);
    return (s2 + 2 * c.a * s1 + c.a * c.a * s0) / c.A;
  }
  return carlitz_tail_sum(z, n, [](double x) { return x / ((1 + x) * (1 + x)); }) / c.A;
}

double initial_tail(Model model, std::int64_t n) {
  if (n < 0) throw DomainError("initial_tail: n must be >= 0");
  const ModelConstants& c = constants(model);
  double z = c.z_star;
  if (model == Model::Cca) return power_tail(z, n, 1) + c.a * power_tail(z, n, 0);
  return carlitz_r(z, n);
}

DistributionOnN DistributionOnN::point(int k) {
  if (k < 1) throw DomainError("DistributionOnN::point: state must be >= 1");
  DistributionOnN d;
  d.mass.assign(k, 0.0);
  d.mass[k - 1] = 1.0;
  return d;
}

DistributionOnN stationary_distribution(Model model, int K) {
  if (K < 1) throw DomainError("stationary_distribution: K must be >= 1");
  DistributionOnN d;
  for (int k = 1; k <= K; ++k) d.mass.push_back(stationary(model, k));
  d.tail = stationary_tail(model, K);
  return d;
}

DistributionOnN initial_distribution(Model model, int K) {
  if (K < 1) throw DomainError("initial_distribution: K must be >= 1");
  DistributionOnN d;
  for (int k = 1; k <= K; ++k) d.mass.push_back(initial(model, k));
  d.tail = initial_tail(model, K);
  return d;
}

MixingDiagnostics mixing_diagnostics(Model model, int K) {
  if (K < 1) throw DomainError("mixing_diagnostics: K must be >= 1");
  const int L = row_length(model);
  // Row 0 is the limiting row.
  std::vector<std::vector<double>> rows(K + 1, std::vector<double>(L));
  for (int i = 0; i <= K; ++i) {
    for (int k = 1; k <= L; ++k) {
      rows[i][k - 1] = i == 0 ? limiting_transition(model, k) : transition(model, i, k);
    }
  }
  MixingDiagnostics out;
  out.delta0 = 2.0;
  for (int i = 0; i <= K; ++i) {
    for (int j = i; j <= K; ++j) {
      double overlap = 0, l1 = 0;
      for (int k = 0; k < L; ++k) {
        overlap += rows[i][k] * rows[j][k];
        l1 += std::abs(rows[i][k] - rows[j][k]);
      }
      if (overlap < out.delta0) {
        out.delta0 = overlap;
        out.argmin_i = i;
        out.argmin_j = j;
      }
      out.rho0 = std::max(out.rho0, l1 / 2);
    }
  }
  return out;
}

TruncatedChain truncate(Model model, int K) {
  if (K < 2) throw DomainError("truncate: K must be >= 2");
  TruncatedChain t;
  t.model = model;
  t.K = K;
  t.matrix.resize(static_cast<std::size_t>(K) * K);
  for (int i = 1; i <= K; ++i) {
    for (int k = 1; k <= K; ++k) {
      t.matrix[static_cast<std::size_t>(i - 1) * K + (k - 1)] = transition(model, i, k);
    }
    t.row_defect.push_back(row_tail(model, i, K));
    t.pi_trunc.push_back(stationary(model, i));
  }
  t.pi_tail = stationary_tail(model, K);
  return t;
}

double stationarity_residual(const TruncatedChain& chain) {
  double worst = 0;
  for (int k = 1; k <= chain.K; ++k) {
    double acc = 0;
    for (int i = 1; i <= chain.K; ++i) acc += chain.pi_trunc[i - 1] * chain.p(i, k);
    worst = std::max(worst, std::abs(acc - chain.pi_trunc[k - 1]));
  }
  return worst;
}

RowSampler::RowSampler(Model model, int cache_rows) : model_(model) {
  cdf_.resize(std::max(cache_rows, 0) + 1);
  for (int i = 1; i <= cache_rows; ++i) cdf_[i] = build_cdf(model, i);
}

int RowSampler::step(int i, SplitMix64& rng) const {
  double u = rng.uniform();
  if (i >= 1 && i < static_cast<int>(cdf_.size())) {
    const std::vector<double>& row = cdf_[i];
    const int len = static_cast<int>(row.size());
    int k = 0;
    while (k < len - 1 && u >= row[k]) ++k;
    return k + 1;
  }
  double cum = 0;
  for (int k = 1;; ++k) {
    double p = transition(model_, i, k);
    cum += p;
    if (u < cum || (cum >= 1 - kRowCutoff && p < kRowCutoff)) return k;
  }
}

int RowSampler::sample(const DistributionOnN& law, SplitMix64& rng) const {
  double u = rng.uniform();
  double cum = 0;
  int last = 1;
  for (int k = 1; k <= law.size(); ++k) {
    double p = law.mass[k - 1];
    if (p > 0) last = k;
    cum += p;
    if (u < cum) return k;
  }
  return last;
}

int step(Model model, int i, SplitMix64& rng) {
  static const RowSampler cca(Model::Cca), carlitz(Model::Carlitz);
  return (model == Model::Cca ? cca : carlitz).step(i, rng);
}

Path simulate_path(const RowSampler& sampler, const DistributionOnN& init, std::int64_t length,
                   SplitMix64& rng) {
  if (length < 0) throw DomainError("simulate_path: length must be >= 0");
  Path path;
  path.start = sampler.sample(init, rng);
  path.states.reserve(static_cast<std::size_t>(length));
  int x = path.start;
  for (std::int64_t t = 0; t < length; ++t) {
    x = sampler.step(x, rng);
    path.states.push_back(x);
  }
  return path;
}

Path simulate_path(Model model, const DistributionOnN& init, std::int64_t length,
                   SplitMix64& rng) {
  RowSampler sampler(model);
  return simulate_path(sampler, init, length, rng);
}

}  // namespace tc
