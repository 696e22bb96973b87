#include "tightchains/compositions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tightchains/chains.hpp"
#include "tightchains/errors.hpp"
#include "tightchains/series.hpp"

namespace tc {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kMaxScaledEntries = 2.0e8;

int truncation_level(double z) {
  int k = 1;
  while (std::pow(z, k) * double(k) * double(k) >= 1e-21) ++k;
  return k;
}

// x z^s in double precision without intermediate overflow.
double scale_big(const BigInt& x, int s, double z) {
  if (x == 0) return 0.0;
  unsigned bits = boost::multiprecision::msb(x);
  if (bits < 900 && s < 600) return x.convert_to<double>() * std::pow(z, s);
  unsigned shift = bits - 60;
  double mant = BigInt(x >> shift).convert_to<double>();
  return std::exp(std::log(mant) + shift * std::log(2.0) + s * std::log(z));
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace

bool is_valid(Model model, const Composition& c) {
  if (c.parts.empty()) return false;
  long long sum = 0;
  for (std::size_t i = 0; i < c.parts.size(); ++i) {
    if (c.parts[i] < 1) return false;
    if (model == Model::Carlitz && i > 0 && c.parts[i] == c.parts[i - 1]) return false;
    sum += c.parts[i];
  }
  return sum == c.nu;
}

BigInt composition_weight(Model model, const std::vector<int>& parts) {
  BigInt w = 1;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    std::int64_t t = transfer_weight(model, parts[i - 1], parts[i]);
    if (t == 0) return 0;
    w *= t;
  }
  return w;
}

CompletionTable CompletionTable::build(Model model, int nu, TableMode mode, const Guards& guards) {
  if (nu < 1) throw DomainError("build_table: nu must be >= 1");
  if (mode == TableMode::Exact && nu > guards.exact_max_nu && !guards.unsafe) {
    throw ResourceError("build_table: exact mode is capped at nu <= " +
                        std::to_string(guards.exact_max_nu) + " (use --unsafe to lift)");
  }
  CompletionTable t;
  t.model_ = model;
  t.nu_ = nu;
  t.mode_ = mode;
  t.z_ = constants(model).z_star;
  const double z = t.z_;
  t.kcut_ = mode == TableMode::Exact ? nu : std::min(nu, truncation_level(z));
  const int kc = t.kcut_;
  double entries = model == Model::Cca ? 2.0 * (nu + 1) : double(kc + 1) * (nu + 1);
  if (entries > kMaxScaledEntries && !guards.unsafe) {
    throw ResourceError("build_table: table would exceed the memory cap");
  }
  t.zpow_.resize(nu + 1);
  t.zpow_[0] = 1;
  for (int k = 1; k <= nu; ++k) t.zpow_[k] = t.zpow_[k - 1] * z;

  t.u_hat_.assign(nu + 1, 0.0);
  t.u_hat_[0] = 1;
  if (model == Model::Cca) {
    t.v_hat_.assign(nu + 1, 0.0);
    if (mode == TableMode::Exact) {
      t.u_.assign(nu + 1, 0);
      t.v_.assign(nu + 1, 0);
      t.u_[0] = 1;
      auto g = [&](int r, int k) -> BigInt {
        if (r == 0) return BigInt(1);
        return (k - 1) * t.u_[r] + t.v_[r];
      };
      for (int s = 1; s <= nu; ++s) {
        BigInt u = 0, v = 0;
        for (int k = 1; k <= s; ++k) {
          BigInt gk = g(s - k, k);
          u += gk;
          v += k * gk;
        }
        t.u_[s] = u;
        t.v_[s] = v;
        t.u_hat_[s] = scale_big(u, s, z);
        t.v_hat_[s] = scale_big(v, s, z);
      }
    } else {
      for (int s = 1; s <= nu; ++s) {
        double u = 0, v = 0;
        const int kmax = std::min(s, kc);
        for (int k = 1; k <= kmax; ++k) {
          int r = s - k;
          double gk = (r == 0 ? 1.0 : (k - 1) * t.u_hat_[r] + t.v_hat_[r]) * t.zpow_[k];
          u += gk;
          v += k * gk;
        }
        t.u_hat_[s] = u;
        t.v_hat_[s] = v;
      }
    }
    return t;
  }

  // Carlitz.
  if (mode == TableMode::Exact) {
    t.u_.assign(nu + 1, 0);
    t.u_[0] = 1;
    t.g_.resize(nu + 1);
    for (int j = 1; j <= nu; ++j) t.g_[j].assign(nu - j + 1, 0);
    t.col_hat_.resize(nu + 1);
    for (int s = 0; s <= nu; ++s) {
      if (s > 0) {
        BigInt u = 0;
        for (int k = 1; k <= s; ++k) u += t.g_[k][s - k];
        t.u_[s] = u;
      }
      for (int j = 1; j + s <= nu; ++j) {
        t.g_[j][s] = j > s ? t.u_[s] : BigInt(t.u_[s] - t.g_[j][s - j]);
      }
    }
    for (int s = 0; s <= nu; ++s) t.u_hat_[s] = scale_big(t.u_[s], s, z);
    for (int j = 1; j <= nu; ++j) {
      t.col_hat_[j].resize(nu - j + 1);
      for (int s = 0; s + j <= nu; ++s) t.col_hat_[j][s] = scale_big(t.g_[j][s], s, z);
    }
    return t;
  }
  t.col_hat_.assign(kc + 1, std::vector<double>());
  for (int j = 1; j <= kc; ++j) t.col_hat_[j].assign(nu + 1, 0.0);
  for (int s = 0; s <= nu; ++s) {
    if (s > 0) {
      double u = 0;
      const int kmax = std::min(s, kc);
      for (int k = 1; k <= kmax; ++k) u += t.col_hat_[k][s - k] * t.zpow_[k];
      t.u_hat_[s] = u;
    }
    for (int j = 1; j <= kc; ++j) {
      t.col_hat_[j][s] = j > s ? t.u_hat_[s] : t.u_hat_[s] - t.zpow_[j] * t.col_hat_[j][s - j];
    }
  }
  return t;
}

BigInt CompletionTable::exact_total(int s) const {
  if (mode_ != TableMode::Exact) throw DomainError("CompletionTable: exact values need exact mode");
  if (s < 0 || s > nu_) throw DomainError("CompletionTable: s out of range");
  return u_[s];
}

BigInt CompletionTable::exact(int s, int j) const {
  if (mode_ != TableMode::Exact) throw DomainError("CompletionTable: exact values need exact mode");
  if (s < 0 || s > nu_ || j < 0) throw DomainError("CompletionTable: index out of range");
  if (s == 0) return BigInt(1);
  if (j == 0) return u_[s];
  if (model_ == Model::Cca) return (j - 1) * u_[s] + v_[s];
  if (j > s) return u_[s];
  if (s + j <= nu_) return g_[j][s];
  return u_[s] - exact(s - j, j);
}

double CompletionTable::scaled(int s, int j) const {
  if (s == 0) return 1.0;
  if (j == 0) return u_hat_[s];
  if (model_ == Model::Cca) return (j - 1) * u_hat_[s] + v_hat_[s];
  if (j > s) return u_hat_[s];
  if (j < static_cast<int>(col_hat_.size()) && s < static_cast<int>(col_hat_[j].size())) {
    return col_hat_[j][s];
  }
  return u_hat_[s] - std::pow(z_, j) * scaled(s - j, j);
}

double CompletionTable::log_total() const { return std::log(u_hat_[nu_]) - nu_ * std::log(z_); }

double CompletionTable::relative_error_bound() const {
  if (mode_ == TableMode::Exact) return 8 * kEps;
  double trunc = model_ == Model::Cca ? 1e-21 * (nu_ + 1) * 4 : 1e-21 * (nu_ + 1);
  return double(nu_ + 1) * (kcut_ + 4) * kEps + trunc;
}

std::vector<BigInt> count_by_parts(Model model, int nu) {
  if (nu < 1) throw DomainError("count_by_parts: nu must be >= 1");
  std::vector<BigInt> out(nu + 1, 0);
  if (model == Model::Cca) {
    std::vector<BigInt> u(nu + 1, 0), v(nu + 1, 0);
    for (int s = 1; s <= nu; ++s) {
      u[s] = 1;
      v[s] = s;
    }
    out[1] = u[nu];
    std::vector<BigInt> nu_layer(nu + 1), nv_layer(nu + 1);
    for (int mu = 2; mu <= nu; ++mu) {
      BigInt p0 = 0, p1 = 0, p2 = 0, q0 = 0, q1 = 0;
      bool any = false;
      for (int s = 1; s <= nu; ++s) {
        int r = s - 1;
        if (r >= 1) {
          p0 += u[r];
          p1 += r * u[r];
          p2 += BigInt(r) * r * u[r];
          q0 += v[r];
          q1 += r * v[r];
        }
        BigInt bs = s;
        nu_layer[s] = (s - 1) * p0 - p1 + q0;
        nv_layer[s] = (bs * bs - bs) * p0 - (2 * s - 1) * p1 + p2 + s * q0 - q1;
        if (nu_layer[s] != 0) any = true;
      }
      std::swap(u, nu_layer);
      std::swap(v, nv_layer);
      out[mu] = u[nu];
      if (!any) break;
    }
    return out;
  }
  // Carlitz: g[j][s] = G_{mu}(s, j) for s + j <= nu.
  std::vector<std::vector<BigInt>> prev(nu + 1), cur(nu + 1);
  for (int j = 1; j <= nu; ++j) {
    prev[j].assign(nu - j + 1, 0);
    prev[j][0] = 1;
    cur[j].assign(nu - j + 1, 0);
  }
  std::vector<BigInt> u(nu + 1, 0);
  for (int mu = 1; mu <= nu; ++mu) {
    bool any = false;
    for (int s = 0; s <= nu; ++s) {
      BigInt acc = 0;
      for (int k = 1; k <= s; ++k) acc += prev[k][s - k];
      u[s] = acc;
      if (acc != 0) any = true;
    }
    out[mu] = u[nu];
    if (!any) break;
    for (int j = 1; j <= nu; ++j) {
      for (int s = 0; s + j <= nu; ++s) {
        cur[j][s] = j <= s ? BigInt(u[s] - prev[j][s - j]) : u[s];
      }
    }
    std::swap(prev, cur);
  }
  return out;
}

std::vector<std::pair<Composition, BigInt>> enumerate(Model model, int nu, const Guards& guards) {
  if (nu < 1) throw DomainError("enumerate: nu must be >= 1");
  if (nu > guards.enumerate_max_nu && !guards.unsafe) {
    throw ResourceError("enumerate: capped at nu <= " + std::to_string(guards.enumerate_max_nu) +
                        " (use --unsafe to lift)");
  }
  std::vector<std::pair<Composition, BigInt>> out;
  std::vector<int> parts;
  auto rec = [&](auto&& self, int remaining, BigInt weight) -> void {
    if (remaining == 0) {
      out.push_back({Composition{parts, nu}, weight});
      return;
    }
    for (int k = 1; k <= remaining; ++k) {
      BigInt w = weight;
      if (!parts.empty()) {
        std::int64_t t = transfer_weight(model, parts.back(), k);
        if (t == 0) continue;
        w *= t;
      }
      parts.push_back(k);
      self(self, remaining - k, w);
      parts.pop_back();
    }
  };
  rec(rec, nu, BigInt(1));
  return out;
}

Composition sample(const CompletionTable& table, SplitMix64& rng) {
  Composition c;
  c.nu = table.nu_;
  const Model model = table.model_;
  int s = table.nu_;
  int j = 0;
  while (s > 0) {
    const double denom = table.scaled(s, j);
    const double u = rng.uniform() * denom;
    const int kmax = std::min(s, table.kcut_);
    double cum = 0;
    int chosen = 0, last = 0;
    for (int k = 1; k <= kmax; ++k) {
      double w = j == 0 ? 1.0 : double(transfer_weight(model, j, k));
      if (w == 0) continue;
      double term = w * table.scaled(s - k, k) * table.zpow_[k];
      if (term > 0) last = k;
      cum += term;
      if (u < cum) {
        chosen = k;
        break;
      }
    }
    if (chosen == 0) chosen = last;
    if (chosen == 0) throw NumericError("sample: empty conditional law");
    c.parts.push_back(chosen);
    s -= chosen;
    j = chosen;
  }
  return c;
}

Rational prefix_probability(const CompletionTable& table, const std::vector<int>& prefix) {
  if (prefix.empty()) return Rational(1);
  long long sum = 0;
  for (int p : prefix) {
    if (p < 1) throw DomainError("prefix_probability: parts must be positive");
    sum += p;
  }
  if (sum > table.nu()) return Rational(0);
  BigInt w = composition_weight(table.model(), prefix);
  if (w == 0) return Rational(0);
  BigInt g = table.exact(table.nu() - static_cast<int>(sum), prefix.back());
  return Rational(w * g, table.total());
}

Rational prefix_probability(Model model, int nu, const std::vector<int>& prefix) {
  CompletionTable t = CompletionTable::build(model, nu, TableMode::Exact);
  return prefix_probability(t, prefix);
}

double chain_prefix_probability(Model model, const std::vector<int>& prefix) {
  if (prefix.empty()) throw DomainError("chain_prefix_probability: prefix must be nonempty");
  for (int p : prefix) {
    if (p < 1) throw DomainError("chain_prefix_probability: parts must be positive");
  }
  double p = initial(model, prefix[0]);
  for (std::size_t r = 1; r < prefix.size(); ++r) p *= transition(model, prefix[r - 1], prefix[r]);
  return p;
}

double PrefixTvReport::max_log_ratio_from(int d) const {
  double best = std::numeric_limits<double>::quiet_NaN();
  for (int e = std::max(d, 0); e < static_cast<int>(max_log_ratio_by_residual.size()); ++e) {
    double v = max_log_ratio_by_residual[e];
    if (std::isnan(v)) continue;
    if (std::isnan(best) || v > best) best = v;
  }
  return best;
}

PrefixTvReport prefix_tv(Model model, int nu, int k, const Guards& guards) {
  if (k < 1) throw DomainError("prefix_tv: k must be >= 1");
  if (nu < 2) throw DomainError("prefix_tv: nu must be >= 2");
  double count = 1;
  for (int r = 0; r < k; ++r) count = count * (nu - 1 - r) / (r + 1);
  if (count > 5e6 && !guards.unsafe) {
    throw ResourceError("prefix_tv: too many prefixes to enumerate");
  }
  CompletionTable table = CompletionTable::build(model, nu, TableMode::Exact, guards);
  PrefixTvReport rep;
  rep.nu = nu;
  rep.k = k;
  double ln = std::log(double(nu));
  rep.threshold = nu - ln * ln;
  rep.max_log_ratio_by_residual.assign(nu + 1, std::numeric_limits<double>::quiet_NaN());
  double l1 = 0, mass_comp = 0, mass_chain = 0;
  for_each_prefix(k, nu - 1, [&](const std::vector<int>& prefix, int sum) {
    double pc = to_double(prefix_probability(table, prefix));
    double pz = chain_prefix_probability(model, prefix);
    if (sum <= rep.threshold) {
      ++rep.prefixes;
      l1 += std::abs(pc - pz);
      mass_comp += pc;
      mass_chain += pz;
    }
    if (pc > 0 && pz > 0) {
      double lr = std::abs(std::log(pc) - std::log(pz));
      double& slot = rep.max_log_ratio_by_residual[nu - sum];
      if (std::isnan(slot) || lr > slot) slot = lr;
    }
  });
  rep.overflow_composition = std::max(0.0, 1 - mass_comp);
  rep.overflow_chain = std::max(0.0, 1 - mass_chain);
  rep.tv = std::min(1.0, 0.5 * (l1 + std::abs(rep.overflow_composition - rep.overflow_chain)));
  return rep;
}

PrefixSplit split_hat_m(const Composition& c) {
  PrefixSplit out;
  double ln = std::log(double(c.nu));
  out.threshold = c.nu - ln * ln;
  long long sum = 0;
  const int M = static_cast<int>(c.parts.size());
  for (int m = 1; m < M; ++m) {
    sum += c.parts[m - 1];
    if (double(sum) <= out.threshold) {
      out.hat_m = m;
    } else {
      break;
    }
  }
  out.prefix.assign(c.parts.begin(), c.parts.begin() + out.hat_m);
  return out;
}

PartsCountStats parts_count_stats(Model model, int nu, const Guards& guards) {
  if (nu > guards.exact_max_nu && !guards.unsafe) {
    throw ResourceError("parts_count_stats: exact mode is capped at nu <= " +
                        std::to_string(guards.exact_max_nu));
  }
  std::vector<BigInt> counts = count_by_parts(model, nu);
  PartsCountStats st;
  st.total = 0;
  for (auto& c : counts) st.total += c;
  BigInt m1 = 0, m2 = 0;
  for (int mu = 0; mu <= nu; ++mu) {
    st.pmf.emplace_back(counts[mu], st.total);
    m1 += mu * counts[mu];
    m2 += BigInt(mu) * mu * counts[mu];
  }
  Rational mean(m1, st.total);
  Rational var = Rational(m2, st.total) - mean * mean;
  st.mean = to_double(mean);
  st.variance = to_double(var);
  return st;
}

}  // namespace tc
