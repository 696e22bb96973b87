#include "tightchains/hitting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "tightchains/errors.hpp"

namespace tc {

namespace {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// p(i, (lo, hi]) with hi = kInfinity allowed.
double band_mass(Model model, std::int64_t i, std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return 0.0;
  double upper = hi == kInfinity ? 0.0 : row_tail(model, i, hi);
  return std::max(0.0, row_tail(model, i, lo) - upper);
}

double stationary_band(Model model, std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return 0.0;
  double upper = hi == kInfinity ? 0.0 : stationary_tail(model, hi);
  return std::max(0.0, stationary_tail(model, lo) - upper);
}

// S ∩ (K, inf) as bands.
std::vector<std::pair<std::int64_t, std::int64_t>> beyond(const RareSet& S, int K) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (auto [a, b] : S.bands) {
    std::int64_t lo = std::max<std::int64_t>(a, K);
    if (b > lo) out.emplace_back(lo, b);
  }
  return out;
}

// The restricted block and its exits, shared by all solvers.
struct Block {
  Model model = Model::Cca;
  int K = 0;
  std::vector<int> states;       // S^c ∩ [1..K]
  std::vector<int> index;        // state -> position or -1
  std::vector<double> q;         // row-major |C| x |C|
  std::vector<double> exit_s;    // p(i, S)
  std::vector<double> leak;      // p(i, (K, inf) \ S)
  std::size_t n() const { return states.size(); }
  double Q(std::size_t a, std::size_t b) const { return q[a * n() + b]; }
};

Block make_block(const TruncatedChain& chain, const RareSet& S) {
  Block B;
  B.model = chain.model;
  B.K = chain.K;
  B.index.assign(chain.K + 1, -1);
  for (int i = 1; i <= chain.K; ++i) {
    if (!S.contains(i)) {
      B.index[i] = static_cast<int>(B.states.size());
      B.states.push_back(i);
    }
  }
  const std::size_t n = B.states.size();
  B.q.resize(n * n);
  auto far = beyond(S, chain.K);
  for (std::size_t a = 0; a < n; ++a) {
    int i = B.states[a];
    for (std::size_t b = 0; b < n; ++b) B.q[a * n + b] = chain.p(i, B.states[b]);
    B.exit_s.push_back(S.entry_probability(chain.model, i));
    double far_s = 0;
    for (auto [lo, hi] : far) far_s += band_mass(chain.model, i, lo, hi);
    B.leak.push_back(std::max(0.0, chain.row_defect[i - 1] - far_s));
  }
  return B;
}

// (A x)_i = out_i x_i + sum_{j != i} Q_ij (x_i - x_j), A = I - Q.
LVector apply_laplacian(const Block& B, const LVector& x) {
  const std::size_t n = B.n();
  LVector y(n);
  for (std::size_t a = 0; a < n; ++a) {
    long double acc = (static_cast<long double>(B.exit_s[a]) + B.leak[a]) * x[a];
    for (std::size_t b = 0; b < n; ++b) {
      if (b != a) acc += static_cast<long double>(B.Q(a, b)) * (x[a] - x[b]);
    }
    y[a] = acc;
  }
  return y;
}

struct DirectSolver {
  const Block& B;
  Eigen::PartialPivLU<LMatrix> lu;

  explicit DirectSolver(const Block& block) : B(block) {
    const std::size_t n = B.n();
    LMatrix A(n, n);
    for (std::size_t a = 0; a < n; ++a) {
      long double diag = static_cast<long double>(B.exit_s[a]) + B.leak[a];
      for (std::size_t b = 0; b < n; ++b) {
        if (b == a) continue;
        A(a, b) = -static_cast<long double>(B.Q(a, b));
        diag += B.Q(a, b);
      }
      A(a, a) = diag;
    }
    lu.compute(A);
  }

  std::vector<double> solve(const std::vector<double>& rhs, double& residual) const {
    const std::size_t n = B.n();
    LVector b(n);
    for (std::size_t a = 0; a < n; ++a) b[a] = rhs[a];
    LVector x = lu.solve(b);
    for (int it = 0; it < 3; ++it) {
      LVector r = b - apply_laplacian(B, x);
      x += lu.solve(r);
    }
    LVector r = b - apply_laplacian(B, x);
    long double scale = b.cwiseAbs().maxCoeff() + 2 * x.cwiseAbs().maxCoeff();
    residual = static_cast<double>(r.cwiseAbs().maxCoeff() / std::max(scale, 1.0L));
    std::vector<double> out(n);
    for (std::size_t a = 0; a < n; ++a) out[a] = static_cast<double>(x[a]);
    return out;
  }
};

std::vector<double> fixed_point_solve(const Block& B, const std::vector<double>& rhs,
                                      double& residual, int& iterations) {
  const std::size_t n = B.n();
  std::vector<double> x(n, 0.0), y(n);
  double prev_inc = 0;
  for (int it = 1; it <= 10'000'000; ++it) {
    double inc = 0, xmax = 0;
    for (std::size_t a = 0; a < n; ++a) {
      double acc = rhs[a];
      for (std::size_t b = 0; b < n; ++b) acc += B.Q(a, b) * x[b];
      y[a] = acc;
      inc = std::max(inc, std::abs(y[a] - x[a]));
      xmax = std::max(xmax, std::abs(y[a]));
    }
    x.swap(y);
    double rate = prev_inc > 0 ? std::min(inc / prev_inc, 1 - 1e-16) : 0.0;
    prev_inc = inc;
    if (it > 2 && inc * rate / (1 - rate) <= 1e-13 * xmax) {
      iterations = it;
      LVector lx(n);
      for (std::size_t a = 0; a < n; ++a) lx[a] = x[a];
      LVector Ax = apply_laplacian(B, lx);
      long double r = 0;
      for (std::size_t a = 0; a < n; ++a) r = std::max(r, std::abs(Ax[a] - rhs[a]));
      residual = static_cast<double>(r / std::max<long double>(1.0L, 2 * xmax));
      return x;
    }
  }
  throw NumericError("fixed-point iteration did not converge");
}

std::vector<HitSolution> solve_moments(const TruncatedChain& chain, const RareSet& S,
                                       int max_order, SolverKind solver) {
  if (max_order < 1) throw DomainError("hit_moments: order must be >= 1");
  Block B = make_block(chain, S);
  const std::size_t n = B.n();
  std::vector<HitSolution> out;
  double max_leak = 0;
  for (double l : B.leak) max_leak = std::max(max_leak, l);
  std::unique_ptr<DirectSolver> direct;
  if (solver == SolverKind::Direct && n > 0) direct = std::make_unique<DirectSolver>(B);
  for (int k = 1; k <= max_order; ++k) {
    HitSolution sol;
    sol.model = chain.model;
    sol.states = B.states;
    sol.leak = max_leak;
    sol.order = k;
    for (auto& prev : out) sol.lower.push_back(prev.values);
    std::vector<double> rhs(n, 1.0);
    for (int r = 1; r < k; ++r) {
      double binom = std::round(std::exp(std::lgamma(k + 1.0) - std::lgamma(r + 1.0) -
                                         std::lgamma(k - r + 1.0)));
      const std::vector<double>& er = out[r - 1].values;
      for (std::size_t a = 0; a < n; ++a) {
        double acc = 0;
        for (std::size_t b = 0; b < n; ++b) acc += B.Q(a, b) * er[b];
        rhs[a] += binom * acc;
      }
    }
    if (n == 0) {
      sol.values = {};
    } else if (direct) {
      sol.values = direct->solve(rhs, sol.residual);
      sol.iterations = 1;
    } else {
      sol.values = fixed_point_solve(B, rhs, sol.residual, sol.iterations);
    }
    if (!(sol.residual <= 1e-10)) {
      throw NumericError("hitting system residual " + std::to_string(sol.residual) +
                         " exceeds 1e-10");
    }
    out.push_back(std::move(sol));
  }
  return out;
}

double log_pois(int k, double lambda) {
  if (lambda == 0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return k * std::log(lambda) - lambda - std::lgamma(k + 1.0);
}

double geometric_abs_sum(double alpha, double wa, double beta, double wb) {
  if (alpha == 0 && beta == 0) return 0.0;
  if (alpha == 0) return beta * (1 - wb) / wb;
  if (beta == 0) return alpha * (1 - wa) / wa;
  const double ra = 1 - wa, rb = 1 - wb;
  if (wa == wb) return std::abs(alpha - beta) * ra / wa;
  const double la = std::log1p(-wa), lb = std::log1p(-wb);
  const double full_a = alpha * ra / wa, full_b = beta * rb / wb;
  double mstar = std::log(beta / alpha) / (la - lb);
  if (!(mstar >= 1) || std::isinf(mstar)) return std::abs(full_a - full_b);
  double M = std::floor(mstar);
  auto partial = [](double amp, double w, double l, double r, double m) {
    return amp * r * (-std::expm1(m * l)) / w;
  };
  double head = partial(alpha, wa, la, ra, M) - partial(beta, wb, lb, rb, M);
  double tail = alpha * std::exp((M + 1) * la) / wa - beta * std::exp((M + 1) * lb) / wb;
  return std::abs(head) + std::abs(tail);
}

}  // namespace

RareSet RareSet::upper(std::int64_t n) {
  if (n < 0) throw DomainError("RareSet::upper: n must be >= 0");
  return RareSet{{{n, kInfinity}}};
}

RareSet RareSet::band(std::int64_t a, std::int64_t b) {
  if (a < 0 || b < a) throw DomainError("RareSet::band: need 0 <= a <= b");
  return RareSet{{{a, b}}};
}

RareSet RareSet::all() { return upper(0); }

bool RareSet::contains(std::int64_t k) const {
  for (auto [a, b] : bands) {
    if (k > a && k <= b) return true;
  }
  return false;
}

bool RareSet::unbounded() const {
  for (auto [a, b] : bands) {
    if (b == kInfinity) return true;
  }
  return false;
}

double RareSet::stationary_mass(Model model) const {
  double m = 0;
  for (auto [a, b] : bands) m += stationary_band(model, a, b);
  return m;
}

double RareSet::entry_probability(Model model, std::int64_t i) const {
  double m = 0;
  for (auto [a, b] : bands) m += band_mass(model, i, a, b);
  return m;
}

double HitSolution::at(std::int64_t i, const RareSet& S) const {
  if (i >= 1 && !S.contains(i)) {
    auto it = std::lower_bound(states.begin(), states.end(), static_cast<int>(i));
    if (it != states.end() && *it == i) return values[it - states.begin()];
  }
  // One step from i: E_i[T^k] = b(i, k) + sum_j p(i, j) E_j[T^k].
  std::vector<double> row(states.size());
  for (std::size_t b = 0; b < states.size(); ++b) row[b] = transition(model, i, states[b]);
  double value = 1.0;
  for (int r = 1; r < order; ++r) {
    double binom = std::round(std::exp(std::lgamma(order + 1.0) - std::lgamma(r + 1.0) -
                                       std::lgamma(order - r + 1.0)));
    double acc = 0;
    for (std::size_t b = 0; b < states.size(); ++b) acc += row[b] * lower[r - 1][b];
    value += binom * acc;
  }
  for (std::size_t b = 0; b < states.size(); ++b) value += row[b] * values[b];
  return value;
}

HitSolution expected_hits(const TruncatedChain& chain, const RareSet& S, SolverKind solver) {
  return solve_moments(chain, S, 1, solver).front();
}

std::vector<HitSolution> hit_moments(const TruncatedChain& chain, const RareSet& S, int max_order,
                                     SolverKind solver) {
  return solve_moments(chain, S, max_order, solver);
}

double kac_sum(const TruncatedChain& chain, const RareSet& S, const HitSolution& hits) {
  double sum = 0;
  for (int k = 1; k <= chain.K; ++k) {
    if (S.contains(k)) sum += chain.pi_trunc[k - 1] * hits.at(k, S);
  }
  // States of S beyond K: pi(S ∩ (K, inf)) + sum_j x_j pi(j) p(j, S ∩ (K, inf)).
  for (auto [lo, hi] : beyond(S, chain.K)) {
    sum += stationary_band(chain.model, lo, hi);
    for (std::size_t b = 0; b < hits.states.size(); ++b) {
      int j = hits.states[b];
      sum += hits.values[b] * stationary(chain.model, j) * band_mass(chain.model, j, lo, hi);
    }
  }
  return sum;
}

PerronData perron(const TruncatedChain& chain, const RareSet& S, double delta0) {
  Block B = make_block(chain, S);
  const std::size_t n = B.n();
  if (n == 0) throw DomainError("perron: the complement of S is empty");
  PerronData out;
  out.states = B.states;
  for (std::size_t a = 0; a < n; ++a) out.eps_n = std::max(out.eps_n, B.exit_s[a]);
  std::vector<double> f(n, 1.0), d(n);
  double lo = 0, hi = 0, residual = 1;
  int it = 0;
  for (; it < 200000; ++it) {
    // d = (I - Q) f in the exit form.
    for (std::size_t a = 0; a < n; ++a) {
      double acc = f[a] * (B.exit_s[a] + B.leak[a]);
      for (std::size_t b = 0; b < n; ++b) {
        if (b != a) acc += B.Q(a, b) * (f[a] - f[b]);
      }
      d[a] = acc;
    }
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (std::size_t a = 0; a < n; ++a) {
      lo = std::min(lo, d[a] / f[a]);
      hi = std::max(hi, d[a] / f[a]);
    }
    double mid = (lo + hi) / 2;
    double fmax = *std::max_element(f.begin(), f.end());
    residual = 0;
    for (std::size_t a = 0; a < n; ++a) residual = std::max(residual, std::abs(d[a] - mid * f[a]));
    residual /= fmax;
    if (residual <= 1e-15 && (hi - lo) <= 1e-9 * std::abs(mid)) break;
    if (residual <= 1e-15 && it > 50) break;
    double gmin = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
      f[a] = f[a] - d[a];
      gmin = std::min(gmin, f[a]);
    }
    for (auto& v : f) v /= gmin;
  }
  if (residual > 1e-10) throw NumericError("perron: power iteration stagnated");
  out.iterations = it;
  out.cw_lower = lo;
  out.cw_upper = hi;
  out.one_minus_lambda = (lo + hi) / 2;
  out.lambda = 1 - out.one_minus_lambda;
  out.residual = residual;
  double fmin = *std::min_element(f.begin(), f.end());
  for (auto& v : f) v /= fmin;
  out.f = f;
  if (!std::isnan(delta0) && 6 * out.eps_n < delta0) {
    out.f_bound = 1 / (1 - 6 * out.eps_n / delta0);
  } else {
    out.f_bound = std::numeric_limits<double>::infinity();
  }
  return out;
}

double JointLaw::mass(int tau, std::size_t loc) const {
  if (tau < 1) return 0.0;
  if (tau <= explicit_steps()) return table[tau - 1][loc];
  if (tail_amp.empty()) return 0.0;
  return tail_amp[loc] * std::exp((tau - explicit_steps()) * std::log1p(-omega));
}

double JointLaw::total_mass() const {
  double m = 0;
  for (auto& row : table) {
    for (double v : row) m += v;
  }
  for (double a : tail_amp) m += a * (1 - omega) / omega;
  return m;
}

double JointLaw::expected_time() const {
  double e = 0;
  for (int t = 0; t < explicit_steps(); ++t) {
    for (double v : table[t]) e += (t + 1.0) * v;
  }
  const double E = explicit_steps();
  for (double a : tail_amp) e += a * (E * (1 - omega) / omega + (1 - omega) / (omega * omega));
  return e;
}

JointLaw JointLaw::time_marginal() const {
  JointLaw m;
  m.labels = {0};
  m.omega = omega;
  m.unaccounted = unaccounted;
  for (auto& row : table) {
    double s = 0;
    for (double v : row) s += v;
    m.table.push_back({s});
  }
  if (!tail_amp.empty()) {
    double s = 0;
    for (double a : tail_amp) s += a;
    m.tail_amp = {s};
  }
  return m;
}

std::vector<double> JointLaw::location_marginal() const {
  std::vector<double> out(labels.size(), 0.0);
  for (auto& row : table) {
    for (std::size_t l = 0; l < row.size(); ++l) out[l] += row[l];
  }
  for (std::size_t l = 0; l < tail_amp.size(); ++l) out[l] += tail_amp[l] * (1 - omega) / omega;
  return out;
}

JointLaw exact_hit_law(const TruncatedChain& chain, const RareSet& S, std::int64_t i,
                       const HitLawOptions& options) {
  if (i < 1) throw DomainError("exact_hit_law: initial state must be >= 1");
  Block B = make_block(chain, S);
  const Model model = chain.model;
  const std::size_t n = B.n();
  JointLaw law;
  std::vector<int> in_s;
  for (int k = 1; k <= chain.K; ++k) {
    if (S.contains(k)) in_s.push_back(k);
  }
  auto far = beyond(S, chain.K);
  law.labels = in_s;
  const bool has_far = !far.empty();
  if (has_far) law.labels.push_back(0);
  const std::size_t L = law.labels.size();

  auto hit_row = [&](std::int64_t from, std::vector<double>& row) {
    row.assign(L, 0.0);
    for (std::size_t l = 0; l < in_s.size(); ++l) row[l] = transition(model, from, in_s[l]);
    if (has_far) {
      double m = 0;
      for (auto [lo, hi] : far) m += band_mass(model, from, lo, hi);
      row[L - 1] = m;
    }
  };
  std::vector<std::vector<double>> H(n);
  for (std::size_t a = 0; a < n; ++a) hit_row(B.states[a], H[a]);

  // tau = 1 from i.
  std::vector<double> first;
  hit_row(i, first);
  law.table.push_back(first);
  std::vector<double> q(n), qn(n);
  double mass = 0;
  for (std::size_t b = 0; b < n; ++b) {
    q[b] = i <= chain.K ? chain.p(static_cast<int>(i), B.states[b])
                        : transition(model, i, B.states[b]);
    mass += q[b];
  }
  {
    double far_s = 0;
    for (auto [lo, hi] : far) far_s += band_mass(model, i, lo, hi);
    double defect = row_tail(model, i, chain.K);
    law.unaccounted += std::max(0.0, defect - far_s);
  }
  std::vector<double> hits(L);
  for (std::int64_t tau = 2; tau <= options.tau_max; ++tau) {
    if (mass <= options.mass_tolerance) {
      law.unaccounted += mass;
      law.omega = 1.0;
      return law;
    }
    std::fill(hits.begin(), hits.end(), 0.0);
    double leak = 0, exits = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (q[a] == 0) continue;
      for (std::size_t l = 0; l < L; ++l) hits[l] += q[a] * H[a][l];
      leak += q[a] * B.leak[a];
    }
    for (double h : hits) exits += h;
    std::fill(qn.begin(), qn.end(), 0.0);
    for (std::size_t a = 0; a < n; ++a) {
      if (q[a] == 0) continue;
      for (std::size_t b = 0; b < n; ++b) qn[b] += q[a] * B.Q(a, b);
    }
    law.table.push_back(hits);
    law.unaccounted += leak;
    double rmin = std::numeric_limits<double>::infinity(), rmax = -rmin;
    bool comparable = true;
    double new_mass = 0;
    for (std::size_t b = 0; b < n; ++b) {
      new_mass += qn[b];
      if (q[b] > 0) {
        double r = qn[b] / q[b];
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
      } else if (qn[b] > 0) {
        comparable = false;
      }
    }
    const double omega = (exits + leak) / mass;
    if (comparable && tau > 3 && rmax - rmin <= options.ratio_tolerance) {
      // From here on the chain leaves at the constant rate omega.
      law.tail_amp = hits;
      law.omega = omega;
      double future_leak = leak * (1 - omega) / omega;
      law.unaccounted += future_leak + 10 * (rmax - rmin) * mass;
      return law;
    }
    q.swap(qn);
    mass = new_mass;
  }
  throw ResourceError("exact_hit_law: tau_max reached with residual mass " +
                      std::to_string(mass));
}

JointLaw product_law(const TruncatedChain& chain, const RareSet& S) {
  const Model model = chain.model;
  double p = S.stationary_mass(model);
  if (!(p > 0 && p < 1)) throw DomainError("product_law: need 0 < pi(S) < 1");
  JointLaw law;
  std::vector<double> sigma;
  for (int k = 1; k <= chain.K; ++k) {
    if (S.contains(k)) {
      law.labels.push_back(k);
      sigma.push_back(stationary(model, k) / p);
    }
  }
  auto far = beyond(S, chain.K);
  if (!far.empty()) {
    double m = 0;
    for (auto [lo, hi] : far) m += stationary_band(model, lo, hi);
    law.labels.push_back(0);
    sigma.push_back(m / p);
  }
  law.omega = p;
  for (double s : sigma) law.tail_amp.push_back(s * p / (1 - p));
  return law;
}

JointLaw geometric_time_law(double p) {
  if (!(p > 0 && p <= 1)) throw DomainError("geometric_time_law: need 0 < p <= 1");
  JointLaw law;
  law.labels = {0};
  if (p == 1) {
    law.table = {{1.0}};
    return law;
  }
  law.omega = p;
  law.tail_amp = {p / (1 - p)};
  return law;
}

TvResult tv(const JointLaw& a, const JointLaw& b) {
  std::map<int, std::pair<int, int>> where;
  for (std::size_t l = 0; l < a.labels.size(); ++l) where[a.labels[l]].first = int(l) + 1;
  for (std::size_t l = 0; l < b.labels.size(); ++l) where[b.labels[l]].second = int(l) + 1;
  const int T = std::max(a.explicit_steps(), b.explicit_steps());
  double l1 = 0;
  for (auto& [label, idx] : where) {
    (void)label;
    auto [ia, ib] = idx;
    for (int tau = 1; tau <= T; ++tau) {
      double ma = ia ? a.mass(tau, ia - 1) : 0.0;
      double mb = ib ? b.mass(tau, ib - 1) : 0.0;
      l1 += std::abs(ma - mb);
    }
    // Continuation amplitudes referenced to time T.
    auto amp_at_T = [T](const JointLaw& law, int idx) {
      if (!idx || law.tail_amp.empty()) return 0.0;
      return T == law.explicit_steps() ? law.tail_amp[idx - 1] : law.mass(T, idx - 1);
    };
    double alpha = amp_at_T(a, ia);
    double beta = amp_at_T(b, ib);
    l1 += geometric_abs_sum(alpha, a.omega, beta, b.omega);
  }
  TvResult r;
  double slack = a.unaccounted + b.unaccounted;
  r.value = std::min(1.0, 0.5 * l1 + slack);
  r.lower = std::max(0.0, std::min(1.0, 0.5 * l1) - slack);
  return r;
}

std::vector<HitRecord> simulate_hits(const RowSampler& sampler, const DistributionOnN& init,
                                     const RareSet& S, std::int64_t count, SplitMix64& rng,
                                     std::uint64_t step_cap) {
  std::vector<HitRecord> out;
  if (count <= 0) return out;
  out.reserve(static_cast<std::size_t>(count));
  int x = sampler.sample(init, rng);
  std::uint64_t steps = 0;
  std::int64_t last = 0, t = 0;
  while (static_cast<std::int64_t>(out.size()) < count) {
    if (++steps > step_cap) throw ResourceError("simulate_hits: step cap exceeded");
    x = sampler.step(x, rng);
    ++t;
    if (S.contains(x)) {
      out.push_back({x, t - last});
      last = t;
    }
  }
  return out;
}

double poisson_extreme_cdf(double N, double piS, int mu) {
  if (N < 1 || piS < 0 || piS >= 1 || mu < 1) {
    throw DomainError("poisson_extreme_cdf: need N >= 1, 0 <= piS < 1, mu >= 1");
  }
  double lambda = N * piS;
  if (lambda == 0) return 1.0;
  return boost::math::gamma_q(static_cast<double>(mu), lambda);
}

double band_visits_joint(Model model, double N,
                         const std::vector<std::pair<std::int64_t, std::int64_t>>& bands,
                         const std::vector<int>& caps) {
  if (bands.size() != caps.size()) throw DomainError("band_visits_joint: one cap per band");
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (bands[i].second < bands[i].first) throw DomainError("band_visits_joint: need a <= b");
    if (caps[i] < 0) throw DomainError("band_visits_joint: caps must be >= 0");
    for (std::size_t j = 0; j < i; ++j) {
      auto [a1, b1] = bands[i];
      auto [a2, b2] = bands[j];
      if (a1 < b1 && a2 < b2 && a1 < b2 && a2 < b1) {
        throw DomainError("band_visits_joint: bands overlap");
      }
    }
  }
  double p = 1;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    double lambda = N * stationary_band(model, bands[i].first, bands[i].second);
    if (lambda > 0) p *= boost::math::gamma_q(caps[i] + 1.0, lambda);
  }
  return p;
}

double order_stats_pmf(const std::vector<double>& lambdas) {
  std::vector<double> dp{1.0};
  for (std::size_t r = 1; r <= lambdas.size(); ++r) {
    const double lambda = lambdas[r - 1];
    if (lambda < 0) throw DomainError("order_stats_pmf: intensities must be >= 0");
    std::vector<double> next(r, 0.0);  // partial sums 0..r-1
    for (std::size_t c = 0; c < dp.size(); ++c) {
      if (dp[c] == 0) continue;
      for (std::size_t c2 = c; c2 < r; ++c2) {
        next[c2] += dp[c] * std::exp(log_pois(static_cast<int>(c2 - c), lambda));
      }
    }
    dp.swap(next);
  }
  double s = 0;
  for (double v : dp) s += v;
  return s;
}

std::vector<double> order_stats_lambdas(Model model, double N,
                                        const std::vector<std::int64_t>& thresholds) {
  std::vector<double> out;
  std::int64_t prev = kInfinity;
  for (std::int64_t n : thresholds) {
    if (n > prev) throw DomainError("order_stats_lambdas: thresholds must be nonincreasing");
    out.push_back(N * stationary_band(model, n, prev));
    prev = n;
  }
  return out;
}

namespace {

struct Range {
  std::vector<std::int64_t> y;
  std::vector<int> a;
};

Range range_of(const std::vector<std::int64_t>& x) {
  if (x.empty()) throw DomainError("range: tuple must be nonempty");
  Range r;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 1) throw DomainError("range: states are positive");
    if (i > 0 && x[i] > x[i - 1]) throw DomainError("range: tuple must be nonincreasing");
    if (r.y.empty() || r.y.back() != x[i]) {
      r.y.push_back(x[i]);
      r.a.push_back(1);
    } else {
      ++r.a.back();
    }
  }
  return r;
}

}  // namespace

RangeMass range_multiplicity_mass(Model model, double N, const std::vector<std::int64_t>& x,
                                  RangeReading reading) {
  Range r = range_of(x);
  const std::size_t m = r.y.size();
  const int mu = static_cast<int>(x.size());
  RangeMass out;
  // [y_r, y_{r-1}) = (y_r - 1, y_{r-1} - 1].
  auto interval = [&](std::size_t k) {
    std::int64_t upper = k == 0 ? kInfinity : r.y[k - 1] - 1;
    return stationary_band(model, r.y[k] - 1, upper);
  };
  auto weight = [&](std::size_t k) {
    return reading == RangeReading::Point ? stationary(model, r.y[k]) : interval(k);
  };
  double logp = 0;
  for (std::size_t k = 0; k < m; ++k) {
    logp += -N * interval(k) + r.a[k] * std::log(N * weight(k)) - std::lgamma(r.a[k] + 1.0);
  }
  out.product_form = std::exp(logp);
  double bottom = stationary_tail(model, r.y[m - 1] - 1);
  double logq = -N * bottom + mu * std::log(N * bottom);
  for (std::size_t k = 0; k < m; ++k) {
    logq += r.a[k] * std::log(weight(k) / bottom) - std::lgamma(r.a[k] + 1.0);
  }
  out.normalized_form = std::exp(logq);
  return out;
}

double top_tuple_mass(Model model, double N, const std::vector<std::int64_t>& x) {
  Range r = range_of(x);
  const std::size_t m = r.y.size();
  double logp = 0;
  for (std::size_t k = 0; k < m; ++k) {
    std::int64_t upper = k == 0 ? kInfinity : r.y[k - 1] - 1;
    double gap = stationary_band(model, r.y[k], upper);  // (y_k, y_{k-1})
    double lambda = N * stationary(model, r.y[k]);
    logp += -N * gap;
    if (k + 1 < m) {
      logp += log_pois(r.a[k], lambda);
    } else {
      logp += std::log(boost::math::gamma_p(static_cast<double>(r.a[k]), lambda));
    }
  }
  return std::exp(logp);
}

}  // namespace tc
