#include "tightchains/series.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "tightchains/errors.hpp"

namespace tc {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kWindow = 0.3;

using Poly = std::vector<BigInt>;  // coefficients in w

void add_scaled(Poly& acc, const Poly& p, const Poly& q, std::size_t max_deg) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0) continue;
    for (std::size_t j = 0; j < q.size() && i + j <= max_deg; ++j) {
      if (q[j] == 0) continue;
      if (acc.size() <= i + j) acc.resize(i + j + 1);
      acc[i + j] += p[i] * q[j];
    }
  }
}

CertifiedValue cca_certified(double w, double z) {
  double value = cca_h(w, z);
  double az = std::abs(z);
  double scale = 1 + az * (std::abs(w) + 4) +
                 az * az * (std::abs(w) + 6) +
                 az * az * az * (w * w + std::abs(w) + 4) +
                 az * az * az * az * (std::abs(w) + 1);
  return {value, 8 * kEps * scale};
}

CertifiedValue carlitz_certified(double w, double z) {
  return carlitz_h(w, z);
}

double root_in_bracket(Model model, double w) {
  if (model == Model::Cca) {
    return find_root([w](double z) { return cca_certified(w, z); }, 0.0, 0.6, 0.0);
  }
  return find_root([w](double z) { return carlitz_certified(w, z); }, 0.0, 0.8, 0.0);
}

double richardson_second(Model model) {
  auto d2 = [model](double h) {
    return (z_of_w(model, 1 + h) - 2 * z_of_w(model, 1.0) + z_of_w(model, 1 - h)) / (h * h);
  };
  double d1 = d2(0.04), d2h = d2(0.02), d4h = d2(0.01);
  double r1 = (4 * d2h - d1) / 3;
  double r2 = (4 * d4h - d2h) / 3;
  return (16 * r2 - r1) / 15;
}

std::complex<double> carlitz_hz_series(std::complex<double> z, bool derivative) {
  double r = std::abs(z);
  if (!(r < 1)) throw DomainError("carlitz_h: |z| must be < 1");
  std::complex<double> sum = 0;
  std::complex<double> zj = z;
  std::complex<double> zjm1 = 1;
  for (int j = 1; j < 1000000; ++j) {
    std::complex<double> den = 1.0 + zj;
    if (derivative) {
      sum += static_cast<double>(j) * zjm1 / (den * den);
    } else {
      sum += zj / den;
    }
    double mag = std::abs(zj);
    if (mag * (derivative ? j + 1.0 : 1.0) < 1e-17 * (1 - r)) break;
    zjm1 = zj;
    zj *= z;
  }
  return derivative ? -sum : 1.0 - sum;
}

}  // namespace

double cca_h(double w, double z) { return cca_h<double>(w, z); }

CcaPartials cca_partials(double w, double z) {
  double z2 = z * z, z3 = z2 * z, z4 = z3 * z;
  CcaPartials p{};
  p.h = cca_h(w, z);
  p.hw = z4 + z3 * (2 * w - 1) - z2 + z;
  p.hz = 4 * z3 * (w - 1) + 3 * z2 * (w * w - w + 4) - 2 * z * (w + 6) + (w + 4);
  p.hww = 2 * z3;
  p.hzw = 4 * z3 + 3 * z2 * (2 * w - 1) - 2 * z + 1;
  p.hzz = 12 * z2 * (w - 1) + 6 * z * (w * w - w + 4) - 2 * (w + 6);
  return p;
}

CertifiedValue carlitz_h(double w, double z, double tol) {
  double r = std::abs(z);
  if (!(r < 1)) throw DomainError("carlitz_h: |z| must be < 1");
  if (!(w > 0)) throw DomainError("carlitz_h: w must be positive");
  double target = std::min(tol, 1e-16);
  double factor = (z < 0 ? 2.0 : 1.0) / (1 - r);
  double sum = 0, abs_sum = 0;
  double zj = z;    // z^j for the next term
  double rj1 = r;   // |z|^{J+1} for the current truncation J
  int terms = 0;
  while (w * rj1 * factor > target) {
    double t = w * zj / (1 + w * zj);
    sum += t;
    abs_sum += std::abs(t);
    zj *= z;
    rj1 *= r;
    ++terms;
  }
  double rounding = (terms + 4) * kEps * (1 + abs_sum);
  return {1 - sum, w * rj1 * factor + rounding};
}

std::complex<double> carlitz_h_complex(std::complex<double> z) { return carlitz_hz_series(z, false); }

std::complex<double> carlitz_hz_complex(std::complex<double> z) { return carlitz_hz_series(z, true); }

CarlitzPartials carlitz_partials(double w, double z) {
  if (!(std::abs(z) < 1)) throw DomainError("carlitz_partials: |z| must be < 1");
  CarlitzPartials p{};
  p.h = carlitz_h(w, z).value;
  double hz = 0, hw = 0;
  double zj = z, zjm1 = 1;
  for (int j = 1; j < 1000000; ++j) {
    double den = 1 + w * zj;
    hw += zj / (den * den);
    hz += j * w * zjm1 / (den * den);
    if (std::abs(zj) * (j + 1) < 1e-18) break;
    zjm1 = zj;
    zj *= z;
  }
  p.hz = -hz;
  p.hw = -hw;
  return p;
}

double find_root(const CertifiedMap& f, double lo, double hi, double tol) {
  CertifiedValue flo = f(lo);
  CertifiedValue fhi = f(hi);
  bool lo_ok = std::abs(flo.value) > flo.tail_bound;
  bool hi_ok = std::abs(fhi.value) > fhi.tail_bound;
  if (!lo_ok && std::abs(flo.value) == 0 && flo.tail_bound == 0) return lo;
  if (!hi_ok && std::abs(fhi.value) == 0 && fhi.tail_bound == 0) return hi;
  if (!lo_ok || !hi_ok || (flo.value > 0) == (fhi.value > 0)) {
    throw BracketError("find_root: no certified sign change on the bracket");
  }
  bool lo_positive = flo.value > 0;
  for (int it = 0; it < 2000; ++it) {
    double mid = lo + (hi - lo) / 2;
    if (hi - lo <= tol || mid <= lo || mid >= hi) break;
    CertifiedValue fm = f(mid);
    if (std::abs(fm.value) <= fm.tail_bound) return mid;
    if ((fm.value > 0) == lo_positive) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo + (hi - lo) / 2;
}

SeriesExpansion counting_series(Model model, int nu_max) {
  if (nu_max < 1) throw DomainError("counting_series: nu_max must be >= 1");
  SeriesExpansion out;
  out.model = model;
  out.order = nu_max;
  std::vector<BigInt>& f = out.coefficients;
  f.assign(nu_max + 1, 0);
  if (model == Model::Cca) {
    // f(1, z) (1 - 5z + 7z^2 - 4z^3) = -z (z-1)^3.
    const std::array<int, 5> numer{0, -1, 3, -3, 1};
    for (int n = 1; n <= nu_max; ++n) {
      BigInt v = n <= 4 ? BigInt(-numer[n]) : BigInt(0);
      if (n >= 1) v += 5 * f[n - 1];
      if (n >= 2) v -= 7 * f[n - 2];
      if (n >= 3) v += 4 * f[n - 3];
      f[n] = v;
    }
  } else {
    // 1/h(1, z) with h(1, z) = 1 - sum_n c_n z^n, c_n = sum_{m | n} (-1)^{m+1}.
    std::vector<long long> c(nu_max + 1, 0);
    for (int j = 1; j <= nu_max; ++j) {
      for (int m = 1; j * m <= nu_max; ++m) c[j * m] += (m % 2 == 1) ? 1 : -1;
    }
    std::vector<BigInt> g(nu_max + 1, 0);
    g[0] = 1;
    for (int n = 1; n <= nu_max; ++n) {
      BigInt v = 0;
      for (int k = 1; k <= n; ++k) {
        if (c[k] != 0) v += c[k] * g[n - k];
      }
      g[n] = v;
      f[n] = v;
    }
  }
  return out;
}

std::vector<std::vector<BigInt>> bivariate_counting_series(Model model, int nu_max) {
  if (nu_max < 1) throw DomainError("bivariate_counting_series: nu_max must be >= 1");
  const std::size_t deg = static_cast<std::size_t>(nu_max);
  std::vector<Poly> f(nu_max + 1);
  if (model == Model::Cca) {
    // f(w, z) = w z (z-1)^3 / h(w, z); the recurrence reads off -h.
    const std::array<Poly, 5> hk{Poly{}, Poly{4, 1}, Poly{-6, -1}, Poly{4, -1, 1}, Poly{-1, 1}};
    const std::array<int, 5> numer{0, -1, 3, -3, 1};
    for (int n = 1; n <= nu_max; ++n) {
      Poly v(2, 0);
      if (n <= 4) v[1] = -numer[n];
      for (int k = 1; k <= 4 && k < n; ++k) add_scaled(v, hk[k], f[n - k], deg);
      f[n] = v;
    }
  } else {
    std::vector<Poly> c(nu_max + 1);
    for (int j = 1; j <= nu_max; ++j) {
      for (int m = 1; j * m <= nu_max; ++m) {
        Poly& p = c[j * m];
        if (p.size() <= static_cast<std::size_t>(m)) p.resize(m + 1);
        p[m] += (m % 2 == 1) ? 1 : -1;
      }
    }
    std::vector<Poly> g(nu_max + 1);
    g[0] = Poly{1};
    for (int n = 1; n <= nu_max; ++n) {
      Poly v;
      for (int k = 1; k <= n; ++k) add_scaled(v, c[k], g[n - k], deg);
      g[n] = v;
      f[n] = v;
    }
  }
  std::vector<std::vector<BigInt>> out(nu_max + 1, std::vector<BigInt>(nu_max + 1, 0));
  for (int n = 1; n <= nu_max; ++n) {
    for (std::size_t m = 0; m < f[n].size() && m <= deg; ++m) out[n][m] = f[n][m];
  }
  return out;
}

double validity_window() { return kWindow; }

double z_of_w(Model model, double w) {
  if (!(std::abs(w - 1) <= kWindow + 1e-12)) {
    throw DomainError("z_of_w: w outside the validity window |w - 1| <= 0.3");
  }
  return root_in_bracket(model, w);
}

double z_prime_of_w(Model model, double w) {
  double z = z_of_w(model, w);
  if (model == Model::Cca) {
    CcaPartials p = cca_partials(w, z);
    return -p.hw / p.hz;
  }
  CarlitzPartials p = carlitz_partials(w, z);
  return -p.hw / p.hz;
}

double z_second_derivative_numeric(Model model) { return richardson_second(model); }

ZDerivatives z_derivatives(Model model) {
  ZDerivatives d;
  double z = z_of_w(model, 1.0);
  if (model == Model::Cca) {
    CcaPartials p = cca_partials(1.0, z);
    d.z1 = -p.hw / p.hz;
    d.z2 = -(p.hww + 2 * p.hzw * d.z1 + p.hzz * d.z1 * d.z1) / p.hz;
  } else {
    CarlitzPartials p = carlitz_partials(1.0, z);
    d.z1 = -p.hw / p.hz;
    d.z2 = richardson_second(model);
  }
  return d;
}

CcaOffsetForms cca_offset_forms(double z) {
  CcaOffsetForms f{};
  f.from_first_part = (1 - z) / z - 1 / (1 - z);
  f.from_row_sums = 2 * z * z / ((1 - 2 * z) * (1 - z));
  f.from_generating = (z * z * z - z * z + z) / std::pow(1 - z, 3);
  return f;
}

std::vector<std::complex<double>> secondary_zeros(Model model) {
  double zs = z_of_w(model, 1.0);
  std::vector<std::complex<double>> roots;
  if (model == Model::Cca) {
    // 4z^3 - 7z^2 + 5z - 1 = (z - z*) (4z^2 + p z + q).
    double p = 4 * zs - 7;
    double q = 4 * zs * zs - 7 * zs + 5;
    double disc = p * p - 16 * q;
    if (disc < 0) {
      roots.emplace_back(-p / 8, std::sqrt(-disc) / 8);
    } else {
      roots.emplace_back((-p - std::sqrt(disc)) / 8, 0.0);
      roots.emplace_back((-p + std::sqrt(disc)) / 8, 0.0);
    }
    return roots;
  }
  const double rmax = 0.99;
  const int nr = 50, nt = 160;
  const double pi = std::acos(-1.0);
  std::vector<double> mag((nr + 1) * (nt + 1));
  auto at = [&](int i, int t) -> double& { return mag[i * (nt + 1) + t]; };
  auto point = [&](int i, int t) {
    return std::polar(0.05 + (rmax - 0.05) * i / nr, pi * t / nt);
  };
  for (int i = 0; i <= nr; ++i) {
    for (int t = 0; t <= nt; ++t) at(i, t) = std::abs(carlitz_h_complex(point(i, t)));
  }
  for (int i = 0; i <= nr; ++i) {
    for (int t = 0; t <= nt; ++t) {
      double m = at(i, t);
      bool local_min = true;
      for (int di = -1; di <= 1 && local_min; ++di) {
        for (int dt = -1; dt <= 1; ++dt) {
          int ii = i + di, tt = t + dt;
          if ((di == 0 && dt == 0) || ii < 0 || ii > nr || tt < 0 || tt > nt) continue;
          if (at(ii, tt) < m) {
            local_min = false;
            break;
          }
        }
      }
      if (!local_min) continue;
      std::complex<double> z = point(i, t);
      bool ok = false;
      for (int it = 0; it < 60; ++it) {
        std::complex<double> h = carlitz_h_complex(z);
        std::complex<double> step = h / carlitz_hz_complex(z);
        z -= step;
        if (!(std::abs(z) < rmax)) break;
        if (std::abs(step) < 1e-15) {
          ok = std::abs(carlitz_h_complex(z)) < 1e-10;
          break;
        }
      }
      if (!ok) continue;
      if (z.imag() < 0) z = std::conj(z);
      if (std::abs(z - std::complex<double>(zs, 0)) < 1e-8) continue;
      bool dup = false;
      for (auto& r : roots) dup = dup || std::abs(r - z) < 1e-8;
      if (!dup) roots.push_back(z);
    }
  }
  std::sort(roots.begin(), roots.end(),
            [](auto x, auto y) { return std::abs(x) < std::abs(y); });
  return roots;
}

ModelConstants derive_constants(Model model) {
  ModelConstants c;
  c.model = model;
  double z = z_of_w(model, 1.0);
  c.z_star = z;
  ZDerivatives d = z_derivatives(model);
  c.z1 = d.z1;
  c.z2 = d.z2;
  c.alpha = -d.z1 / z;
  c.beta = c.alpha * c.alpha + c.alpha - d.z2 / z;
  if (model == Model::Cca) {
    c.a = (1 - z) / z - 1 / (1 - z);
    c.A = z * z / std::pow(1 - z, 3) + (1 - z) / z;
    c.B = z * z * (1 - z) * (1 - z) / (z * z * z + std::pow(1 - z, 4));
    double numer = z * std::pow(z - 1, 3);
    double dh = 12 * z * z - 14 * z + 5;
    c.C = -numer / (z * dh);
  } else {
    double A = 0;
    double zk = z;
    for (int k = 1; zk > 1e-20; ++k) {
      A += zk / ((1 + zk) * (1 + zk));
      zk *= z;
    }
    c.A = A;
    c.B = z / ((1 - z) * A);
    c.C = -1 / (z * carlitz_partials(1.0, z).hz);
  }
  std::vector<std::complex<double>> sec = secondary_zeros(model);
  if (!sec.empty()) c.gamma = z / std::abs(sec.front());
  return c;
}

const ModelConstants& constants(Model model) {
  static const std::array<ModelConstants, 2> cache{derive_constants(Model::Cca),
                                                   derive_constants(Model::Carlitz)};
  return cache[model == Model::Cca ? 0 : 1];
}

namespace {

HighPrecisionAmplitude compute_amplitude(Model model) {
  HighReal z = constants(model).z_star;
  HighPrecisionAmplitude out;
  const HighReal tiny("1e-55");
  if (model == Model::Cca) {
    for (int it = 0; it < 20; ++it) {
      HighReal h = ((4 * z - 7) * z + 5) * z - 1;
      HighReal dh = (12 * z - 14) * z + 5;
      HighReal step = h / dh;
      z -= step;
      if (abs(step) < tiny) break;
    }
    HighReal dh = (12 * z - 14) * z + 5;
    HighReal zm1 = z - 1;
    out.C = -(z * zm1 * zm1 * zm1) / (z * dh);
  } else {
    auto series = [&](const HighReal& x, HighReal& h, HighReal& dh) {
      HighReal s = 0, ds = 0;
      HighReal xj = x, xjm1 = 1;
      for (int j = 1; j < 100000; ++j) {
        HighReal den = 1 + xj;
        s += xj / den;
        ds += j * xjm1 / (den * den);
        if (xj * (j + 1) < tiny) break;
        xjm1 = xj;
        xj *= x;
      }
      h = 1 - s;
      dh = -ds;
    };
    HighReal h, dh;
    for (int it = 0; it < 20; ++it) {
      series(z, h, dh);
      HighReal step = h / dh;
      z -= step;
      if (abs(step) < tiny) break;
    }
    series(z, h, dh);
    out.C = -1 / (z * dh);
  }
  out.z_star = z;
  return out;
}

}  // namespace

const HighPrecisionAmplitude& high_precision_amplitude(Model model) {
  static const std::array<HighPrecisionAmplitude, 2> cache{compute_amplitude(Model::Cca),
                                                           compute_amplitude(Model::Carlitz)};
  return cache[model == Model::Cca ? 0 : 1];
}

HighReal amplitude_residual(Model model, const BigInt& count, int nu) {
  const HighPrecisionAmplitude& amp = high_precision_amplitude(model);
  HighReal value = HighReal(count) * pow(amp.z_star, nu);
  return abs(value - amp.C);
}

}  // namespace tc
