#pragma once

// Predictive formulas for compositions: Poisson laws of the largest parts,
// the W scaling of the mu-th largest part, and the bivariate Chernoff bound
// on the number of parts.

#include <cstdint>
#include <vector>

#include "tightchains/compositions.hpp"
#include "tightchains/model.hpp"
#include "tightchains/series.hpp"

namespace tc {

struct ExtremePrediction {
  Model model = Model::Cca;
  int nu = 0;
  int mu = 1;
  std::int64_t N0 = 0;  // floor(alpha nu)
  std::int64_t N1 = 0;  // floor(alpha nu - 2 sqrt(nu) ln nu)
  std::int64_t N2 = 0;  // floor(alpha nu + 2 sqrt(nu) ln nu)
  std::int64_t n = 0;
  double lambda = 0.0;        // from the B z*^n amplitude
  double lambda_exact = 0.0;  // N0 pi(S_n)
  double cdf = 0.0;           // P{Poisson(lambda) < mu}
  double cdf_exact = 0.0;     // P{Poisson(lambda_exact) < mu}
};

std::int64_t parts_scale(Model model, int nu);  // N0

// CCA: B N (ln N / ln z*)^2 z*^n. Carlitz: B N z*^n.
double extreme_lambda(Model model, double N, double n);

ExtremePrediction predict_extreme(Model model, int nu, int mu, std::int64_t n);

// P{Y^(mu) <= n} ~ P{Poisson(lambda(n)) < mu}.
double predict_extreme_cdf(Model model, int nu, int mu, std::int64_t n);

// W for a mu-th largest part of size y at scale N0 (the inverse of the
// centering map).
double w_from_part(Model model, std::int64_t N0, double y);

// P{W_mu >= s} for W_mu a sum of mu unit exponentials.
double gamma_tail(int mu, double s);

// ln(nu ln^2 nu / mu) / ln(1/z*) (CCA), ln(nu / mu) / ln(1/z*) (Carlitz).
double extreme_centering(Model model, int nu, int mu);

// ln mu / ln(1/z*).
double extreme_gap(Model model, int mu);

struct EmpiricalExtremes {
  Model model = Model::Cca;
  int nu = 0;
  int mu = 1;
  std::int64_t N0 = 0;
  std::vector<std::vector<int>> top;    // per replica, largest mu parts, decreasing
  std::vector<std::vector<double>> w;   // per replica, W for ranks 1..mu
  std::vector<int> parts;               // per replica, number of parts

  // Fraction of replicas with W of rank r >= s, and its binomial sigma.
  double w_tail(int r, double s) const;
  double w_tail_sigma(int r, double s) const;
  // Median over replicas of Y^(1) - Y^(r).
  double median_gap(int r) const;
  double median_part(int r) const;
};

// Replica r draws from SplitMix64(seed, r); replicas are split across `jobs`
// threads and collected by index.
EmpiricalExtremes empirical_extremes(Model model, int nu, int mu, int reps, std::uint64_t seed,
                                     int jobs = 1, const Guards& guards = {});

// Number of parts of `reps` sampled compositions, same stream layout.
std::vector<int> sample_parts_counts(Model model, int nu, int reps, std::uint64_t seed,
                                     int jobs = 1, const Guards& guards = {});

// ln T(nu): exact for nu <= exact_max_nu, ln C - nu ln z* beyond.
double log_count(Model model, int nu, const Guards& guards = {});

// f(w, z) with nu marked by z and the number of parts by w.
double bivariate_generating(Model model, double w, double z);

struct ChernoffPoint {
  double m = 0.0;
  double w_bar = 1.0;
  double z_bar = 0.0;
  double z_w = 0.0;       // z(w_bar)
  double exponent = 0.0;  // H^(m)(w_bar, z_bar)
  double bound = 0.0;     // exp(exponent) / T(nu)
};

// Solves w z'(w) / z(w) = -m / (nu + 1) on the window around w = 1.
// DomainError if the root leaves the window.
ChernoffPoint chernoff_saddle(Model model, int nu, double m, const Guards& guards = {});

// H^(m)(w, z) = -nu ln z - m ln w - ln(z(w) - z).
double chernoff_exponent(Model model, int nu, double m, double w, double z);

enum class Side { Upper, Lower };

struct LdpBound {
  Side side = Side::Upper;
  double m = 0.0;
  ChernoffPoint saddle;      // w_bar clamped to 1 on the wrong side of the center
  double saddle_bound = 0.0; // c = 1
  double rigorous = 0.0;     // f(w_bar, z_bar) / (z_bar^nu w_bar^m T(nu))
  double gaussian = 0.0;     // nu exp(-(m - alpha nu)^2 / (3 beta nu))
};

// Upper: P{M >= m}. Lower: P{M <= m}.
LdpBound ldp_bound(Model model, int nu, double m, Side side, const Guards& guards = {});

struct TwoSidedLdp {
  double s = 0.0;
  LdpBound upper;
  LdpBound lower;
  double saddle_bound = 0.0;  // upper + lower
  double rigorous = 0.0;
  double gaussian = 0.0;      // nu exp(-s^2 / (3 beta nu)), one term
};

// P{|M - alpha nu| >= s}.
TwoSidedLdp ldp_two_sided(Model model, int nu, double s, const Guards& guards = {});

struct CltReport {
  Model model = Model::Cca;
  int nu = 0;
  bool exact = false;
  int reps = 0;
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double mean_over_nu = 0.0;
  double variance_over_nu = 0.0;
  double mean_sigma = 0.0;        // Monte Carlo sigma of the mean; 0 when exact
  double standardized_mean = 0.0;      // E[(M - alpha nu) / sqrt(beta nu)]
  double standardized_variance = 0.0;  // Var[M] / (beta nu)
};

// Exact pmf when nu <= exact_max_nu, otherwise `reps` samples.
CltReport clt_check(Model model, int nu, int reps, std::uint64_t seed, int jobs = 1,
                    const Guards& guards = {});

// Indicator frequency of |M - alpha nu| >= s among samples, with its sigma.
struct TailFrequency {
  double value = 0.0;
  double sigma = 0.0;
};
TailFrequency parts_tail_frequency(Model model, int nu, const std::vector<int>& counts, double s);

}  // namespace tc
