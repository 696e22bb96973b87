#pragma once

// Scalar analysis of the two composition models: the transfer functions
// h(w, z), certified root finding, exact counting series, the root curve
// z(w) and the singularity-derived constants.

#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "tightchains/model.hpp"

namespace tc {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ModelConstants {
  Model model = Model::Cca;
  double z_star = kNaN;  // smallest-modulus zero of h(1, .)
  double a = kNaN;       // CCA first-part offset; NaN for Carlitz
  double A = kNaN;       // stationary normalizer
  double alpha = kNaN;   // E[parts] / nu
  double beta = kNaN;    // Var[parts] / nu
  double B = kNaN;       // tail amplitude of pi(S_n)
  double C = kNaN;       // T(nu) ~ C z_star^-nu
  double gamma = kNaN;   // z_star / |next zero|; diagnostic only
  double z1 = kNaN;      // z'(1)
  double z2 = kNaN;      // z''(1)
};

// Value with an absolute bound on the truncation error of its evaluation.
struct CertifiedValue {
  double value = 0.0;
  double tail_bound = 0.0;
};

using CertifiedMap = std::function<CertifiedValue(double)>;

// h(w, z) = z^4 (w-1) + z^3 (w^2-w+4) - z^2 (w+6) + z (w+4) - 1.
template <class Real>
Real cca_h(const Real& w, const Real& z) {
  return (((z * (w - 1) + (w * w - w + 4)) * z - (w + 6)) * z + (w + 4)) * z - 1;
}
double cca_h(double w, double z);

struct CcaPartials {
  double h, hz, hw, hzz, hzw, hww;
};
CcaPartials cca_partials(double w, double z);

// Carlitz h(w, z) = 1 - sum_{j>=1} w z^j / (1 + w z^j), truncated after J
// terms with J chosen so that w |z|^{J+1} / (1 - |z|) <= min(tol, 1e-16)
// (doubled when z < 0 to cover the 1 + w z^j denominators). tail_bound adds
// a rounding allowance (J + 4) eps (1 + sum |terms|).
// Throws DomainError unless |z| < 1 and w > 0.
CertifiedValue carlitz_h(double w, double z, double tol = 1e-16);

template <class Real>
Real carlitz_h_series(const Real& w, const Real& z, const Real& tol) {
  Real sum = 0;
  Real zj = z;
  for (int j = 1; j < 100000; ++j) {
    Real term = w * zj / (1 + w * zj);
    sum += term;
    if (abs(w * zj) < tol) break;
    zj *= z;
  }
  return 1 - sum;
}

std::complex<double> carlitz_h_complex(std::complex<double> z);
std::complex<double> carlitz_hz_complex(std::complex<double> z);

struct CarlitzPartials {
  double h, hz, hw;
};
CarlitzPartials carlitz_partials(double w, double z);

// Bisection with a certified sign change. `f(lo)` and `f(hi)` must have
// opposite signs by more than their tail bounds (BracketError otherwise).
// Stops when the bracket is narrower than `tol` or the sign at the midpoint
// is no longer certified. Deterministic.
double find_root(const CertifiedMap& f, double lo, double hi, double tol = 1e-15);

struct SeriesExpansion {
  Model model = Model::Cca;
  int order = 0;
  std::vector<BigInt> coefficients;  // index nu = 0..order; coefficient 0 is 0
};

// Exact coefficients T(1..nu_max) of f(1, z): the linear recurrence of
// z (z-1)^3 / h(1, z) for CCA, exact inversion of h(1, z) for Carlitz.
SeriesExpansion counting_series(Model model, int nu_max);

// Exact [w^mu z^nu] f(w, z) for nu, mu <= nu_max, indexed [nu][mu].
std::vector<std::vector<BigInt>> bivariate_counting_series(Model model, int nu_max);

// Half-width of the window |w - 1| <= eps0 on which z(w) is defined here.
double validity_window();

// Unique root of h(w, .) near z_star; throws DomainError outside the window.
double z_of_w(Model model, double w);

// z'(w) = -h_w / h_z evaluated on the root curve.
double z_prime_of_w(Model model, double w);

struct ZDerivatives {
  double z1 = kNaN;
  double z2 = kNaN;
};

// z'(1) and z''(1). CCA: implicit differentiation of the quartic, twice.
// Carlitz: z'(1) from the h_w, h_z series; z''(1) by Richardson-extrapolated
// central differences of z_of_w.
ZDerivatives z_derivatives(Model model);

// z''(1) by Richardson extrapolation for either model (cross-check route).
double z_second_derivative_numeric(Model model);

// All constants; recomputed from the certified root. Cached per model by
// `constants()`.
ModelConstants derive_constants(Model model);
const ModelConstants& constants(Model model);

// The three closed forms for the CCA constant a.
struct CcaOffsetForms {
  double from_first_part;  // (1-z)/z - 1/(1-z)
  double from_row_sums;    // 2 z^2 / ((1-2z)(1-z))
  double from_generating;  // (z^3 - z^2 + z) / (1-z)^3
};
CcaOffsetForms cca_offset_forms(double z_star);

// Secondary zeros of h(1, .) inside |z| <= 0.99 found by a grid scan and
// Newton refinement (upper half-plane representatives).
std::vector<std::complex<double>> secondary_zeros(Model model);

// z_star and C to 50 digits, for amplitude checks of T(nu) z_star^nu.
struct HighPrecisionAmplitude {
  HighReal z_star;
  HighReal C;
};
const HighPrecisionAmplitude& high_precision_amplitude(Model model);

// |T(nu) z_star^nu - C| in 50-digit arithmetic.
HighReal amplitude_residual(Model model, const BigInt& count, int nu);

}  // namespace tc
