#include "cbm/gamma_process.hpp"

#include <cmath>
#include <limits>

#include "cbm/errors.hpp"

namespace cbm {

namespace {

constexpr double kRelTol = 1e-15;
constexpr int kMaxIter = 10000;

double log_prefactor(double a, double x) { return -x + a * std::log(x) - std::lgamma(a); }

// P(a, x) by its power series; converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kRelTol) break;
  }
  return sum * std::exp(log_prefactor(a, x));
}

// Q(a, x) by the Legendre continued fraction (modified Lentz); for x >= a + 1.
double gamma_q_continued_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kRelTol) break;
  }
  return std::exp(log_prefactor(a, x)) * h;
}

void check_gamma_args(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ParameterError("incomplete gamma: a must be positive");
  if (!(x >= 0.0)) throw ParameterError("incomplete gamma: x must be non-negative");
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_continued_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_continued_fraction(a, x);
}

void GammaProcessParams::validate() const {
  if (!(v_coeff > 0.0) || !std::isfinite(v_coeff)) throw ParameterError("gamma process: v_coeff must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ParameterError("gamma process: beta must be positive");
  if (!(delta_t > 0.0) || !std::isfinite(delta_t)) throw ParameterError("gamma process: delta_t must be positive");
}

double increment_shape(const GammaProcessParams& p) {
  p.validate();
  return p.v_coeff * p.delta_t;
}

double sample_increment(const GammaProcessParams& p, RngStream& rng) {
  return sample_gamma(increment_shape(p), p.beta, rng);
}

double increment_pdf(const GammaProcessParams& p, double x) {
  const double v = increment_shape(p);
  if (x < 0.0) throw ParameterError("increment pdf: x must be non-negative");
  if (x == 0.0) return v < 1.0 ? std::numeric_limits<double>::infinity() : (v == 1.0 ? p.beta : 0.0);
  return std::exp((v - 1.0) * std::log(x) + v * std::log(p.beta) - p.beta * x - std::lgamma(v));
}

double increment_cdf(const GammaProcessParams& p, double x) {
  if (!(x >= 0.0)) throw ParameterError("increment cdf: x must be non-negative");
  return regularized_gamma_p(increment_shape(p), p.beta * x);
}

double increment_survival(const GammaProcessParams& p, double x) {
  if (!(x >= 0.0)) throw ParameterError("increment survival: x must be non-negative");
  return regularized_gamma_q(increment_shape(p), p.beta * x);
}

}  // namespace cbm
