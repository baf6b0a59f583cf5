#pragma once

#include "cbm/random.hpp"

namespace cbm {

/// Homogeneous gamma degradation observed every `delta_t` time units.
///
/// Increments over one inspection interval follow Gamma(shape = v_coeff * delta_t,
/// rate = beta), independent of absolute time.
struct GammaProcessParams {
  double v_coeff = 0.0115;
  double beta = 4.63;
  double delta_t = 100.0;

  void validate() const;
};

double increment_shape(const GammaProcessParams& p);
double sample_increment(const GammaProcessParams& p, RngStream& rng);

double increment_pdf(const GammaProcessParams& p, double x);
double increment_cdf(const GammaProcessParams& p, double x);
double increment_survival(const GammaProcessParams& p, double x);

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
double regularized_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double regularized_gamma_q(double a, double x);

}  // namespace cbm
