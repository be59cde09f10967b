#pragma once

#include <functional>

namespace qbr::special {

// Polygamma functions psi^(r) for r = 0..3, x > 0.
double digamma(double x);
double trigamma(double x);
double polygamma(int order, double x);

// Standard normal density, distribution function and quantile.
// normal_cdf is accurate in both tails (erfc based); normal_quantile
// refines a rational initial guess until |cdf(q) - p| <= 1e-12.
double normal_pdf(double x);
double normal_cdf(double x);
double normal_quantile(double p);
double log_normal_cdf(double x);

// Regularized lower incomplete gamma P(shape, x); gamma_cdf(x; shape) for a
// unit-scale Gamma variate. x <= 0 returns 0.
double gamma_cdf(double x, double shape);

// Chi-squared quantile, solved from gamma_cdf to |cdf(q) - p| <= 1e-12.
double chisq_quantile(double p, double df);

// Globally adaptive Gauss-Kronrod (G7, K15) quadrature. Endpoints may be
// +/-infinity; infinite ranges are mapped to a finite cell with the usual
// rational substitutions. Kronrod nodes are interior, so integrable endpoint
// singularities converge by subdivision. Throws accuracy_error when the
// requested relative tolerance cannot be certified within the budget.
struct QuadratureResult {
  double value;
  double error;     // absolute error estimate
  int evaluations;  // integrand evaluations used
};

QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double rel_tol = 1e-10);

}  // namespace qbr::special
