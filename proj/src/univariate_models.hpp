#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "solver.hpp"

namespace qbr {

// Exponential rate model: density theta * exp(-theta y), y > 0.
std::unique_ptr<ScoreModel> exponential_model(const std::vector<double>& y);

// Variance of a zero-mean normal sample; theta is the variance.
std::unique_ptr<ScoreModel> normal_variance_model(const std::vector<double>& y);

// One-parameter natural exponential family with log-likelihood contribution
// theta * T(y) - A(theta). A returns the function value and its first four
// derivatives, which are also the per-observation score cumulants.
struct ExpFamilySpec {
  std::function<double(double)> T;
  std::function<std::array<double, 5>(double)> A;
  ParameterSpace space;  // one-dimensional
};

std::unique_ptr<ScoreModel> exp_family_model(ExpFamilySpec spec,
                                             const std::vector<double>& y,
                                             double init);

// Skew-normal shape model: density 2 phi(y) Phi(theta y). Score cumulants
// come from adaptive quadrature of the moments E(y^k zeta(theta y)^k),
// zeta = phi/Phi, memoized per parameter value.
std::unique_ptr<ScoreModel> skew_normal_model(const std::vector<double>& y);

// Ratio of the normal density to its distribution function, evaluated
// stably across the whole real line.
double normal_density_ratio(double x);

// Gamma model in mean/shape coordinates: mean mu, shape phi, variance
// mu^2/phi. Parameter order (mu, phi).
std::unique_ptr<ScoreModel> gamma_model(const std::vector<double>& y);

enum class ExactFamily { exponential, normal_variance };

// Equal-tailed interval from the exact pivot: 2 theta sum(y) ~ chi^2(2n) for
// the exponential rate, sum(y^2)/theta ~ chi^2(n) for the normal variance.
ConfidenceInterval exact_interval(ExactFamily family,
                                  const std::vector<double>& y, double level,
                                  Kind kind);

}  // namespace qbr
