#pragma once

// Independently derived per-observation score functions for the two
// regression families, packaged as quadrature-oracle inputs. Everything here
// is hand-derived from the observation log-densities, deliberately not
// reusing the library's closed forms, so the two sides can check each other.

#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "obs_quadrature.hpp"
#include "special_functions.hpp"

namespace oracle {

inline constexpr double kOraclePi = 3.14159265358979323846;

// Student-t s-derivatives from s(e) = const - ((nu+1)/2) log(nu + e^2).
inline std::array<double, 4> student_s(double nu, double e) {
  double w = nu + e * e;
  double s1 = -(nu + 1.0) * e / w;
  double s2 = -(nu + 1.0) * (nu - e * e) / (w * w);
  double s3 = 2.0 * (nu + 1.0) * e * (3.0 * nu - e * e) / (w * w * w);
  double s4 = 6.0 * (nu + 1.0) *
              (nu * nu - 6.0 * nu * e * e + e * e * e * e) / (w * w * w * w);
  return {s1, s2, s3, s4};
}

inline double student_log_pdf(double nu, double e) {
  double logc = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                0.5 * std::log(nu * kOraclePi) + 0.5 * (nu + 1.0) * std::log(nu);
  return logc - 0.5 * (nu + 1.0) * std::log(nu + e * e);
}

inline std::array<double, 4> normal_s(double e) {
  return {-e, -1.0, 0.0, 0.0};
}

inline double normal_log_pdf(double e) {
  return -0.5 * e * e - 0.5 * std::log(2.0 * kOraclePi);
}

// Quadrature oracle for one observation of a symmetric location-scale
// family, built from the s-derivative closed forms above.
inline ObsQuadrature symmetric_oracle(
    const std::function<std::array<double, 4>(double)>& s,
    const Fn& log_std_pdf, double mu, double phi) {
  auto eps = [=](double y) { return (y - mu) / phi; };
  auto um = [=](double y) { return -s(eps(y))[0] / phi; };
  auto uf = [=](double y) {
    double e = eps(y);
    return -(1.0 + s(e)[0] * e) / phi;
  };
  auto umm = [=](double y) { return s(eps(y))[1] / (phi * phi); };
  auto umf = [=](double y) {
    double e = eps(y);
    auto sd = s(e);
    return (sd[1] * e + sd[0]) / (phi * phi);
  };
  auto uff = [=](double y) {
    double e = eps(y);
    auto sd = s(e);
    return (sd[1] * e * e + 2.0 * sd[0] * e + 1.0) / (phi * phi);
  };
  auto log_pdf = [=](double y) {
    return log_std_pdf(eps(y)) - std::log(phi);
  };
  double inf = std::numeric_limits<double>::infinity();
  return score_cumulants_by_quadrature(um, uf, umm, umf, uff, log_pdf, -inf,
                                       inf, mu);
}

inline ObsQuadrature beta_oracle(double mu, double phi) {
  namespace sf = qbr::special;
  double a = mu * phi, b = (1.0 - mu) * phi;
  double mustar = sf::digamma(a) - sf::digamma(b);
  double mudag = sf::digamma(b) - sf::digamma(phi);
  double p1a = sf::trigamma(a), p1b = sf::trigamma(b),
         p1f = sf::trigamma(phi);

  auto ystar = [](double y) { return std::log(y / (1.0 - y)); };
  auto um = [=](double y) { return phi * (ystar(y) - mustar); };
  auto uf = [=](double y) {
    return mu * (ystar(y) - mustar) + (std::log1p(-y) - mudag);
  };
  auto umm = [=](double) { return -phi * phi * (p1a + p1b); };
  auto umf = [=](double y) {
    return (ystar(y) - mustar) - phi * (mu * p1a - (1.0 - mu) * p1b);
  };
  auto uff = [=](double) {
    return -mu * mu * p1a - (1.0 - mu) * (1.0 - mu) * p1b + p1f;
  };
  auto log_pdf = [=](double y) {
    return (a - 1.0) * std::log(y) + (b - 1.0) * std::log1p(-y) +
           std::lgamma(phi) - std::lgamma(a) - std::lgamma(b);
  };
  return score_cumulants_by_quadrature(um, uf, umm, umf, uff, log_pdf, 0.0,
                                       1.0, mu);
}

}  // namespace oracle
