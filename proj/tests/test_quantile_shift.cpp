#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "closed_forms.hpp"
#include "errors.hpp"
#include "quantile_shift.hpp"
#include "special_functions.hpp"

using namespace qbr;

namespace {

CumulantSet set(double k1, double k2, double k3, double k4) {
  CumulantSet c;
  c.k1 = k1;
  c.k2 = k2;
  c.k3 = k3;
  c.k4 = k4;
  return c;
}

}  // namespace

TEST_CASE("median shift keeps only the mean and skewness terms") {
  QuantileShift s = cornish_fisher_shift(set(0.2, 4.0, -6.0, 123.0), 0.5);
  CHECK(s.u_alpha == 0.0);
  CHECK(s.shift == doctest::Approx(-0.2 + (-6.0) / (6.0 * 4.0)).epsilon(1e-15));
}

TEST_CASE("shift is antisymmetric for symmetric score distributions") {
  CumulantSet c = set(0.0, 5.0, 0.0, 7.0);
  for (double alpha : {0.01, 0.1, 0.25, 0.4, 0.49}) {
    QuantileShift lo = cornish_fisher_shift(c, alpha);
    QuantileShift hi = cornish_fisher_shift(c, 1.0 - alpha);
    CHECK(std::abs(lo.shift + hi.shift) <= 1e-14 * std::abs(lo.shift));
    CHECK(lo.u_alpha == doctest::Approx(-hi.u_alpha).epsilon(1e-15));
  }
}

TEST_CASE("normal quantile is carried through") {
  QuantileShift s = cornish_fisher_shift(set(0.0, 1.0, 0.0, 0.0), 0.975);
  CHECK(s.alpha == 0.975);
  CHECK(s.u_alpha == doctest::Approx(special::normal_quantile(0.975))
                         .epsilon(1e-15));
  // With unit variance and no higher cumulants the shift is just -u.
  CHECK(s.shift == doctest::Approx(-s.u_alpha).epsilon(1e-15));
}

TEST_CASE("shift solves the exponential-rate estimating equation") {
  // The quantile-adjusted score for an exponential rate has a closed-form
  // root; plugging that root back in must annihilate the adjusted score.
  double n = 5.0;
  double mle = 1.0;  // sum(y) = n
  for (double alpha : {0.025, 0.2, 0.5, 0.8, 0.975}) {
    double u = special::normal_quantile(alpha);
    double root = oracle::exponential_root(mle, n, u);
    CumulantSet c = set(0.0, n / (root * root), -2.0 * n / std::pow(root, 3),
                        6.0 * n / std::pow(root, 4));
    double score = n / root - n / mle;
    QuantileShift s = cornish_fisher_shift(c, alpha);
    CHECK(std::abs(modified_score(score, s)) <= 1e-9 * std::sqrt(c.k2));
  }
}

TEST_CASE("invalid inputs are rejected") {
  CumulantSet ok = set(0.0, 1.0, 0.0, 0.0);
  CHECK_THROWS_AS(cornish_fisher_shift(ok, 0.0), domain_error);
  CHECK_THROWS_AS(cornish_fisher_shift(ok, 1.0), domain_error);
  CHECK_THROWS_AS(cornish_fisher_shift(ok, -0.3), domain_error);
  CHECK_THROWS_AS(cornish_fisher_shift(set(0.0, 0.0, 0.0, 0.0), 0.5),
                  domain_error);
  CHECK_THROWS_AS(cornish_fisher_shift(set(0.0, -2.0, 0.0, 0.0), 0.5),
                  domain_error);
  CHECK_THROWS_AS(
      cornish_fisher_shift(set(0.0, std::nan(""), 0.0, 0.0), 0.5),
      domain_error);
}
