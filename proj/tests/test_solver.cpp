#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "closed_forms.hpp"
#include "errors.hpp"
#include "solver.hpp"
#include "special_functions.hpp"
#include "univariate_models.hpp"

using namespace qbr;

namespace {

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v[0] = x;
  return v;
}

JointCumulantTable scalar_table(double k2, double k3, double k4) {
  JointCumulantTable t;
  t.resize(0);
  t.k_psi_psi = k2;
  t.third.k_psi_psi_psi = k3;
  t.fourth.k_psi_psi_psi_psi = k4;
  return t;
}

// Exponential rate model in log coordinates, omega = log(theta). Scores and
// cumulants transform by powers of d theta / d omega = theta.
class LogExponentialModel : public ScoreModel {
 public:
  explicit LogExponentialModel(const std::vector<double>& y)
      : n_(static_cast<double>(y.size())), space_(ParameterSpace::unbounded(1)) {
    sum_ = 0.0;
    for (double v : y) sum_ += v;
  }
  int dim() const override { return 1; }
  const ParameterSpace& space() const override { return space_; }
  Eigen::VectorXd score(const Eigen::VectorXd& w) const override {
    check_theta(w);
    return vec1(n_ - sum_ * std::exp(w[0]));
  }
  Eigen::MatrixXd expected_information(const Eigen::VectorXd& w) const override {
    check_theta(w);
    Eigen::MatrixXd info(1, 1);
    info(0, 0) = n_;
    return info;
  }
  JointCumulantTable joint_cumulants(const Eigen::VectorXd& w,
                                     int) const override {
    check_theta(w);
    return scalar_table(n_, -2.0 * n_, 6.0 * n_);
  }
  Eigen::VectorXd initial_guess() const override {
    return vec1(std::log(n_ / sum_));
  }

 private:
  double n_, sum_;
  ParameterSpace space_;
};

// Synthetic score with three roots (0, 2, 4) and unit variance, for testing
// which root the search locks onto and the sign-change diagnostics.
class CubicScoreModel : public ScoreModel {
 public:
  CubicScoreModel() : space_(ParameterSpace::unbounded(1)) {}
  int dim() const override { return 1; }
  const ParameterSpace& space() const override { return space_; }
  Eigen::VectorXd score(const Eigen::VectorXd& t) const override {
    double x = t[0];
    return vec1(-x * (x - 2.0) * (x - 4.0));
  }
  Eigen::MatrixXd expected_information(const Eigen::VectorXd&) const override {
    Eigen::MatrixXd info(1, 1);
    info(0, 0) = 1.0;
    return info;
  }
  JointCumulantTable joint_cumulants(const Eigen::VectorXd&,
                                     int) const override {
    return scalar_table(1.0, 0.0, 0.0);
  }
  Eigen::VectorXd initial_guess() const override { return vec1(1.0); }

 private:
  ParameterSpace space_;
};

// Bounded score: the adjusted equation has no root once the quantile shift
// exceeds the score range.
class BoundedScoreModel : public ScoreModel {
 public:
  BoundedScoreModel() : space_(ParameterSpace::unbounded(1)) {}
  int dim() const override { return 1; }
  const ParameterSpace& space() const override { return space_; }
  Eigen::VectorXd score(const Eigen::VectorXd& t) const override {
    return vec1(-0.5 * std::tanh(t[0]));
  }
  Eigen::MatrixXd expected_information(const Eigen::VectorXd& t) const override {
    Eigen::MatrixXd info(1, 1);
    double c = std::cosh(t[0]);
    info(0, 0) = 0.5 / (c * c);
    return info;
  }
  JointCumulantTable joint_cumulants(const Eigen::VectorXd&,
                                     int) const override {
    return scalar_table(1.0, 0.0, 0.0);
  }
  Eigen::VectorXd initial_guess() const override { return vec1(0.0); }

 private:
  ParameterSpace space_;
};

const std::vector<double> kGammaSample = {0.61, 1.91, 0.97, 3.42, 1.17, 2.45,
                                          0.38, 1.74, 0.86, 1.29, 2.03, 0.55};

// Independent root finder for the gamma mean: profile the shape out by
// bisection (its score is monotone in phi), then bisect the adjusted profile
// score on a bracket located by a fine grid walk.
double gamma_mean_root_oracle(const ScoreModel& model, double mu_hat,
                              double alpha) {
  auto profile_shape = [&](double mu) {
    double lo = 1e-4, hi = 1e4;
    for (int i = 0; i < 200; ++i) {
      double mid = 0.5 * (lo + hi);
      Eigen::VectorXd th(2);
      th << mu, mid;
      if (model.score(th)[1] > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };
  auto adjusted = [&](double mu) {
    Eigen::VectorXd th(2);
    th << mu, profile_shape(mu);
    CumulantSet c = profile_cumulants(model.joint_cumulants(th, 0));
    QuantileShift s = cornish_fisher_shift(c, alpha);
    return modified_score(model.score(th)[0], s);
  };
  double u = special::normal_quantile(alpha);
  double dir = u > 0.0 ? -1.0 : 1.0;
  double step = dir * 0.01 * mu_hat;
  double prev = mu_hat, fprev = adjusted(prev);
  for (int i = 0; i < 4000; ++i) {
    double next = prev + step;
    if (next <= 0.0) break;
    double fnext = adjusted(next);
    if ((fprev < 0.0) != (fnext < 0.0)) {
      double lo = std::min(prev, next), hi = std::max(prev, next);
      for (int j = 0; j < 100; ++j) {
        double mid = 0.5 * (lo + hi);
        double fmid = adjusted(mid);
        double flo = adjusted(lo);
        if ((flo < 0.0) != (fmid < 0.0)) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    prev = next;
    fprev = fnext;
  }
  return std::nan("");
}

}  // namespace

TEST_CASE("maximum likelihood fits recover closed-form estimates") {
  std::vector<double> y = {1.0, 2.0, 3.0, 2.0};  // mean 2
  auto model = exponential_model(y);
  FitResult fit = fit_mle(*model);
  CHECK(fit.theta[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(fit.score_norm <= 1e-8);
  CHECK(fit.information(0, 0) ==
        doctest::Approx(4.0 / (0.5 * 0.5)).epsilon(1e-8));

  auto gm = gamma_model(kGammaSample);
  FitResult gfit = fit_mle(*gm);
  double mean = 0.0;
  for (double v : kGammaSample) mean += v;
  mean /= static_cast<double>(kGammaSample.size());
  CHECK(gfit.theta[0] == doctest::Approx(mean).epsilon(1e-9));
  CHECK(gm->score(gfit.theta).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK(gfit.information(0, 0) > 0.0);
  CHECK(gfit.information(1, 1) > 0.0);
}

TEST_CASE("exponential quantile roots match the closed form") {
  for (int n : {3, 10, 50}) {
    std::vector<double> y(static_cast<size_t>(n), 1.0);  // mle = 1
    auto model = exponential_model(y);
    for (double alpha : {0.005, 0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975,
                         0.995}) {
      double u = special::normal_quantile(alpha);
      double expected = oracle::exponential_root(1.0, n, u);
      SolveReport r = solve_quantile_estimator(*model, alpha);
      CHECK(r.root == doctest::Approx(expected).epsilon(1e-8));
      CHECK(r.evaluations > 0);
      double k2 = static_cast<double>(n) / (r.root * r.root);
      CHECK(r.residual <= 1.01e-10 * std::sqrt(k2));
      if (alpha != 0.5) {
        CHECK(r.bracket_lo <= r.root);
        CHECK(r.bracket_hi >= r.root);
      }
    }
  }
}

TEST_CASE("normal variance quantile roots match the closed form") {
  std::vector<double> y = {0.5, -1.2, 2.0, 0.3, -0.7, 1.5, -2.2, 0.9, 1.1,
                           -0.4};
  double s2 = 0.0;
  for (double v : y) s2 += v * v;
  int n = static_cast<int>(y.size());
  double mle = s2 / n;
  auto model = normal_variance_model(y);
  FitResult fit = fit_mle(*model);
  CHECK(fit.theta[0] == doctest::Approx(mle).epsilon(1e-10));
  for (double alpha : {0.01, 0.05, 0.5, 0.9, 0.975}) {
    double u = special::normal_quantile(alpha);
    double expected = oracle::normal_variance_root(mle, n, u);
    SolveReport r = solve_quantile_estimator(*model, alpha);
    CHECK(r.root == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("median-adjusted estimates match their closed forms") {
  std::vector<double> y(5, 2.0);
  auto model = exponential_model(y);
  FitResult fit = fit_mle(*model);
  Eigen::VectorXd mbr = mbr_estimates(*model, fit);
  CHECK(mbr[0] == doctest::Approx(0.5 * (1.0 - 1.0 / 15.0)).epsilon(1e-9));

  std::vector<double> z = {0.5, -1.2, 2.0, 0.3, -0.7, 1.5, -2.2, 0.9, 1.1,
                           -0.4};
  double s2 = 0.0;
  for (double v : z) s2 += v * v;
  auto nv = normal_variance_model(z);
  FitResult nvfit = fit_mle(*nv);
  Eigen::VectorXd nvmbr = mbr_estimates(*nv, nvfit);
  CHECK(nvmbr[0] ==
        doctest::Approx((s2 / 10.0) / (1.0 - 2.0 / 30.0)).epsilon(1e-9));
}

TEST_CASE("profile solve with no nuisances equals the scalar solve") {
  std::vector<double> y(8, 0.75);
  auto model = exponential_model(y);
  for (double alpha : {0.1, 0.5, 0.9}) {
    SolveReport a = solve_quantile_estimator(*model, alpha);
    SolveReport b = solve_profile_quantile(*model, 0, alpha);
    CHECK(a.root == doctest::Approx(b.root).epsilon(1e-12));
    CHECK(b.nuisance.size() == 0);
  }
}

TEST_CASE("gamma profile roots agree with a grid-and-bisect oracle") {
  auto model = gamma_model(kGammaSample);
  FitResult fit = fit_mle(*model);
  for (double alpha : {0.025, 0.5, 0.975}) {
    double expected = gamma_mean_root_oracle(*model, fit.theta[0], alpha);
    REQUIRE(std::isfinite(expected));
    SolveReport r = solve_profile_quantile(*model, 0, alpha);
    CHECK(r.root == doctest::Approx(expected).epsilon(1e-6));
    REQUIRE(r.nuisance.size() == 1);
    // The reported nuisance value solves the shape score at the root.
    Eigen::VectorXd th(2);
    th << r.root, r.nuisance[0];
    CHECK(std::abs(model->score(th)[1]) <= 1e-6);
  }
}

TEST_CASE("gamma median root satisfies the skewness-shift identity") {
  auto model = gamma_model(kGammaSample);
  SolveReport r = solve_profile_quantile(*model, 0, 0.5);
  Eigen::VectorXd th(2);
  th << r.root, r.nuisance[0];
  // At the median root the mean score equals -1/(3 mu), the closed-form
  // value of the quantile shift for this model.
  CHECK(model->score(th)[0] ==
        doctest::Approx(-1.0 / (3.0 * r.root)).epsilon(1e-6));
}

TEST_CASE("quantile intervals are nested across levels") {
  std::vector<double> y = {0.8, 2.1, 0.4, 1.3, 0.9, 3.0, 1.7};
  auto model = exponential_model(y);
  FitResult fit = fit_mle(*model);
  ConfidenceInterval c90 =
      build_interval(*model, 0, 0.90, Kind::two_sided, Method::qbr, fit);
  ConfidenceInterval c95 =
      build_interval(*model, 0, 0.95, Kind::two_sided, Method::qbr, fit);
  ConfidenceInterval c99 =
      build_interval(*model, 0, 0.99, Kind::two_sided, Method::qbr, fit);
  CHECK(c99.lo < c95.lo);
  CHECK(c95.lo < c90.lo);
  CHECK(c90.lo < c90.hi);
  CHECK(c90.hi < c95.hi);
  CHECK(c95.hi < c99.hi);

  auto gm = gamma_model(kGammaSample);
  FitResult gfit = fit_mle(*gm);
  for (int psi = 0; psi < 2; ++psi) {
    ConfidenceInterval g90 =
        build_interval(*gm, psi, 0.90, Kind::two_sided, Method::qbr, gfit);
    ConfidenceInterval g99 =
        build_interval(*gm, psi, 0.99, Kind::two_sided, Method::qbr, gfit);
    CHECK(g99.lo < g90.lo);
    CHECK(g90.hi < g99.hi);
  }
}

TEST_CASE("one-sided intervals reuse the two-sided quantile roots") {
  std::vector<double> y = {0.8, 2.1, 0.4, 1.3, 0.9, 3.0, 1.7};
  auto model = exponential_model(y);
  FitResult fit = fit_mle(*model);
  ConfidenceInterval two =
      build_interval(*model, 0, 0.95, Kind::two_sided, Method::qbr, fit);
  ConfidenceInterval up =
      build_interval(*model, 0, 0.975, Kind::upper, Method::qbr, fit);
  ConfidenceInterval low =
      build_interval(*model, 0, 0.975, Kind::lower, Method::qbr, fit);
  CHECK(up.lo == doctest::Approx(two.lo).epsilon(1e-10));
  CHECK(std::isinf(up.hi));
  CHECK(low.hi == doctest::Approx(two.hi).epsilon(1e-10));
  CHECK(low.lo == 0.0);  // space boundary for a positive parameter
}

TEST_CASE("wald intervals use the requested centring") {
  std::vector<double> y(5, 1.0);  // exponential mle = 1, se = theta/sqrt(n)
  auto model = exponential_model(y);
  FitResult fit = fit_mle(*model);
  double u = special::normal_quantile(0.975);

  ConfidenceInterval ml =
      build_interval(*model, 0, 0.95, Kind::two_sided, Method::ml, fit);
  CHECK(ml.lo == doctest::Approx(1.0 - u / std::sqrt(5.0)).epsilon(1e-9));
  CHECK(ml.hi == doctest::Approx(1.0 + u / std::sqrt(5.0)).epsilon(1e-9));

  double centre = 1.0 - 1.0 / 15.0;
  ConfidenceInterval mbr =
      build_interval(*model, 0, 0.95, Kind::two_sided, Method::mbr, fit);
  CHECK(mbr.lo ==
        doctest::Approx(centre * (1.0 - u / std::sqrt(5.0))).epsilon(1e-8));
  CHECK(mbr.hi ==
        doctest::Approx(centre * (1.0 + u / std::sqrt(5.0))).epsilon(1e-8));

  ConfidenceInterval mlup =
      build_interval(*model, 0, 0.975, Kind::upper, Method::ml, fit);
  CHECK(mlup.lo == doctest::Approx(ml.lo).epsilon(1e-12));
  CHECK(std::isinf(mlup.hi));
}

TEST_CASE("quantile roots are equivariant under log reparameterisation") {
  std::vector<double> y = {0.8, 2.1, 0.4, 1.3, 0.9};
  auto theta_model = exponential_model(y);
  LogExponentialModel omega_model(y);
  for (double alpha : {0.025, 0.5, 0.975}) {
    SolveReport rt = solve_quantile_estimator(*theta_model, alpha);
    SolveReport rw = solve_quantile_estimator(omega_model, alpha);
    CHECK(std::exp(rw.root) == doctest::Approx(rt.root).epsilon(1e-8));
  }

  // Wald intervals do not share that property: mapping the log-scale ML
  // interval back disagrees with the direct one by a visible margin at n = 5.
  FitResult ft = fit_mle(*theta_model);
  FitResult fw = fit_mle(omega_model);
  ConfidenceInterval ct =
      build_interval(*theta_model, 0, 0.95, Kind::two_sided, Method::ml, ft);
  ConfidenceInterval cw =
      build_interval(omega_model, 0, 0.95, Kind::two_sided, Method::ml, fw);
  CHECK(std::abs(std::exp(cw.lo) - ct.lo) > 1e-2 * ft.theta[0]);
}

TEST_CASE("the search walks to the nearest root in the quantile direction") {
  CubicScoreModel model;
  // alpha < 1/2 searches upward: from 1 the first crossing is near 1.46,
  // where theta (theta-2)(theta-4) equals the shift 1.96.
  SolveReport up = solve_quantile_estimator(model, 0.025, 1.0);
  CHECK(up.root > 1.0);
  CHECK(up.root < 2.0);
  CHECK(std::abs(-up.root * (up.root - 2.0) * (up.root - 4.0) +
                 special::normal_quantile(0.975)) <= 1e-9);

  // alpha > 1/2 searches downward: from 3 the first crossing sits between
  // 2 and 3, not at the lower root near 1.
  SolveReport down = solve_quantile_estimator(model, 0.9, 3.0);
  CHECK(down.root > 2.0);
  CHECK(down.root < 3.0);

  // Median solves pick the nearest score zero in the descent direction.
  SolveReport med_lo = solve_quantile_estimator(model, 0.5, 1.0);
  CHECK(med_lo.root == doctest::Approx(0.0).epsilon(1e-8));
  SolveReport med_hi = solve_quantile_estimator(model, 0.5, 3.0);
  CHECK(med_hi.root == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(med_lo.n_sign_changes >= 1);
}

TEST_CASE("a bounded score reports the missing root") {
  BoundedScoreModel model;
  CHECK_THROWS_AS(solve_quantile_estimator(model, 0.975, 0.0), no_root_error);
  CHECK_THROWS_AS(solve_quantile_estimator(model, 0.025, 0.0), no_root_error);

  FitResult fit = fit_mle(model);
  CHECK(fit.theta[0] == doctest::Approx(0.0));
  ConfidenceInterval ci =
      build_interval(model, 0, 0.95, Kind::two_sided, Method::qbr, fit);
  CHECK(std::isinf(ci.lo));
  CHECK(ci.lo < 0.0);
  CHECK(std::isinf(ci.hi));
  CHECK(ci.hi > 0.0);
  CHECK(ci.diag.lo_open);
  CHECK(ci.diag.hi_open);
}

TEST_CASE("invalid solve requests are rejected") {
  std::vector<double> y(4, 1.0);
  auto model = exponential_model(y);
  FitResult fit = fit_mle(*model);
  CHECK_THROWS_AS(solve_quantile_estimator(*model, 0.0), domain_error);
  CHECK_THROWS_AS(solve_quantile_estimator(*model, 1.0), domain_error);
  CHECK_THROWS_AS(solve_profile_quantile(*model, 2, 0.5), config_error);
  CHECK_THROWS_AS(solve_profile_quantile(*model, -1, 0.5), config_error);
  CHECK_THROWS_AS(
      build_interval(*model, 0, 0.95, Kind::two_sided, Method::exact, fit),
      config_error);
  CHECK_THROWS_AS(
      build_interval(*model, 0, 1.5, Kind::two_sided, Method::qbr, fit),
      domain_error);
}
