#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "qbr.h"

namespace {

struct Model {
  qbr_model* h = nullptr;
  explicit Model(qbr_model* m) : h(m) {}
  ~Model() { qbr_model_free(h); }
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
};

std::vector<double> unit(int n) { return std::vector<double>(n, 1.0); }

// Closed-form quantile-root factor for the exponential rate model.
double exp_factor(double n, double u) {
  return u - (u * u - 1.0) / (3.0 * std::sqrt(n)) +
         (u * u * u - 7.0 * u) / (36.0 * n);
}

}  // namespace

TEST_CASE("lifecycle, fit, and names") {
  auto y = unit(5);
  Model m(qbr_model_exponential(y.data(), 5));
  REQUIRE(m.h != nullptr);
  CHECK(qbr_model_dim(m.h) == 1);

  double ml = 0.0, mbr = 0.0;
  CHECK(qbr_fit(m.h, &ml) == QBR_OK);
  CHECK(ml == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(qbr_mbr(m.h, &mbr) == QBR_OK);
  CHECK(mbr == doctest::Approx(1.0 - 1.0 / 15.0).epsilon(1e-8));

  char name[32];
  CHECK(qbr_parameter_name(m.h, 0, name, sizeof name) == QBR_OK);
  CHECK(std::string(name) == "theta");

  // Truncation keeps the result NUL terminated.
  char tiny[3];
  CHECK(qbr_parameter_name(m.h, 0, tiny, sizeof tiny) == QBR_OK);
  CHECK(std::string(tiny) == "th");

  CHECK(qbr_parameter_name(m.h, 7, name, sizeof name) == QBR_CONFIG_ERROR);
  CHECK(qbr_parameter_name(m.h, 0, nullptr, 8) == QBR_CONFIG_ERROR);
}

TEST_CASE("null and invalid arguments are configuration errors") {
  CHECK(qbr_model_dim(nullptr) == -1);
  CHECK(qbr_fit(nullptr, nullptr) == QBR_CONFIG_ERROR);
  CHECK(std::strlen(qbr_last_error()) > 0);

  CHECK(qbr_model_exponential(nullptr, 5) == nullptr);
  CHECK(std::strlen(qbr_last_error()) > 0);
  CHECK(qbr_model_exponential(unit(0).data(), 0) == nullptr);

  auto y = unit(5);
  Model m(qbr_model_exponential(y.data(), 5));
  REQUIRE(m.h != nullptr);
  CHECK(qbr_fit(m.h, nullptr) == QBR_CONFIG_ERROR);
  qbr_interval iv;
  CHECK(qbr_interval_compute(m.h, 3, QBR_METHOD_ML, 0.95, QBR_KIND_TWO_SIDED,
                             &iv) == QBR_CONFIG_ERROR);
  CHECK(qbr_interval_compute(m.h, 0, QBR_METHOD_ML, 1.2, QBR_KIND_TWO_SIDED,
                             &iv) == QBR_DOMAIN_ERROR);
}

TEST_CASE("invalid observations are domain errors") {
  std::vector<double> y = {0.4, -1.0, 0.7};
  CHECK(qbr_model_exponential(y.data(), 3) == nullptr);
  std::string msg = qbr_last_error();
  CHECK(msg.find("observation") != std::string::npos);
}

TEST_CASE("intervals and quantile roots match closed forms") {
  auto y = unit(5);
  Model m(qbr_model_exponential(y.data(), 5));
  REQUIRE(m.h != nullptr);
  double u = qbr_normal_quantile(0.975);

  qbr_interval ml;
  CHECK(qbr_interval_compute(m.h, 0, QBR_METHOD_ML, 0.95, QBR_KIND_TWO_SIDED,
                             &ml) == QBR_OK);
  CHECK(ml.lo == doctest::Approx(1.0 - u / std::sqrt(5.0)).epsilon(1e-9));
  CHECK(ml.hi == doctest::Approx(1.0 + u / std::sqrt(5.0)).epsilon(1e-9));
  CHECK(ml.lo_open == 0);
  CHECK(ml.hi_open == 0);

  qbr_interval mbr;
  CHECK(qbr_interval_compute(m.h, 0, QBR_METHOD_MBR, 0.95, QBR_KIND_TWO_SIDED,
                             &mbr) == QBR_OK);
  double centre = 1.0 - 1.0 / 15.0;
  CHECK(mbr.lo ==
        doctest::Approx(centre * (1.0 - u / std::sqrt(5.0))).epsilon(1e-8));
  CHECK(mbr.hi ==
        doctest::Approx(centre * (1.0 + u / std::sqrt(5.0))).epsilon(1e-8));

  double root = 0.0;
  CHECK(qbr_quantile_root(m.h, 0, 0.975, &root) == QBR_OK);
  CHECK(root ==
        doctest::Approx(1.0 - exp_factor(5.0, u) / std::sqrt(5.0))
            .epsilon(1e-10));

  qbr_interval qi;
  CHECK(qbr_interval_compute(m.h, 0, QBR_METHOD_QBR, 0.95, QBR_KIND_TWO_SIDED,
                             &qi) == QBR_OK);
  CHECK(qi.lo == doctest::Approx(root).epsilon(1e-10));

  qbr_interval up;
  CHECK(qbr_interval_compute(m.h, 0, QBR_METHOD_QBR, 0.95, QBR_KIND_UPPER,
                             &up) == QBR_OK);
  CHECK(up.hi_open == 1);
  CHECK(std::isinf(up.hi));

  // The exact pivot is family specific and has its own entry point.
  qbr_interval ex;
  CHECK(qbr_interval_compute(m.h, 0, QBR_METHOD_EXACT, 0.95,
                             QBR_KIND_TWO_SIDED, &ex) == QBR_CONFIG_ERROR);
  CHECK(std::string(qbr_last_error()).find("qbr_exact_interval") !=
        std::string::npos);
}

TEST_CASE("exact pivot intervals") {
  auto y = unit(5);
  qbr_interval ex;
  CHECK(qbr_exact_interval("exponential", y.data(), 5, 0.95,
                           QBR_KIND_TWO_SIDED, &ex) == QBR_OK);
  // Frozen chi-squared quantiles: 3.24697 and 20.48318 at 10 df.
  CHECK(ex.lo == doctest::Approx(3.2469727 / 10.0).epsilon(1e-6));
  CHECK(ex.hi == doctest::Approx(20.4831775 / 10.0).epsilon(1e-6));

  CHECK(qbr_exact_interval("weibull", y.data(), 5, 0.95, QBR_KIND_TWO_SIDED,
                           &ex) == QBR_CONFIG_ERROR);
}

TEST_CASE("boundary divergence surfaces as a status code") {
  std::vector<double> y = {0.3, 0.7, 1.1};  // all positive: shape runs away
  Model m(qbr_model_skew_normal(y.data(), 3));
  REQUIRE(m.h != nullptr);
  double ml = 0.0;
  CHECK(qbr_fit(m.h, &ml) == QBR_BOUNDARY_ERROR);
  CHECK(std::string(qbr_last_error()).find("boundary") != std::string::npos);
}

TEST_CASE("regression constructors and parameter names") {
  // Tiny balanced design; responses strictly inside (0, 1).
  std::vector<double> y = {0.2, 0.4, 0.5, 0.6, 0.3, 0.55, 0.45, 0.35,
                           0.25, 0.65, 0.5, 0.4};
  int n = 12, q = 2, mdim = 1;
  std::vector<double> x(n * q), z(n * mdim, 1.0);
  for (int i = 0; i < n; ++i) {
    x[i * q] = 1.0;
    x[i * q + 1] = (i % 4) * 0.25 - 0.375;
  }

  Model def(qbr_model_beta_regression(y.data(), n, x.data(), q, z.data(),
                                      mdim, nullptr, nullptr));
  REQUIRE(def.h != nullptr);
  CHECK(qbr_model_dim(def.h) == 3);
  char name[32];
  CHECK(qbr_parameter_name(def.h, 0, name, sizeof name) == QBR_OK);
  CHECK(std::string(name) == "beta0");
  CHECK(qbr_parameter_name(def.h, 2, name, sizeof name) == QBR_OK);
  CHECK(std::string(name) == "gamma0");

  const char* mean_names[] = {"(Intercept)", "dose"};
  const char* disp_names[] = {"(Intercept)"};
  Model named(qbr_model_beta_regression(y.data(), n, x.data(), q, z.data(),
                                        mdim, mean_names, disp_names));
  REQUIRE(named.h != nullptr);
  CHECK(qbr_parameter_name(named.h, 1, name, sizeof name) == QBR_OK);
  CHECK(std::string(name) == "dose");

  double theta[3];
  CHECK(qbr_fit(named.h, theta) == QBR_OK);
  qbr_interval iv;
  CHECK(qbr_interval_compute(named.h, 1, QBR_METHOD_QBR, 0.9,
                             QBR_KIND_TWO_SIDED, &iv) == QBR_OK);
  CHECK(iv.lo < iv.hi);

  CHECK(qbr_model_symmetric_regression("cauchy", 0.0, y.data(), n, x.data(),
                                       q, z.data(), mdim, nullptr,
                                       nullptr) == nullptr);
  CHECK(qbr_model_symmetric_regression("student_t", -2.0, y.data(), n,
                                       x.data(), q, z.data(), mdim, nullptr,
                                       nullptr) == nullptr);
}

TEST_CASE("simulation csv entry point") {
  char* csv = nullptr;
  CHECK(qbr_simulate_csv("exp5", "ml,qbr", "0.9", "two-sided", 6, 1234, 1,
                         nullptr, &csv) == QBR_OK);
  REQUIRE(csv != nullptr);
  std::string text = csv;
  qbr_string_free(csv);
  CHECK(text.rfind("parameter,method,kind,nominal_level,coverage,"
                   "discrepancy,mean_length,mc_se,failures\n", 0) == 0);
  CHECK(text.find("theta,ml,two-sided,") != std::string::npos);
  CHECK(text.find("theta,qbr,two-sided,") != std::string::npos);

  csv = nullptr;
  CHECK(qbr_simulate_csv("exp9", "ml", "0.9", "two-sided", 5, 1, 1, nullptr,
                         &csv) == QBR_CONFIG_ERROR);
  CHECK(csv == nullptr);
  CHECK(qbr_simulate_csv("exp5", "ml", "0.9", "two-sided", 5, 1, 1, nullptr,
                         nullptr) == QBR_CONFIG_ERROR);
  CHECK(qbr_simulate_csv("exp5", "ml", "1.5", "two-sided", 5, 1, 1, nullptr,
                         &csv) == QBR_CONFIG_ERROR);

  // Data-dependent scenario without its file: actionable guidance.
  CHECK(qbr_simulate_csv("readingskills", "ml", "0.9", "two-sided", 5, 1, 1,
                         "/nonexistent-dir", &csv) == QBR_CONFIG_ERROR);
  CHECK(std::string(qbr_last_error()).find("QBR_DATA_DIR") !=
        std::string::npos);
}

TEST_CASE("normal quantile helper") {
  CHECK(qbr_normal_quantile(0.975) == doctest::Approx(1.9599640).epsilon(1e-7));
  CHECK(qbr_normal_quantile(0.5) == doctest::Approx(0.0));
  CHECK(std::isnan(qbr_normal_quantile(0.0)));
  CHECK(std::isnan(qbr_normal_quantile(1.0)));
  CHECK(std::isnan(qbr_normal_quantile(-0.3)));
}
