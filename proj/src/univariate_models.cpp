#include "univariate_models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "special_functions.hpp"

namespace qbr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPosInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* msg) {
  if (!ok) throw config_error(msg);
}

void validate_data(const std::vector<double>& y, bool positive,
                   const char* family) {
  std::ostringstream os;
  if (y.empty()) {
    os << family << ": needs at least one observation";
    throw config_error(os.str());
  }
  for (double v : y) {
    if (!std::isfinite(v) || (positive && v <= 0.0)) {
      os << family << ": invalid observation " << v;
      throw config_error(os.str());
    }
  }
}

JointCumulantTable scalar_table(double k2, double k3, double k4) {
  JointCumulantTable t;
  t.resize(0);
  t.k_psi_psi = k2;
  t.third.k_psi_psi_psi = k3;
  t.fourth.k_psi_psi_psi_psi = k4;
  return t;
}

class ExponentialModel final : public ScoreModel {
 public:
  explicit ExponentialModel(const std::vector<double>& y)
      : n_(static_cast<double>(y.size())) {
    validate_data(y, true, "exponential model");
    sum_ = 0.0;
    for (double v : y) sum_ += v;
    space_ = ParameterSpace::positive(1);
  }

  int dim() const override { return 1; }
  const ParameterSpace& space() const override { return space_; }

  Eigen::VectorXd score(const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    Eigen::VectorXd u(1);
    u[0] = n_ / theta[0] - sum_;
    return u;
  }

  Eigen::MatrixXd expected_information(
      const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    Eigen::MatrixXd i(1, 1);
    i(0, 0) = n_ / (theta[0] * theta[0]);
    return i;
  }

  JointCumulantTable joint_cumulants(const Eigen::VectorXd& theta,
                                     int psi) const override {
    check_theta(theta);
    require(psi == 0, "exponential model: psi must be 0");
    double t = theta[0];
    return scalar_table(n_ / (t * t), -2.0 * n_ / (t * t * t),
                        6.0 * n_ / (t * t * t * t));
  }

  Eigen::VectorXd initial_guess() const override {
    Eigen::VectorXd v(1);
    v[0] = n_ / sum_;
    return v;
  }

 private:
  double n_;
  double sum_ = 0.0;
  ParameterSpace space_;
};

class NormalVarianceModel final : public ScoreModel {
 public:
  explicit NormalVarianceModel(const std::vector<double>& y)
      : n_(static_cast<double>(y.size())) {
    validate_data(y, false, "normal variance model");
    sumsq_ = 0.0;
    for (double v : y) sumsq_ += v * v;
    require(sumsq_ > 0.0,
            "normal variance model: sum of squares must be positive");
    space_ = ParameterSpace::positive(1);
  }

  int dim() const override { return 1; }
  const ParameterSpace& space() const override { return space_; }

  Eigen::VectorXd score(const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    double t = theta[0];
    Eigen::VectorXd u(1);
    u[0] = sumsq_ / (2.0 * t * t) - n_ / (2.0 * t);
    return u;
  }

  Eigen::MatrixXd expected_information(
      const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    Eigen::MatrixXd i(1, 1);
    i(0, 0) = n_ / (2.0 * theta[0] * theta[0]);
    return i;
  }

  JointCumulantTable joint_cumulants(const Eigen::VectorXd& theta,
                                     int psi) const override {
    check_theta(theta);
    require(psi == 0, "normal variance model: psi must be 0");
    double t = theta[0];
    return scalar_table(n_ / (2.0 * t * t), n_ / (t * t * t),
                        3.0 * n_ / (t * t * t * t));
  }

  Eigen::VectorXd initial_guess() const override {
    Eigen::VectorXd v(1);
    v[0] = sumsq_ / n_;
    return v;
  }

 private:
  double n_;
  double sumsq_ = 0.0;
  ParameterSpace space_;
};

class ExpFamilyModel final : public ScoreModel {
 public:
  ExpFamilyModel(ExpFamilySpec spec, const std::vector<double>& y, double init)
      : spec_(std::move(spec)), n_(static_cast<double>(y.size())),
        init_(init) {
    require(spec_.space.dim() == 1,
            "exponential family model: space must be one-dimensional");
    validate_data(y, false, "exponential family model");
    sum_t_ = 0.0;
    for (double v : y) sum_t_ += spec_.T(v);
  }

  int dim() const override { return 1; }
  const ParameterSpace& space() const override { return spec_.space; }

  Eigen::VectorXd score(const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    Eigen::VectorXd u(1);
    u[0] = sum_t_ - n_ * spec_.A(theta[0])[1];
    return u;
  }

  Eigen::MatrixXd expected_information(
      const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    Eigen::MatrixXd i(1, 1);
    i(0, 0) = n_ * spec_.A(theta[0])[2];
    return i;
  }

  JointCumulantTable joint_cumulants(const Eigen::VectorXd& theta,
                                     int psi) const override {
    check_theta(theta);
    require(psi == 0, "exponential family model: psi must be 0");
    auto a = spec_.A(theta[0]);
    return scalar_table(n_ * a[2], n_ * a[3], n_ * a[4]);
  }

  Eigen::VectorXd initial_guess() const override {
    Eigen::VectorXd v(1);
    v[0] = init_;
    return v;
  }

 private:
  ExpFamilySpec spec_;
  double n_;
  double init_;
  double sum_t_ = 0.0;
};

}  // namespace

double normal_density_ratio(double x) {
  if (x >= -30.0) {
    return special::normal_pdf(x) / special::normal_cdf(x);
  }
  // phi/Phi from the Mills-ratio tail series in t = -x.
  double t = -x;
  double it2 = 1.0 / (t * t);
  return t * (1.0 + it2 * (1.0 + it2 * (-2.0 + it2 * (10.0 - it2 * 74.0))));
}

namespace {

class SkewNormalModel final : public ScoreModel {
 public:
  explicit SkewNormalModel(const std::vector<double>& y) : y_(y) {
    validate_data(y, false, "skew-normal model");
    space_ = ParameterSpace::unbounded(1);
  }

  int dim() const override { return 1; }
  const ParameterSpace& space() const override { return space_; }

  Eigen::VectorXd score(const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    double t = theta[0];
    double s = 0.0;
    for (double v : y_) s += v * normal_density_ratio(t * v);
    Eigen::VectorXd u(1);
    u[0] = s;
    return u;
  }

  Eigen::MatrixXd expected_information(
      const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    Eigen::MatrixXd i(1, 1);
    i(0, 0) = static_cast<double>(y_.size()) * moments(theta[0]).a22;
    return i;
  }

  JointCumulantTable joint_cumulants(const Eigen::VectorXd& theta,
                                     int psi) const override {
    check_theta(theta);
    require(psi == 0, "skew-normal model: psi must be 0");
    Moments m = moments(theta[0]);
    double n = static_cast<double>(y_.size());
    return scalar_table(n * m.a22, n * m.a33,
                        n * (m.a44 - 3.0 * m.a22 * m.a22));
  }

  Eigen::VectorXd initial_guess() const override {
    Eigen::VectorXd v(1);
    v[0] = moment_shape_estimate();
    return v;
  }

 private:
  struct Moments {
    double a22 = 0.0, a33 = 0.0, a44 = 0.0;
  };

  // E(y^k zeta(theta y)^k) under the density 2 phi(y) Phi(theta y), for
  // k = 2, 3, 4.
  Moments moments(double theta) const {
    uint64_t key;
    static_assert(sizeof(key) == sizeof(theta));
    std::memcpy(&key, &theta, sizeof(key));
    {
      std::lock_guard<std::mutex> lock(cache_mutex_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    Moments m;
    auto a_kk = [theta](int k) {
      return special::integrate(
                 [theta, k](double y) {
                   double w = 2.0 * special::normal_pdf(y) *
                              std::exp(special::log_normal_cdf(theta * y));
                   if (w == 0.0) return 0.0;
                   double z = normal_density_ratio(theta * y);
                   return w * std::pow(y * z, k);
                 },
                 kNegInf, kPosInf, 1e-10)
          .value;
    };
    m.a22 = a_kk(2);
    m.a33 = a_kk(3);
    m.a44 = a_kk(4);
    std::lock_guard<std::mutex> lock(cache_mutex_);
    cache_.emplace(key, m);
    return m;
  }

  // Method-of-moments start from the sample skewness, clamped inside the
  // attainable range.
  double moment_shape_estimate() const {
    size_t n = y_.size();
    if (n < 3) return 0.0;
    double mean = 0.0;
    for (double v : y_) mean += v;
    mean /= static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0;
    for (double v : y_) {
      double d = v - mean;
      m2 += d * d;
      m3 += d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    if (!(m2 > 0.0)) return 0.0;
    constexpr double pi = 3.14159265358979323846;
    double g1 = m3 / std::pow(m2, 1.5);
    double s = g1 < 0.0 ? -1.0 : 1.0;
    double t = std::pow(std::min(std::abs(g1), 0.99), 2.0 / 3.0);
    double c = std::pow(0.5 * (4.0 - pi), 2.0 / 3.0);
    double delta2 = std::min(0.5 * pi * t / (t + c), 0.998);
    double delta = s * std::sqrt(delta2);
    double shape = delta / std::sqrt(1.0 - delta * delta);
    return std::clamp(shape, -20.0, 20.0);
  }

  std::vector<double> y_;
  ParameterSpace space_;
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<uint64_t, Moments> cache_;
};

class GammaModel final : public ScoreModel {
 public:
  explicit GammaModel(const std::vector<double>& y)
      : n_(static_cast<double>(y.size())) {
    validate_data(y, true, "gamma model");
    sum_ = sumlog_ = 0.0;
    for (double v : y) {
      sum_ += v;
      sumlog_ += std::log(v);
    }
    mean_ = sum_ / n_;
    double ss = 0.0;
    for (double v : y) ss += (v - mean_) * (v - mean_);
    var_ = ss / n_;
    space_ = ParameterSpace::positive(2);
  }

  int dim() const override { return 2; }
  const ParameterSpace& space() const override { return space_; }

  std::vector<std::string> parameter_names() const override {
    return {"mu", "phi"};
  }

  Eigen::VectorXd score(const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    double mu = theta[0], phi = theta[1];
    Eigen::VectorXd u(2);
    u[0] = phi / (mu * mu) * (sum_ - n_ * mu);
    u[1] = n_ * (std::log(phi / mu) + 1.0 - special::digamma(phi)) + sumlog_ -
           sum_ / mu;
    return u;
  }

  Eigen::MatrixXd expected_information(
      const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    double mu = theta[0], phi = theta[1];
    Eigen::MatrixXd i = Eigen::MatrixXd::Zero(2, 2);
    i(0, 0) = n_ * phi / (mu * mu);
    i(1, 1) = n_ * (special::trigamma(phi) - 1.0 / phi);
    return i;
  }

  JointCumulantTable joint_cumulants(const Eigen::VectorXd& theta,
                                     int psi) const override {
    check_theta(theta);
    require(psi == 0 || psi == 1, "gamma model: psi must be 0 or 1");
    double mu = theta[0], phi = theta[1];
    double p1 = special::trigamma(phi);
    double p2 = special::polygamma(2, phi);
    double p3 = special::polygamma(3, phi);

    // Per-observation joint cumulants of (U_mu, U_phi) and the curvature.
    double v_mm = phi / (mu * mu);
    double v_ff = p1 - 1.0 / phi;
    double t_mmm = 2.0 * phi / (mu * mu * mu);
    double t_mmf = -1.0 / (mu * mu);
    double t_mff = 0.0;
    double t_fff = p2 + 1.0 / (phi * phi);
    double q_mmmm = 6.0 * phi / (mu * mu * mu * mu);
    double q_mmmf = -4.0 / (mu * mu * mu);
    double q_mmff = 2.0 / (mu * mu * phi);
    double q_mfff = 0.0;
    double q_ffff = p3 - 2.0 / (phi * phi * phi);
    double c_m_mm = -2.0 * phi / (mu * mu * mu);
    double c_f_mm = 0.0;
    double c_m_ff = 0.0;
    double c_f_ff = 0.0;

    JointCumulantTable t;
    t.resize(1);
    if (psi == 0) {
      t.k_psi_psi = n_ * v_mm;
      t.k_psi_a[0] = 0.0;
      t.k_a_b(0, 0) = n_ * v_ff;
      t.k_psi_ab(0, 0) = n_ * c_m_ff;
      t.k_psi_a_b(0, 0) = n_ * t_mff;
      t.k_c_ab(0, 0, 0) = n_ * c_f_ff;
      t.k_c_a_b(0, 0, 0) = n_ * t_fff;
      t.third.k_psi_psi_psi = n_ * t_mmm;
      t.third.k_a_psi_psi[0] = n_ * t_mmf;
      t.third.k_a_b_psi(0, 0) = n_ * t_mff;
      t.third.k_a_b_c(0, 0, 0) = n_ * t_fff;
      t.fourth.k_psi_psi_psi_psi = n_ * q_mmmm;
      t.fourth.k_a_psi_psi_psi[0] = n_ * q_mmmf;
      t.fourth.k_a_b_psi_psi(0, 0) = n_ * q_mmff;
      t.fourth.k_a_b_c_psi(0, 0, 0) = n_ * q_mfff;
      t.fourth.k_a_b_c_d(0, 0, 0, 0) = n_ * q_ffff;
    } else {
      t.k_psi_psi = n_ * v_ff;
      t.k_psi_a[0] = 0.0;
      t.k_a_b(0, 0) = n_ * v_mm;
      t.k_psi_ab(0, 0) = n_ * c_f_mm;
      t.k_psi_a_b(0, 0) = n_ * t_mmf;
      t.k_c_ab(0, 0, 0) = n_ * c_m_mm;
      t.k_c_a_b(0, 0, 0) = n_ * t_mmm;
      t.third.k_psi_psi_psi = n_ * t_fff;
      t.third.k_a_psi_psi[0] = n_ * t_mff;
      t.third.k_a_b_psi(0, 0) = n_ * t_mmf;
      t.third.k_a_b_c(0, 0, 0) = n_ * t_mmm;
      t.fourth.k_psi_psi_psi_psi = n_ * q_ffff;
      t.fourth.k_a_psi_psi_psi[0] = n_ * q_mfff;
      t.fourth.k_a_b_psi_psi(0, 0) = n_ * q_mmff;
      t.fourth.k_a_b_c_psi(0, 0, 0) = n_ * q_mmmf;
      t.fourth.k_a_b_c_d(0, 0, 0, 0) = n_ * q_mmmm;
    }
    return t;
  }

  Eigen::VectorXd initial_guess() const override {
    Eigen::VectorXd v(2);
    v[0] = mean_;
    v[1] = var_ > 0.0 ? std::clamp(mean_ * mean_ / var_, 1e-3, 1e6) : 1e3;
    return v;
  }

 private:
  double n_;
  double sum_ = 0.0, sumlog_ = 0.0, mean_ = 0.0, var_ = 0.0;
  ParameterSpace space_;
};

}  // namespace

std::unique_ptr<ScoreModel> exponential_model(const std::vector<double>& y) {
  return std::make_unique<ExponentialModel>(y);
}

std::unique_ptr<ScoreModel> normal_variance_model(
    const std::vector<double>& y) {
  return std::make_unique<NormalVarianceModel>(y);
}

std::unique_ptr<ScoreModel> exp_family_model(ExpFamilySpec spec,
                                             const std::vector<double>& y,
                                             double init) {
  return std::make_unique<ExpFamilyModel>(std::move(spec), y, init);
}

std::unique_ptr<ScoreModel> skew_normal_model(const std::vector<double>& y) {
  return std::make_unique<SkewNormalModel>(y);
}

std::unique_ptr<ScoreModel> gamma_model(const std::vector<double>& y) {
  return std::make_unique<GammaModel>(y);
}

ConfidenceInterval exact_interval(ExactFamily family,
                                  const std::vector<double>& y, double level,
                                  Kind kind) {
  if (!(level > 0.0 && level < 1.0)) {
    std::ostringstream os;
    os << "exact_interval: requires 0 < level < 1, got " << level;
    throw domain_error(os.str());
  }
  ConfidenceInterval ci;
  ci.parameter = "theta";
  ci.method = Method::exact;
  ci.kind = kind;
  ci.level = level;

  auto q = [](double p, double df) { return special::chisq_quantile(p, df); };

  if (family == ExactFamily::exponential) {
    validate_data(y, true, "exact exponential interval");
    double s = 0.0;
    for (double v : y) s += v;
    double df = 2.0 * static_cast<double>(y.size());
    switch (kind) {
      case Kind::two_sided:
        ci.lo = q(0.5 * (1.0 - level), df) / (2.0 * s);
        ci.hi = q(0.5 * (1.0 + level), df) / (2.0 * s);
        break;
      case Kind::upper:
        ci.lo = q(1.0 - level, df) / (2.0 * s);
        ci.hi = kPosInf;
        ci.diag.hi_open = true;
        break;
      case Kind::lower:
        ci.lo = 0.0;
        ci.diag.lo_open = true;
        ci.hi = q(level, df) / (2.0 * s);
        break;
    }
    return ci;
  }

  validate_data(y, false, "exact normal variance interval");
  double s2 = 0.0;
  for (double v : y) s2 += v * v;
  if (!(s2 > 0.0)) {
    throw config_error(
        "exact normal variance interval: sum of squares must be positive");
  }
  double df = static_cast<double>(y.size());
  switch (kind) {
    case Kind::two_sided:
      ci.lo = s2 / q(0.5 * (1.0 + level), df);
      ci.hi = s2 / q(0.5 * (1.0 - level), df);
      break;
    case Kind::upper:
      ci.lo = s2 / q(level, df);
      ci.hi = kPosInf;
      ci.diag.hi_open = true;
      break;
    case Kind::lower:
      ci.lo = 0.0;
      ci.diag.lo_open = true;
      ci.hi = s2 / q(1.0 - level, df);
      break;
  }
  return ci;
}

}  // namespace qbr
