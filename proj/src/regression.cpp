#include "regression.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <utility>

#include "errors.hpp"
#include "special_functions.hpp"

namespace qbr {

namespace sf = special;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

[[noreturn]] void obs_fail(const char* what, int i) {
  std::ostringstream os;
  os << what << " at observation " << (i + 1);
  throw domain_error(os.str());
}

}  // namespace

LinkEval eval_link(Link link, double eta) {
  LinkEval e;
  switch (link) {
    case Link::identity:
      e.value = eta;
      e.d1 = 1.0;
      e.d2 = 0.0;
      return e;
    case Link::logit: {
      double mu = eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta))
                             : std::exp(eta) / (1.0 + std::exp(eta));
      e.value = mu;
      e.d1 = mu * (1.0 - mu);
      e.d2 = mu * (1.0 - mu) * (1.0 - 2.0 * mu);
      return e;
    }
    case Link::log_link: {
      double v = std::exp(eta);
      e.value = v;
      e.d1 = v;
      e.d2 = v;
      return e;
    }
  }
  throw config_error("unknown link function");
}

const char* link_name(Link link) {
  switch (link) {
    case Link::identity: return "identity";
    case Link::logit: return "logit";
    case Link::log_link: return "log";
  }
  return "?";
}

namespace {

// Normalising constant of the logistic-I generator: the base kernel
// exp(-u)/(1+exp(-u))^2 with u = eps^2 does not integrate to one.
double logistic_i_log_norm() {
  static std::once_flag once;
  static double value = 0.0;
  std::call_once(once, [] {
    auto kernel = [](double eps) {
      double u = eps * eps;
      double em = std::exp(-u);
      return em / ((1.0 + em) * (1.0 + em));
    };
    auto total = sf::integrate(kernel, 0.0, kInf, 1e-12);
    value = -std::log(2.0 * total.value);
  });
  return value;
}

}  // namespace

SymmetricDgf::SymmetricDgf(Kind kind, double nu) : kind_(kind), nu_(nu) {
  switch (kind_) {
    case Kind::normal:
      log_norm_ = -0.5 * kLog2Pi;
      break;
    case Kind::student_t:
      if (!(nu_ > 0.0) || !std::isfinite(nu_)) {
        throw config_error("student_t degrees of freedom must be positive");
      }
      log_norm_ = std::lgamma(0.5 * (nu_ + 1.0)) - std::lgamma(0.5 * nu_) -
                  0.5 * std::log(nu_ * M_PI) +
                  0.5 * (nu_ + 1.0) * std::log(nu_);
      break;
    case Kind::logistic_i:
      log_norm_ = logistic_i_log_norm();
      break;
    case Kind::logistic_ii:
      log_norm_ = 0.0;
      break;
    case Kind::power_exp:
      if (!(nu_ > -1.0) || !(nu_ <= 1.0)) {
        throw config_error(
            "power_exp kurtosis parameter must lie in (-1, 1]");
      }
      log_norm_ = -std::lgamma(0.5 * (3.0 + nu_)) -
                  0.5 * (3.0 + nu_) * std::log(2.0);
      break;
  }
}

SymmetricDgf SymmetricDgf::normal() { return {Kind::normal, 0.0}; }
SymmetricDgf SymmetricDgf::student_t(double nu) {
  return {Kind::student_t, nu};
}
SymmetricDgf SymmetricDgf::logistic_i() { return {Kind::logistic_i, 0.0}; }
SymmetricDgf SymmetricDgf::logistic_ii() { return {Kind::logistic_ii, 0.0}; }
SymmetricDgf SymmetricDgf::power_exp(double nu) {
  return {Kind::power_exp, nu};
}

const char* SymmetricDgf::name() const {
  switch (kind_) {
    case Kind::normal: return "normal";
    case Kind::student_t: return "student_t";
    case Kind::logistic_i: return "logistic_i";
    case Kind::logistic_ii: return "logistic_ii";
    case Kind::power_exp: return "power_exp";
  }
  return "?";
}

double SymmetricDgf::log_density(double eps) const {
  double u = eps * eps;
  switch (kind_) {
    case Kind::normal:
      return log_norm_ - 0.5 * u;
    case Kind::student_t:
      return log_norm_ - 0.5 * (nu_ + 1.0) * std::log(nu_ + u);
    case Kind::logistic_i:
      return log_norm_ - u - 2.0 * std::log1p(std::exp(-u));
    case Kind::logistic_ii: {
      double a = std::abs(eps);
      return -a - 2.0 * std::log1p(std::exp(-a));
    }
    case Kind::power_exp:
      return log_norm_ - 0.5 * std::pow(u, 1.0 / (1.0 + nu_));
  }
  return 0.0;
}

std::array<double, 4> SymmetricDgf::s_derivatives(double eps) const {
  double u = eps * eps;
  switch (kind_) {
    case Kind::normal:
      return {-eps, -1.0, 0.0, 0.0};
    case Kind::student_t: {
      double w = nu_ + u;
      double l1 = -0.5 * (nu_ + 1.0) / w;
      double l2 = 0.5 * (nu_ + 1.0) / (w * w);
      double l3 = -(nu_ + 1.0) / (w * w * w);
      double l4 = 3.0 * (nu_ + 1.0) / (w * w * w * w);
      return {2.0 * eps * l1, 2.0 * l1 + 4.0 * u * l2,
              12.0 * eps * l2 + 8.0 * eps * u * l3,
              12.0 * l2 + 48.0 * u * l3 + 16.0 * u * u * l4};
    }
    case Kind::logistic_i: {
      // Expressed through exp(-u) so large residuals do not overflow.
      double em = std::exp(-u);
      double den = 1.0 + em;
      double l1 = -1.0 + 2.0 * em / den;
      double l2 = -2.0 * em / (den * den);
      double l3 = 2.0 * em * (1.0 - em) / (den * den * den);
      double l4 = -2.0 * em * (1.0 - 4.0 * em + em * em) /
                  (den * den * den * den);
      return {2.0 * eps * l1, 2.0 * l1 + 4.0 * u * l2,
              12.0 * eps * l2 + 8.0 * eps * u * l3,
              12.0 * l2 + 48.0 * u * l3 + 16.0 * u * u * l4};
    }
    case Kind::logistic_ii: {
      double t = std::tanh(0.5 * eps);
      double c2 = 1.0 - t * t;
      return {-t, -0.5 * c2, 0.5 * c2 * t, 0.25 * c2 * (c2 - 2.0 * t * t)};
    }
    case Kind::power_exp: {
      // s(eps) = -|eps|^(2r)/2 with r = 1/(1+nu); differentiated directly
      // because the chain rule through u = eps^2 is indeterminate at zero.
      double r = 1.0 / (1.0 + nu_);
      double a = std::abs(eps);
      double sg = eps < 0.0 ? -1.0 : 1.0;
      double c1 = r;
      double c2 = c1 * (2.0 * r - 1.0);
      double c3 = c2 * (2.0 * r - 2.0);
      double c4 = c3 * (2.0 * r - 3.0);
      return {-c1 * sg * std::pow(a, 2.0 * r - 1.0),
              -c2 * std::pow(a, 2.0 * r - 2.0),
              -c3 * sg * std::pow(a, 2.0 * r - 3.0),
              -c4 * std::pow(a, 2.0 * r - 4.0)};
    }
  }
  return {0.0, 0.0, 0.0, 0.0};
}

const DeltaConstants& compute_deltas(const SymmetricDgf& dgf) {
  static std::mutex lock;
  static std::map<std::pair<int, long long>, DeltaConstants> cache;

  long long nu_bits;
  double nu = dgf.nu();
  std::memcpy(&nu_bits, &nu, sizeof nu_bits);
  auto key = std::make_pair(static_cast<int>(dgf.kind()), nu_bits);

  std::lock_guard<std::mutex> guard(lock);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  auto expect = [&dgf](int a, int b, int c, int d, int e) {
    auto f = [&](double eps) {
      auto s = dgf.s_derivatives(eps);
      double w = std::exp(dgf.log_density(eps));
      return ipow(s[0], a) * ipow(s[1], b) * ipow(s[2], c) * ipow(s[3], d) *
             ipow(eps, e) * w;
    };
    // Split at zero: several generators have an integrable kink there.
    auto lo = sf::integrate(f, -kInf, 0.0, 1e-8);
    auto hi = sf::integrate(f, 0.0, kInf, 1e-8);
    return lo.value + hi.value;
  };

  DeltaConstants d;
  d.d20000 = expect(2, 0, 0, 0, 0);
  d.d40000 = expect(4, 0, 0, 0, 0);
  d.d20002 = expect(2, 0, 0, 0, 2);
  d.d11001 = expect(1, 1, 0, 0, 1);
  d.d11003 = expect(1, 1, 0, 0, 3);
  d.d40001 = expect(4, 0, 0, 0, 1);
  d.d30001 = expect(3, 0, 0, 0, 1);
  d.d20001 = expect(2, 0, 0, 0, 1);
  d.d01000 = expect(0, 1, 0, 0, 0);
  d.d01002 = expect(0, 1, 0, 0, 2);
  d.d40002 = expect(4, 0, 0, 0, 2);
  d.d30000 = expect(3, 0, 0, 0, 0);
  d.d40004 = expect(4, 0, 0, 0, 4);
  d.d30003 = expect(3, 0, 0, 0, 3);
  d.d00103 = expect(0, 0, 1, 0, 3);
  d.d00101 = expect(0, 0, 1, 0, 1);
  d.d40003 = expect(4, 0, 0, 0, 3);
  return cache.emplace(key, d).first->second;
}

ObsCumulants beta_obs_cumulants(double mu, double phi) {
  if (!(mu > 0.0) || !(mu < 1.0) || !std::isfinite(mu)) {
    throw domain_error("beta mean must lie in (0, 1)");
  }
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    throw domain_error("beta precision must be positive");
  }
  double a = mu * phi, b = (1.0 - mu) * phi, om = 1.0 - mu;
  double p1a = sf::trigamma(a), p1b = sf::trigamma(b),
         p1f = sf::trigamma(phi);
  double p2a = sf::polygamma(2, a), p2b = sf::polygamma(2, b),
         p2f = sf::polygamma(2, phi);
  double p3a = sf::polygamma(3, a), p3b = sf::polygamma(3, b),
         p3f = sf::polygamma(3, phi);

  ObsCumulants r;
  r.v_mm = phi * phi * (p1a + p1b);
  r.v_mf = phi * (mu * p1a - om * p1b);
  r.v_ff = mu * mu * p1a + om * om * p1b - p1f;

  r.t_mmm = ipow(phi, 3) * (p2a - p2b);
  r.t_mmf = phi * phi * (mu * p2a + om * p2b);
  r.t_mff = phi * (mu * mu * p2a - om * om * p2b);
  r.t_fff = ipow(mu, 3) * p2a + ipow(om, 3) * p2b - p2f;

  r.q_mmmm = ipow(phi, 4) * (p3a + p3b);
  r.q_mmmf = ipow(phi, 3) * (mu * p3a - om * p3b);
  r.q_mmff = phi * phi * (mu * mu * p3a + om * om * p3b);
  r.q_mfff = phi * (ipow(mu, 3) * p3a - ipow(om, 3) * p3b);
  r.q_ffff = ipow(mu, 4) * p3a + ipow(om, 4) * p3b - p3f;

  // The mean-mean and dispersion-dispersion curvatures are deterministic,
  // so their covariances with the score vanish identically.
  r.c_m_mm = 0.0;
  r.c_f_mm = 0.0;
  r.c_m_ff = 0.0;
  r.c_f_ff = 0.0;
  r.c_m_mf = phi * (p1a + p1b);
  r.c_f_mf = mu * p1a - om * p1b;
  return r;
}

ObsCumulants symmetric_obs_cumulants(const DeltaConstants& d, double phi) {
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    throw domain_error("scale parameter must be positive");
  }
  double f2 = phi * phi, f3 = f2 * phi, f4 = f3 * phi;

  ObsCumulants r;
  r.v_mm = d.d20000 / f2;
  r.v_mf = 0.0;
  r.v_ff = (d.d20002 - 1.0) / f2;

  r.t_mmm = 0.0;
  r.t_mmf = 2.0 * d.d11001 / f3;
  r.t_mff = 0.0;
  r.t_fff = 2.0 * (d.d11003 + 1.0) / f3;

  r.q_mmmm = (d.d40000 - 3.0 * d.d20000 * d.d20000) / f4;
  r.q_mmmf = (d.d30000 + d.d40001) / f4;
  r.q_mmff = (2.0 * d.d30001 + d.d40002 - d.d01000 * d.d01002) / f4;
  r.q_mfff = (d.d40001 + 3.0 * d.d30001 + 3.0 * d.d20001) / f4;
  r.q_ffff = (d.d40004 + 4.0 * d.d30003 + 12.0 * d.d20002 -
              3.0 * d.d20002 * d.d20002 - 6.0) /
             f4;

  r.c_m_mm = 0.0;
  r.c_f_mm = d.d00101 / f3;
  r.c_m_mf = -(d.d11001 - d.d01000) / f3;
  r.c_f_mf = 0.0;
  r.c_m_ff = 0.0;
  r.c_f_ff = (4.0 * d.d01002 + d.d00103 - 2.0) / f3;
  return r;
}

RegressionModel::RegressionModel(RegressionSpec spec, Eigen::VectorXd y)
    : spec_(std::move(spec)), y_(std::move(y)) {
  n_ = static_cast<int>(spec_.X.rows());
  q_ = static_cast<int>(spec_.X.cols());
  m_ = static_cast<int>(spec_.Z.cols());

  if (n_ < 1 || q_ < 1 || m_ < 1) {
    throw config_error("regression model requires nonempty designs");
  }
  if (spec_.Z.rows() != n_ || y_.size() != n_) {
    throw config_error(
        "design matrices and response must have the same number of rows");
  }
  if (q_ + m_ >= n_) {
    throw config_error(
        "model dimension must be smaller than the number of observations");
  }
  if (!spec_.X.allFinite() || !spec_.Z.allFinite()) {
    throw config_error("design matrices contain non-finite entries");
  }
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(spec_.X).rank() < q_) {
    throw config_error("mean design matrix is rank deficient");
  }
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(spec_.Z).rank() < m_) {
    throw config_error("dispersion design matrix is rank deficient");
  }
  if (!spec_.mean_names.empty() &&
      static_cast<int>(spec_.mean_names.size()) != q_) {
    throw config_error("mean parameter names do not match the design width");
  }
  if (!spec_.disp_names.empty() &&
      static_cast<int>(spec_.disp_names.size()) != m_) {
    throw config_error(
        "dispersion parameter names do not match the design width");
  }

  for (int i = 0; i < n_; ++i) {
    if (!std::isfinite(y_[i])) {
      std::ostringstream os;
      os << "response is not finite at observation " << (i + 1);
      throw config_error(os.str());
    }
  }

  if (spec_.family == RegressionSpec::Family::beta) {
    ystar_.resize(n_);
    ydag_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      if (!(y_[i] > 0.0) || !(y_[i] < 1.0)) {
        std::ostringstream os;
        os << "beta response must lie strictly in (0, 1); observation "
           << (i + 1) << " is " << y_[i];
        throw config_error(os.str());
      }
      ystar_[i] = std::log(y_[i] / (1.0 - y_[i]));
      ydag_[i] = std::log(1.0 - y_[i]);
    }
  } else {
    if (!spec_.dgf.has_value()) {
      throw config_error(
          "symmetric regression requires a density generator");
    }
    deltas_ = &compute_deltas(*spec_.dgf);
  }

  space_ = ParameterSpace::unbounded(q_ + m_);
}

RegressionModel::ObsState RegressionModel::obs_state(
    const Eigen::VectorXd& theta, int i) const {
  double ex = spec_.X.row(i).dot(theta.head(q_));
  double ez = spec_.Z.row(i).dot(theta.segment(q_, m_));
  if (!std::isfinite(ex) || !std::isfinite(ez)) {
    obs_fail("linear predictor is not finite", i);
  }
  LinkEval lm = eval_link(spec_.mean_link, ex);
  LinkEval ld = eval_link(spec_.disp_link, ez);

  ObsState s;
  s.mu = lm.value;
  s.d1 = lm.d1;
  s.d2 = lm.d2;
  s.phi = ld.value;
  s.e1 = ld.d1;
  s.e2 = ld.d2;

  if (!std::isfinite(s.mu)) obs_fail("mean predictor is not finite", i);
  if (spec_.family == RegressionSpec::Family::beta &&
      !(s.mu > 0.0 && s.mu < 1.0)) {
    obs_fail("mean predictor falls outside (0, 1)", i);
  }
  if (!(s.phi > 0.0) || !std::isfinite(s.phi)) {
    obs_fail("dispersion predictor is not positive and finite", i);
  }
  return s;
}

void RegressionModel::obs_score(const ObsState& s, double y, double& u_mu,
                                double& u_phi) const {
  if (spec_.family == RegressionSpec::Family::beta) {
    double a = s.mu * s.phi, b = (1.0 - s.mu) * s.phi;
    double mustar = sf::digamma(a) - sf::digamma(b);
    double mudag = sf::digamma(b) - sf::digamma(s.phi);
    double ystar = std::log(y / (1.0 - y));
    double ydag = std::log1p(-y);
    u_mu = s.phi * (ystar - mustar);
    u_phi = s.mu * (ystar - mustar) + (ydag - mudag);
  } else {
    double eps = (y - s.mu) / s.phi;
    auto sd = spec_.dgf->s_derivatives(eps);
    u_mu = -sd[0] / s.phi;
    u_phi = -(1.0 + sd[0] * eps) / s.phi;
  }
}

ObsCumulants RegressionModel::obs_cumulants(const ObsState& s) const {
  if (spec_.family == RegressionSpec::Family::beta) {
    return beta_obs_cumulants(s.mu, s.phi);
  }
  return symmetric_obs_cumulants(*deltas_, s.phi);
}

Eigen::VectorXd RegressionModel::score(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  int d = dim();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
  try {
    for (int i = 0; i < n_; ++i) {
      ObsState s = obs_state(theta, i);
      double um = 0.0, uf = 0.0;
      obs_score(s, y_[i], um, uf);
      for (int j = 0; j < q_; ++j) u[j] += spec_.X(i, j) * s.d1 * um;
      for (int j = 0; j < m_; ++j) u[q_ + j] += spec_.Z(i, j) * s.e1 * uf;
    }
  } catch (const domain_error&) {
    // Let the fitter's step-halving recover from an inadmissible trial point.
    return Eigen::VectorXd::Constant(
        d, std::numeric_limits<double>::quiet_NaN());
  }
  return u;
}

Eigen::MatrixXd RegressionModel::expected_information(
    const Eigen::VectorXd& theta) const {
  check_theta(theta);
  int d = dim();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < n_; ++i) {
    ObsState s = obs_state(theta, i);
    ObsCumulants oc = obs_cumulants(s);
    for (int a = 0; a < q_; ++a) {
      double xa = spec_.X(i, a) * s.d1;
      for (int b = 0; b < q_; ++b) {
        info(a, b) += xa * spec_.X(i, b) * s.d1 * oc.v_mm;
      }
      for (int b = 0; b < m_; ++b) {
        double c = xa * spec_.Z(i, b) * s.e1 * oc.v_mf;
        info(a, q_ + b) += c;
        info(q_ + b, a) += c;
      }
    }
    for (int a = 0; a < m_; ++a) {
      double za = spec_.Z(i, a) * s.e1;
      for (int b = 0; b < m_; ++b) {
        info(q_ + a, q_ + b) += za * spec_.Z(i, b) * s.e1 * oc.v_ff;
      }
    }
  }
  return info;
}

RegressionCumulants RegressionModel::assemble_cumulants(
    const Eigen::VectorXd& theta) const {
  check_theta(theta);
  int d = dim();
  RegressionCumulants rc;
  rc.second = Eigen::MatrixXd::Zero(d, d);
  rc.third = Tensor3(d);
  rc.fourth = Tensor4(d);
  rc.score_hessian = Tensor3(d);

  std::vector<double> load(d), raw(d);
  std::vector<int> tau(d);
  for (int j = 0; j < q_; ++j) tau[j] = 0;
  for (int j = 0; j < m_; ++j) tau[q_ + j] = 1;

  for (int i = 0; i < n_; ++i) {
    ObsState s = obs_state(theta, i);
    ObsCumulants oc = obs_cumulants(s);

    for (int j = 0; j < q_; ++j) {
      raw[j] = spec_.X(i, j);
      load[j] = raw[j] * s.d1;
    }
    for (int j = 0; j < m_; ++j) {
      raw[q_ + j] = spec_.Z(i, j);
      load[q_ + j] = raw[q_ + j] * s.e1;
    }

    // Joint cumulants of the per-observation (mu, phi) score components,
    // indexed by the number of dispersion slots among the arguments.
    const double v2[3] = {oc.v_mm, oc.v_mf, oc.v_ff};
    const double v3[4] = {oc.t_mmm, oc.t_mmf, oc.t_mff, oc.t_fff};
    const double v4[5] = {oc.q_mmmm, oc.q_mmmf, oc.q_mmff, oc.q_mfff,
                          oc.q_ffff};

    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        rc.second(a, b) += load[a] * load[b] * v2[tau[a] + tau[b]];
        for (int c = 0; c < d; ++c) {
          double l3 = load[a] * load[b] * load[c];
          rc.third(a, b, c) += l3 * v3[tau[a] + tau[b] + tau[c]];
          for (int e = 0; e < d; ++e) {
            rc.fourth(a, b, c, e) +=
                l3 * load[e] * v4[tau[a] + tau[b] + tau[c] + tau[e]];
          }
        }
      }
    }

    // cum(U_w, d^2 loglik / d theta_u d theta_v): the second derivative of
    // the linear predictor chain contributes a link-curvature term.
    const double c_mm[2] = {oc.c_m_mm, oc.c_f_mm};
    const double c_mf[2] = {oc.c_m_mf, oc.c_f_mf};
    const double c_ff[2] = {oc.c_m_ff, oc.c_f_ff};
    for (int w = 0; w < d; ++w) {
      double lw = load[w];
      if (lw == 0.0) continue;
      for (int u = 0; u < d; ++u) {
        for (int v = 0; v < d; ++v) {
          double base;
          if (tau[u] == 0 && tau[v] == 0) {
            base = s.d1 * s.d1 * c_mm[tau[w]] + s.d2 * v2[tau[w]];
          } else if (tau[u] == 1 && tau[v] == 1) {
            base = s.e1 * s.e1 * c_ff[tau[w]] + s.e2 * v2[tau[w] + 1];
          } else {
            base = s.d1 * s.e1 * c_mf[tau[w]];
          }
          rc.score_hessian(w, u, v) += lw * raw[u] * raw[v] * base;
        }
      }
    }
  }
  return rc;
}

JointCumulantTable RegressionModel::joint_cumulants(
    const Eigen::VectorXd& theta, int psi) const {
  int d = dim();
  if (psi < 0 || psi >= d) {
    throw config_error("interest index outside the parameter vector");
  }
  RegressionCumulants rc = assemble_cumulants(theta);

  std::vector<int> nu;
  nu.reserve(d - 1);
  for (int j = 0; j < d; ++j) {
    if (j != psi) nu.push_back(j);
  }
  int p = d - 1;

  JointCumulantTable tb;
  tb.resize(p);
  tb.k_psi_psi = rc.second(psi, psi);
  tb.third.k_psi_psi_psi = rc.third(psi, psi, psi);
  tb.fourth.k_psi_psi_psi_psi = rc.fourth(psi, psi, psi, psi);

  for (int a = 0; a < p; ++a) {
    tb.k_psi_a[a] = rc.second(psi, nu[a]);
    tb.third.k_a_psi_psi[a] = rc.third(nu[a], psi, psi);
    tb.fourth.k_a_psi_psi_psi[a] = rc.fourth(nu[a], psi, psi, psi);
    for (int b = 0; b < p; ++b) {
      tb.k_a_b(a, b) = rc.second(nu[a], nu[b]);
      tb.k_psi_ab(a, b) = rc.score_hessian(psi, nu[a], nu[b]);
      tb.k_psi_a_b(a, b) = rc.third(psi, nu[a], nu[b]);
      tb.third.k_a_b_psi(a, b) = rc.third(nu[a], nu[b], psi);
      tb.fourth.k_a_b_psi_psi(a, b) = rc.fourth(nu[a], nu[b], psi, psi);
      for (int c = 0; c < p; ++c) {
        tb.k_c_ab(a, b, c) = rc.score_hessian(nu[a], nu[b], nu[c]);
        tb.k_c_a_b(a, b, c) = rc.third(nu[a], nu[b], nu[c]);
        tb.third.k_a_b_c(a, b, c) = rc.third(nu[a], nu[b], nu[c]);
        tb.fourth.k_a_b_c_psi(a, b, c) = rc.fourth(nu[a], nu[b], nu[c], psi);
        for (int e = 0; e < p; ++e) {
          tb.fourth.k_a_b_c_d(a, b, c, e) =
              rc.fourth(nu[a], nu[b], nu[c], nu[e]);
        }
      }
    }
  }
  return tb;
}

Eigen::VectorXd RegressionModel::initial_guess() const {
  auto link_apply = [](Link link, double x) {
    switch (link) {
      case Link::identity:
        return x;
      case Link::logit: {
        double c = std::min(std::max(x, 1e-6), 1.0 - 1e-6);
        return std::log(c / (1.0 - c));
      }
      case Link::log_link:
        return std::log(std::max(x, 1e-300));
    }
    return x;
  };

  Eigen::VectorXd v(n_);
  for (int i = 0; i < n_; ++i) v[i] = link_apply(spec_.mean_link, y_[i]);
  Eigen::VectorXd beta = spec_.X.colPivHouseholderQr().solve(v);

  Eigen::VectorXd mu_hat(n_);
  for (int i = 0; i < n_; ++i) {
    mu_hat[i] = eval_link(spec_.mean_link, spec_.X.row(i).dot(beta)).value;
  }
  Eigen::VectorXd resid = y_ - mu_hat;
  double s2 = resid.squaredNorm() / std::max(1, n_ - q_);

  double phi0;
  if (spec_.family == RegressionSpec::Family::beta) {
    // Moment relation var(y) = mu(1-mu)/(1+phi).
    double vbar = 0.0;
    for (int i = 0; i < n_; ++i) vbar += mu_hat[i] * (1.0 - mu_hat[i]);
    vbar /= n_;
    phi0 = vbar / std::max(s2, 1e-12) - 1.0;
    phi0 = std::min(std::max(phi0, 0.5), 1e5);
  } else {
    phi0 = std::sqrt(std::max(s2, 1e-12));
  }

  double target = link_apply(spec_.disp_link, phi0);
  Eigen::VectorXd gamma = spec_.Z.colPivHouseholderQr().solve(
      Eigen::VectorXd::Constant(n_, target));

  Eigen::VectorXd theta(q_ + m_);
  theta.head(q_) = beta;
  theta.segment(q_, m_) = gamma;
  if (!space_.contains(theta)) {
    throw config_error("could not form a finite starting value");
  }
  return theta;
}

double RegressionModel::log_likelihood(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  double ll = 0.0;
  for (int i = 0; i < n_; ++i) {
    ObsState s = obs_state(theta, i);
    if (spec_.family == RegressionSpec::Family::beta) {
      double a = s.mu * s.phi, b = (1.0 - s.mu) * s.phi;
      ll += (a - 1.0) * std::log(y_[i]) + (b - 1.0) * std::log1p(-y_[i]) +
            std::lgamma(s.phi) - std::lgamma(a) - std::lgamma(b);
    } else {
      double eps = (y_[i] - s.mu) / s.phi;
      ll += spec_.dgf->log_density(eps) - std::log(s.phi);
    }
  }
  return ll;
}

std::vector<std::string> RegressionModel::parameter_names() const {
  std::vector<std::string> names;
  names.reserve(q_ + m_);
  for (int j = 0; j < q_; ++j) {
    names.push_back(spec_.mean_names.empty() ? "beta" + std::to_string(j)
                                             : spec_.mean_names[j]);
  }
  for (int j = 0; j < m_; ++j) {
    names.push_back(spec_.disp_names.empty() ? "gamma" + std::to_string(j)
                                             : spec_.disp_names[j]);
  }
  return names;
}

std::unique_ptr<RegressionModel> regression_model(RegressionSpec spec,
                                                  Eigen::VectorXd y) {
  return std::make_unique<RegressionModel>(std::move(spec), std::move(y));
}

}  // namespace qbr
