#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cumulants.hpp"
#include "score_model.hpp"

namespace qbr {

// Link functions for the mean and dispersion linear predictors. d1 and d2
// are the first two derivatives of the inverse link with respect to the
// linear predictor: d1 = 1/g'(mu), d2 = -g''(mu)/g'(mu)^3.
enum class Link { identity, logit, log_link };

struct LinkEval {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

LinkEval eval_link(Link link, double eta);
const char* link_name(Link link);

// Density generator for symmetric location-scale families. The standardised
// residual eps = (y - mu)/phi has log-density s(eps) = L(eps^2) + constant
// with L specific to each generator.
class SymmetricDgf {
 public:
  enum class Kind { normal, student_t, logistic_i, logistic_ii, power_exp };

  static SymmetricDgf normal();
  static SymmetricDgf student_t(double nu);
  static SymmetricDgf logistic_i();
  static SymmetricDgf logistic_ii();
  static SymmetricDgf power_exp(double nu);

  Kind kind() const { return kind_; }
  double nu() const { return nu_; }
  const char* name() const;

  // Normalised log-density of the standardised residual.
  double log_density(double eps) const;

  // First four derivatives of s at eps.
  std::array<double, 4> s_derivatives(double eps) const;

 private:
  SymmetricDgf(Kind kind, double nu);

  Kind kind_;
  double nu_ = 0.0;
  double log_norm_ = 0.0;
};

// Expectations delta_{abcde} = E[s'(e)^a s''(e)^b s'''(e)^c s''''(e)^d e^e]
// of the standardised residual e, computed by adaptive quadrature (relative
// tolerance 1e-8) and cached per density generator.
struct DeltaConstants {
  double d20000 = 0.0;
  double d40000 = 0.0;
  double d20002 = 0.0;
  double d11001 = 0.0;
  double d11003 = 0.0;
  double d40001 = 0.0;
  double d30001 = 0.0;
  double d20001 = 0.0;
  double d01000 = 0.0;
  double d01002 = 0.0;
  double d40002 = 0.0;
  double d30000 = 0.0;
  double d40004 = 0.0;
  double d30003 = 0.0;
  double d00103 = 0.0;
  double d00101 = 0.0;
  double d40003 = 0.0;
};

const DeltaConstants& compute_deltas(const SymmetricDgf& dgf);

// Joint cumulants of one observation's (mu, phi) score components and score
// derivatives, on the observation's own parameter scale. v: second order;
// t: third order; q: fourth order; c_w_uv = cum(U_w, dU_u/dv).
struct ObsCumulants {
  double v_mm = 0.0, v_mf = 0.0, v_ff = 0.0;
  double t_mmm = 0.0, t_mmf = 0.0, t_mff = 0.0, t_fff = 0.0;
  double q_mmmm = 0.0, q_mmmf = 0.0, q_mmff = 0.0, q_mfff = 0.0,
         q_ffff = 0.0;
  double c_m_mm = 0.0, c_f_mm = 0.0, c_m_mf = 0.0, c_f_mf = 0.0,
         c_m_ff = 0.0, c_f_ff = 0.0;
};

// Beta(mu*phi, (1-mu)*phi) observation with mean mu and precision phi.
ObsCumulants beta_obs_cumulants(double mu, double phi);

// Symmetric location-scale observation with location mu and scale phi.
ObsCumulants symmetric_obs_cumulants(const DeltaConstants& d, double phi);

// Full joint cumulant tensors of the d-dimensional regression score vector.
// score_hessian(w, u, v) = cum(U_w, d^2 loglik / d theta_u d theta_v).
struct RegressionCumulants {
  Eigen::MatrixXd second;
  Tensor3 third;
  Tensor4 fourth;
  Tensor3 score_hessian;
};

struct RegressionSpec {
  enum class Family { beta, symmetric };

  Family family = Family::beta;
  Eigen::MatrixXd X;  // n x q mean design
  Eigen::MatrixXd Z;  // n x m dispersion design
  Link mean_link = Link::logit;
  Link disp_link = Link::log_link;
  std::optional<SymmetricDgf> dgf;      // required for Family::symmetric
  std::vector<std::string> mean_names;  // optional, defaults beta0, beta1, ..
  std::vector<std::string> disp_names;  // optional, defaults gamma0, ..
};

class RegressionModel : public ScoreModel {
 public:
  RegressionModel(RegressionSpec spec, Eigen::VectorXd y);

  int dim() const override { return q_ + m_; }
  const ParameterSpace& space() const override { return space_; }
  Eigen::VectorXd score(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd expected_information(
      const Eigen::VectorXd& theta) const override;
  JointCumulantTable joint_cumulants(const Eigen::VectorXd& theta,
                                     int psi) const override;
  Eigen::VectorXd initial_guess() const override;
  std::vector<std::string> parameter_names() const override;

  // Exposed for validation against quadrature and permutation checks.
  RegressionCumulants assemble_cumulants(const Eigen::VectorXd& theta) const;

  // Log-likelihood up to a constant not depending on theta; used by tests as
  // an oracle independent of the score implementation.
  double log_likelihood(const Eigen::VectorXd& theta) const;

  int n_obs() const { return n_; }
  int mean_dim() const { return q_; }
  int disp_dim() const { return m_; }

 private:
  struct ObsState {
    double mu = 0.0, phi = 0.0;
    double d1 = 0.0, d2 = 0.0;  // mean link factors
    double e1 = 0.0, e2 = 0.0;  // dispersion link factors
  };

  ObsState obs_state(const Eigen::VectorXd& theta, int i) const;
  void obs_score(const ObsState& s, double y, double& u_mu,
                 double& u_phi) const;
  ObsCumulants obs_cumulants(const ObsState& s) const;

  RegressionSpec spec_;
  Eigen::VectorXd y_;
  Eigen::VectorXd ystar_, ydag_;  // beta family sufficient statistics
  int n_ = 0, q_ = 0, m_ = 0;
  ParameterSpace space_;
  const DeltaConstants* deltas_ = nullptr;  // symmetric family only
};

std::unique_ptr<RegressionModel> regression_model(RegressionSpec spec,
                                                  Eigen::VectorXd y);

}  // namespace qbr
