#include "cumulants.hpp"

#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace qbr {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

// Solves k_a_b x = rhs (column-wise) with an LDLT factorization and verifies
// the residual, so near-singular nuisance information is reported instead of
// silently amplifying noise.
Eigen::MatrixXd checked_solve(const Eigen::LDLT<Eigen::MatrixXd>& ldlt,
                              const Eigen::MatrixXd& lhs,
                              const Eigen::MatrixXd& rhs) {
  Eigen::MatrixXd x = ldlt.solve(rhs);
  double scale = rhs.cwiseAbs().maxCoeff();
  if (scale == 0.0) return x;
  double resid = (lhs * x - rhs).cwiseAbs().maxCoeff();
  if (!std::isfinite(resid) || resid > 1e-8 * scale) {
    std::ostringstream os;
    os << "nuisance information is singular or badly conditioned "
       << "(solve residual " << resid << " against scale " << scale << ")";
    throw singular_error(os.str());
  }
  return x;
}

}  // namespace

void JointCumulantTable::resize(int nuisance_dim) {
  p = nuisance_dim;
  k_psi_a = Eigen::VectorXd::Zero(p);
  k_a_b = Eigen::MatrixXd::Zero(p, p);
  k_psi_ab = Eigen::MatrixXd::Zero(p, p);
  k_psi_a_b = Eigen::MatrixXd::Zero(p, p);
  k_c_ab = Tensor3(p);
  k_c_a_b = Tensor3(p);
  third.k_a_psi_psi = Eigen::VectorXd::Zero(p);
  third.k_a_b_psi = Eigen::MatrixXd::Zero(p, p);
  third.k_a_b_c = Tensor3(p);
  fourth.k_a_psi_psi_psi = Eigen::VectorXd::Zero(p);
  fourth.k_a_b_psi_psi = Eigen::MatrixXd::Zero(p, p);
  fourth.k_a_b_c_psi = Tensor3(p);
  fourth.k_a_b_c_d = Tensor4(p);
}

Eigen::VectorXd efficient_coeffs(const JointCumulantTable& table) {
  if (table.p == 0) return Eigen::VectorXd();
  if (!all_finite(table.k_a_b) || !table.k_psi_a.allFinite()) {
    throw domain_error("efficient_coeffs: non-finite joint cumulants");
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(table.k_a_b);
  return checked_solve(ldlt, table.k_a_b, table.k_psi_a);
}

CumulantSet profile_cumulants(const JointCumulantTable& table) {
  const int p = table.p;
  if (!std::isfinite(table.k_psi_psi)) {
    throw domain_error("profile_cumulants: non-finite k_psi_psi");
  }
  if (p == 0) {
    CumulantSet out{0.0, table.k_psi_psi, table.third.k_psi_psi_psi,
                    table.fourth.k_psi_psi_psi_psi};
    if (!(out.k2 > 0.0)) {
      throw singular_error("profile_cumulants: k2 is not positive");
    }
    return out;
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(table.k_a_b);

  // Orthogonal nuisance short-circuits the regression coefficients.
  const double cross = table.k_psi_a.cwiseAbs().maxCoeff();
  const double info_scale = table.k_a_b.cwiseAbs().maxCoeff();
  Eigen::VectorXd beta;
  if (cross <= 1e-12 * info_scale) {
    beta = Eigen::VectorXd::Zero(p);
  } else {
    beta = checked_solve(ldlt, table.k_a_b, table.k_psi_a);
  }

  CumulantSet out;
  out.k2 = table.k_psi_psi - beta.dot(table.k_psi_a);

  // k1 = -1/2 tr(K^{-1} W) with
  // W_ab = k_psi_ab + k_psi_a_b - sum_c beta_c (k_c_ab + k_c_a_b).
  Eigen::MatrixXd w = table.k_psi_ab + table.k_psi_a_b;
  for (int c = 0; c < p; ++c) {
    if (beta[c] == 0.0) continue;
    for (int a = 0; a < p; ++a) {
      for (int b = 0; b < p; ++b) {
        w(a, b) -= beta[c] * (table.k_c_ab(c, a, b) + table.k_c_a_b(c, a, b));
      }
    }
  }
  out.k1 = -0.5 * checked_solve(ldlt, table.k_a_b, w).trace();

  const ThirdOrderCumulants& t3 = table.third;
  double k3 = t3.k_psi_psi_psi;
  k3 -= 3.0 * beta.dot(t3.k_a_psi_psi);
  k3 += 3.0 * beta.dot(t3.k_a_b_psi * beta);
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) {
      for (int c = 0; c < p; ++c) {
        k3 -= beta[a] * beta[b] * beta[c] * t3.k_a_b_c(a, b, c);
      }
    }
  }
  out.k3 = k3;

  const FourthOrderCumulants& t4 = table.fourth;
  double k4 = t4.k_psi_psi_psi_psi;
  k4 -= 4.0 * beta.dot(t4.k_a_psi_psi_psi);
  k4 += 6.0 * beta.dot(t4.k_a_b_psi_psi * beta);
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) {
      double bb = beta[a] * beta[b];
      if (bb == 0.0) continue;
      for (int c = 0; c < p; ++c) {
        k4 -= 4.0 * bb * beta[c] * t4.k_a_b_c_psi(a, b, c);
        for (int d = 0; d < p; ++d) {
          k4 += bb * beta[c] * beta[d] * t4.k_a_b_c_d(a, b, c, d);
        }
      }
    }
  }
  out.k4 = k4;

  if (!(out.k2 > 0.0) || !std::isfinite(out.k1) || !std::isfinite(out.k3) ||
      !std::isfinite(out.k4)) {
    std::ostringstream os;
    os << "profile_cumulants: degenerate reduction (k1=" << out.k1
       << ", k2=" << out.k2 << ", k3=" << out.k3 << ", k4=" << out.k4 << ")";
    throw singular_error(os.str());
  }
  return out;
}

}  // namespace qbr
