#pragma once

#include <Eigen/Dense>
#include <vector>

namespace qbr {

// First four cumulants of a (profile-reduced) scalar score.
struct CumulantSet {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;
};

class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), v_(static_cast<size_t>(n) * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int a, int b, int c) {
    return v_[(static_cast<size_t>(a) * n_ + b) * n_ + c];
  }
  double operator()(int a, int b, int c) const {
    return v_[(static_cast<size_t>(a) * n_ + b) * n_ + c];
  }

 private:
  int n_ = 0;
  std::vector<double> v_;
};

class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int n) : n_(n), v_(static_cast<size_t>(n) * n * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int a, int b, int c, int d) {
    return v_[((static_cast<size_t>(a) * n_ + b) * n_ + c) * n_ + d];
  }
  double operator()(int a, int b, int c, int d) const {
    return v_[((static_cast<size_t>(a) * n_ + b) * n_ + c) * n_ + d];
  }

 private:
  int n_ = 0;
  std::vector<double> v_;
};

struct ThirdOrderCumulants {
  double k_psi_psi_psi = 0.0;
  Eigen::VectorXd k_a_psi_psi;  // cum(U_a, U_psi, U_psi)
  Eigen::MatrixXd k_a_b_psi;    // cum(U_a, U_b, U_psi)
  Tensor3 k_a_b_c;              // cum(U_a, U_b, U_c)
};

struct FourthOrderCumulants {
  double k_psi_psi_psi_psi = 0.0;
  Eigen::VectorXd k_a_psi_psi_psi;  // cum(U_a, U_psi, U_psi, U_psi)
  Eigen::MatrixXd k_a_b_psi_psi;    // cum(U_a, U_b, U_psi, U_psi)
  Tensor3 k_a_b_c_psi;              // cum(U_a, U_b, U_c, U_psi)
  Tensor4 k_a_b_c_d;                // cum(U_a, U_b, U_c, U_d)
};

// Joint cumulants of the interest score U_psi, the nuisance scores U_a, and
// the nuisance curvature blocks U_ab, evaluated at one parameter point.
// Nuisance indices run over the p coordinates other than psi, in ascending
// parameter order. k_psi_a_b and third.k_a_b_psi describe the same symmetric
// quantity and must be filled consistently; likewise k_c_a_b and
// third.k_a_b_c.
struct JointCumulantTable {
  int p = 0;
  double k_psi_psi = 0.0;
  Eigen::VectorXd k_psi_a;    // cum(U_psi, U_a)
  Eigen::MatrixXd k_a_b;      // cum(U_a, U_b), nuisance information
  Eigen::MatrixXd k_psi_ab;   // cum(U_psi, U_ab)
  Eigen::MatrixXd k_psi_a_b;  // cum(U_psi, U_a, U_b)
  Tensor3 k_c_ab;             // cum(U_c, U_ab), index order (c)(a, b)
  Tensor3 k_c_a_b;            // cum(U_c, U_a, U_b)
  ThirdOrderCumulants third;
  FourthOrderCumulants fourth;

  void resize(int nuisance_dim);
};

// Regression coefficients of U_psi on the nuisance scores: solves
// k_a_b beta = k_psi_a. Empty for p = 0.
Eigen::VectorXd efficient_coeffs(const JointCumulantTable& table);

// Reduces the joint table to the first four cumulants of the efficient
// (profile) score for psi. k1 keeps the exact O(1) nuisance-adjustment
// term; k2..k4 are the cumulants of U_psi - beta' U_a.
CumulantSet profile_cumulants(const JointCumulantTable& table);

}  // namespace qbr
