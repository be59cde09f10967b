#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "cumulants.hpp"
#include "errors.hpp"

namespace qbr {

// Open interval (lo, hi) for one coordinate.
struct Bound {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

class ParameterSpace {
 public:
  ParameterSpace() = default;
  explicit ParameterSpace(std::vector<Bound> bounds)
      : bounds_(std::move(bounds)) {}

  static ParameterSpace unbounded(int d) {
    return ParameterSpace(std::vector<Bound>(d));
  }
  static ParameterSpace positive(int d) {
    std::vector<Bound> b(d);
    for (auto& bi : b) bi.lo = 0.0;
    return ParameterSpace(b);
  }

  int dim() const { return static_cast<int>(bounds_.size()); }
  const Bound& bound(int i) const { return bounds_.at(i); }
  bool contains(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim()) return false;
    for (int i = 0; i < dim(); ++i) {
      double v = theta[i];
      if (!std::isfinite(v) || v <= bounds_[i].lo || v >= bounds_[i].hi) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<Bound> bounds_;
};

// A parametric model described through its score function. joint_cumulants
// returns the exact joint cumulants of the score and nuisance curvature at
// the supplied parameter point, with psi selecting the interest coordinate
// and the remaining coordinates, in ascending order, acting as nuisances.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual int dim() const = 0;
  virtual const ParameterSpace& space() const = 0;
  virtual Eigen::VectorXd score(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::MatrixXd expected_information(
      const Eigen::VectorXd& theta) const = 0;
  virtual JointCumulantTable joint_cumulants(const Eigen::VectorXd& theta,
                                             int psi) const = 0;
  virtual Eigen::VectorXd initial_guess() const = 0;

  virtual std::vector<std::string> parameter_names() const {
    std::vector<std::string> names;
    if (dim() == 1) {
      names.push_back("theta");
    } else {
      for (int i = 0; i < dim(); ++i) {
        names.push_back("theta" + std::to_string(i + 1));
      }
    }
    return names;
  }

 protected:
  void check_theta(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim() || !space().contains(theta)) {
      throw domain_error("parameter value outside the model parameter space");
    }
  }
};

}  // namespace qbr
