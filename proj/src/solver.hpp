#pragma once

#include <optional>
#include <string>

#include "quantile_shift.hpp"
#include "score_model.hpp"

namespace qbr {

enum class Method { ml, mbr, qbr, exact };
enum class Kind { two_sided, lower, upper };

const char* method_name(Method m);
const char* kind_name(Kind k);

struct FitResult {
  Eigen::VectorXd theta;
  Eigen::MatrixXd information;  // expected information at theta
  int iterations = 0;
  double score_norm = 0.0;
};

// Fisher scoring with expected information and step halving. Declares
// boundary divergence when the walk is monotone for many iterations while
// the information collapses, or when an iterate runs off to a bound.
FitResult fit_mle(const ScoreModel& model,
                  std::optional<Eigen::VectorXd> init = {});

struct SolveReport {
  double root = 0.0;
  int evaluations = 0;      // modified-profile-score evaluations
  int iterations = 0;       // refinement iterations after bracketing
  double residual = 0.0;    // |modified score| at the root
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int n_sign_changes = 0;   // sign alternations across every evaluation
  Eigen::VectorXd nuisance; // nuisance fit at the root (empty when p = 0)
};

// Root of the alpha-quantile modified score for a one-parameter model.
SolveReport solve_quantile_estimator(const ScoreModel& model, double alpha,
                                     std::optional<double> init = {});

// Root in psi of the alpha-quantile modified profile score, with the
// nuisance coordinates refitted at every trial value (warm started).
// init supplies the full parameter vector to start from (default: MLE).
SolveReport solve_profile_quantile(const ScoreModel& model, int psi,
                                   double alpha,
                                   std::optional<Eigen::VectorXd> init = {});

// Componentwise median-unbiased-adjusted estimates: each coordinate is the
// alpha = 1/2 root of its own modified profile score.
Eigen::VectorXd mbr_estimates(const ScoreModel& model, const FitResult& fit);

struct IntervalDiagnostics {
  bool lo_open = false;  // endpoint sits on the parameter-space boundary
  bool hi_open = false;
  int n_sign_changes = 0;
};

struct ConfidenceInterval {
  std::string parameter;
  Method method = Method::qbr;
  Kind kind = Kind::two_sided;
  double level = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  IntervalDiagnostics diag;
};

// Confidence interval for coordinate psi. Two-sided intervals at level g use
// the (1+g)/2 and (1-g)/2 quantile roots; "upper" is [root(g), +inf) and
// "lower" is (space bound, root(1-g)]. ml/mbr intervals are Wald intervals
// centred at the ML or median-adjusted estimates with expected-information
// standard errors evaluated at the centring point. A missing root leaves
// that endpoint open at the space boundary and flags it in diag.
// mbr_theta, when supplied, skips recomputing mbr_estimates.
ConfidenceInterval build_interval(const ScoreModel& model, int psi,
                                  double level, Kind kind, Method method,
                                  const FitResult& fit,
                                  const Eigen::VectorXd* mbr_theta = nullptr);

// Batch interval construction: fits the model once, computes the
// median-adjusted centre once if any method needs it, then builds one
// interval per (target, method, level, kind) combination in that nesting
// order. Parameter names are taken from the model.
std::vector<ConfidenceInterval> model_intervals(
    const ScoreModel& model, const std::vector<int>& targets,
    const std::vector<Method>& methods, const std::vector<double>& levels,
    const std::vector<Kind>& kinds);

}  // namespace qbr
