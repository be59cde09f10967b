#include "solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "special_functions.hpp"

namespace qbr {

namespace {

constexpr int kMaxFitIterations = 200;
constexpr int kMaxHalvings = 60;
constexpr int kMaxScanSteps = 60;
constexpr int kMaxRefineIterations = 80;

Eigen::VectorXd checked_info_solve(const Eigen::MatrixXd& info,
                                   const Eigen::VectorXd& rhs,
                                   const char* what) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  Eigen::VectorXd x = ldlt.solve(rhs);
  double scale = rhs.cwiseAbs().maxCoeff();
  if (scale > 0.0) {
    double resid = (info * x - rhs).cwiseAbs().maxCoeff();
    if (!std::isfinite(resid) || resid > 1e-8 * scale) {
      std::ostringstream os;
      os << what << ": expected information is singular or badly conditioned";
      throw singular_error(os.str());
    }
  }
  return x;
}

// Distance walked since the start, on the log scale for positive-constrained
// coordinates so divergence toward either 0 or infinity registers.
double travel(const Bound& b, double from, double to) {
  if (b.lo == 0.0 && std::isinf(b.hi) && from > 0.0 && to > 0.0) {
    return std::abs(std::log(to / from));
  }
  return std::abs(to - from) / (1.0 + std::abs(from));
}

struct ScoringProblem {
  const ScoreModel& model;
  std::vector<int> active;  // coordinates being optimized

  Eigen::VectorXd sub_score(const Eigen::VectorXd& full) const {
    Eigen::VectorXd u = model.score(full);
    Eigen::VectorXd s(active.size());
    for (size_t i = 0; i < active.size(); ++i) s[i] = u[active[i]];
    return s;
  }
  Eigen::MatrixXd sub_info(const Eigen::VectorXd& full) const {
    Eigen::MatrixXd info = model.expected_information(full);
    Eigen::MatrixXd s(active.size(), active.size());
    for (size_t i = 0; i < active.size(); ++i) {
      for (size_t j = 0; j < active.size(); ++j) {
        s(i, j) = info(active[i], active[j]);
      }
    }
    return s;
  }
};

// Shared Fisher-scoring loop. Updates `full` in place over the active
// coordinates until tol(full, sub_score) holds; returns iterations used.
// detect_boundary enables the divergence heuristics of fit_mle.
int scoring_iterations(const ScoringProblem& prob, Eigen::VectorXd& full,
                       const std::function<bool(const Eigen::VectorXd&,
                                                const Eigen::VectorXd&)>& tol,
                       bool detect_boundary, int max_iterations,
                       double* final_norm) {
  const ParameterSpace& space = prob.model.space();
  const int na = static_cast<int>(prob.active.size());
  Eigen::VectorXd start = full;
  Eigen::VectorXd u = prob.sub_score(full);
  if (!u.allFinite()) {
    throw domain_error("fisher scoring: score is not finite at the start");
  }
  std::vector<int> streak(na, 0);
  std::vector<int> last_dir(na, 0);
  Eigen::VectorXd info0_diag;

  for (int iter = 0; iter < max_iterations; ++iter) {
    Eigen::MatrixXd info = prob.sub_info(full);
    if (info0_diag.size() == 0) info0_diag = info.diagonal();

    if (detect_boundary) {
      for (int i = 0; i < na; ++i) {
        int c = prob.active[i];
        const Bound& b = space.bound(c);
        double v = full[c];
        bool runaway = std::abs(v) > 1e10 ||
                       (b.lo == 0.0 && v < 1e-300);
        bool drifting = streak[i] >= 15 &&
                        info(i, i) <= 1e-2 * info0_diag[i] &&
                        travel(b, start[c], v) > 1.0;
        if (runaway || drifting) {
          std::ostringstream os;
          os << "fit_mle: estimate diverged to the parameter-space boundary "
             << "(coordinate " << c << ", direction "
             << (last_dir[i] >= 0 ? "+1" : "-1") << ", value " << v << ")";
          throw boundary_error(os.str(), c, last_dir[i] >= 0 ? 1 : -1);
        }
      }
    }

    if (tol(full, u)) {
      if (final_norm) *final_norm = u.cwiseAbs().maxCoeff();
      return iter;
    }

    Eigen::VectorXd step = checked_info_solve(info, u, "fisher scoring");
    double s = 1.0;
    Eigen::VectorXd cand;
    Eigen::VectorXd ucand;
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h) {
      cand = full;
      for (int i = 0; i < na; ++i) cand[prob.active[i]] += s * step[i];
      if (space.contains(cand)) {
        ucand = prob.sub_score(cand);
        if (ucand.allFinite()) {
          accepted = true;
          break;
        }
      }
      s *= 0.5;
    }
    if (!accepted) {
      throw convergence_error(
          "fisher scoring: no admissible step found (step halving exhausted)",
          u.cwiseAbs().maxCoeff());
    }
    for (int i = 0; i < na; ++i) {
      int c = prob.active[i];
      double d = cand[c] - full[c];
      int dir = (d > 0.0) - (d < 0.0);
      streak[i] = (dir != 0 && dir == last_dir[i]) ? streak[i] + 1
                                                   : (dir != 0 ? 1 : 0);
      if (dir != 0) last_dir[i] = dir;
    }
    full = cand;
    u = ucand;
  }
  throw convergence_error("fisher scoring: iteration limit reached",
                          u.cwiseAbs().maxCoeff());
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::ml: return "ml";
    case Method::mbr: return "mbr";
    case Method::qbr: return "qbr";
    case Method::exact: return "exact";
  }
  return "?";
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::two_sided: return "two-sided";
    case Kind::lower: return "lower";
    case Kind::upper: return "upper";
  }
  return "?";
}

FitResult fit_mle(const ScoreModel& model, std::optional<Eigen::VectorXd> init) {
  Eigen::VectorXd theta = init ? *init : model.initial_guess();
  if (!model.space().contains(theta)) {
    throw config_error("fit_mle: initial value outside the parameter space");
  }
  ScoringProblem prob{model, {}};
  prob.active.resize(model.dim());
  for (int i = 0; i < model.dim(); ++i) prob.active[i] = i;

  auto tol = [](const Eigen::VectorXd& th, const Eigen::VectorXd& u) {
    return u.cwiseAbs().maxCoeff() <=
           1e-8 * std::max(1.0, th.cwiseAbs().maxCoeff());
  };
  FitResult out;
  out.iterations = scoring_iterations(prob, theta, tol, true,
                                      kMaxFitIterations, &out.score_norm);
  out.theta = theta;
  out.information = model.expected_information(theta);
  return out;
}

namespace {

// Profile evaluator: fixes psi, refits the nuisance coordinates (warm
// started from the previous call), reduces the joint cumulant table and
// returns the alpha-quantile modified profile score.
class ProfileEvaluator {
 public:
  ProfileEvaluator(const ScoreModel& model, int psi, Eigen::VectorXd start)
      : model_(model), psi_(psi), warm_(std::move(start)) {
    prob_.active.reserve(model.dim() - 1);
    for (int i = 0; i < model.dim(); ++i) {
      if (i != psi) prob_.active.push_back(i);
    }
  }

  struct Eval {
    double x = 0.0;        // psi value
    double f = 0.0;        // modified profile score
    double k2 = 0.0;       // profile score variance
    Eigen::VectorXd theta; // full parameter vector at the nuisance fit
  };

  Eval eval(double psi_value, double alpha) {
    Eigen::VectorXd theta = warm_;
    theta[psi_] = psi_value;
    if (!model_.space().contains(theta)) {
      std::ostringstream os;
      os << "profile evaluation outside the parameter space (psi="
         << psi_value << ")";
      throw domain_error(os.str());
    }
    if (!prob_.active.empty()) {
      auto tol = [](const Eigen::VectorXd&, const Eigen::VectorXd& u) {
        return u.cwiseAbs().maxCoeff() <= 1e-9;
      };
      scoring_iterations(prob_, theta, tol, false, 100, nullptr);
      warm_ = theta;
    }
    JointCumulantTable table = model_.joint_cumulants(theta, psi_);
    CumulantSet cs = profile_cumulants(table);
    QuantileShift shift = cornish_fisher_shift(cs, alpha);
    Eval e;
    e.x = psi_value;
    e.f = modified_score(model_.score(theta)[psi_], shift);
    e.k2 = cs.k2;
    e.theta = theta;
    return e;
  }

 private:
  const ScoreModel& model_;
  int psi_;
  Eigen::VectorXd warm_;
  ScoringProblem prob_{model_, {}};
};

int count_sign_changes(std::vector<std::pair<double, double>> evals) {
  std::sort(evals.begin(), evals.end());
  int changes = 0;
  int prev = 0;
  for (const auto& [x, f] : evals) {
    int s = (f > 0.0) - (f < 0.0);
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++changes;
    prev = s;
  }
  return changes;
}

}  // namespace

SolveReport solve_quantile_estimator(const ScoreModel& model, double alpha,
                                     std::optional<double> init) {
  if (model.dim() != 1) {
    throw config_error(
        "solve_quantile_estimator: model must have a single parameter");
  }
  std::optional<Eigen::VectorXd> full;
  if (init) {
    Eigen::VectorXd v(1);
    v[0] = *init;
    full = v;
  }
  return solve_profile_quantile(model, 0, alpha, full);
}

SolveReport solve_profile_quantile(const ScoreModel& model, int psi,
                                   double alpha,
                                   std::optional<Eigen::VectorXd> init) {
  if (psi < 0 || psi >= model.dim()) {
    throw config_error("solve_profile_quantile: psi index out of range");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    std::ostringstream os;
    os << "solve_profile_quantile: requires 0 < alpha < 1, got " << alpha;
    throw domain_error(os.str());
  }
  Eigen::VectorXd start = init ? *init : fit_mle(model).theta;
  if (!model.space().contains(start)) {
    throw config_error(
        "solve_profile_quantile: initial value outside the parameter space");
  }

  const Bound& bound = model.space().bound(psi);
  ProfileEvaluator ev(model, psi, start);
  std::vector<std::pair<double, double>> seen;
  auto eval = [&](double x) {
    ProfileEvaluator::Eval e = ev.eval(x, alpha);
    seen.emplace_back(e.x, e.f);
    return e;
  };
  auto converged = [](const ProfileEvaluator::Eval& e) {
    return std::abs(e.f) <= 1e-10 * std::sqrt(e.k2);
  };
  auto finish = [&](const ProfileEvaluator::Eval& e, int iterations,
                    double blo, double bhi) {
    SolveReport r;
    r.root = e.x;
    r.evaluations = static_cast<int>(seen.size());
    r.iterations = iterations;
    r.residual = std::abs(e.f);
    r.bracket_lo = blo;
    r.bracket_hi = bhi;
    r.n_sign_changes = count_sign_changes(seen);
    if (model.dim() > 1) {
      r.nuisance.resize(model.dim() - 1);
      int j = 0;
      for (int i = 0; i < model.dim(); ++i) {
        if (i != psi) r.nuisance[j++] = e.theta[i];
      }
    }
    return r;
  };

  const double psi0 = start[psi];
  ProfileEvaluator::Eval e0 = eval(psi0);
  if (converged(e0)) return finish(e0, 0, psi0, psi0);

  const double u = (alpha == 0.5) ? 0.0 : special::normal_quantile(alpha);
  // The modified score decreases in psi near the optimum, so the root for
  // alpha > 1/2 lies below the maximum-likelihood value and conversely.
  int dir;
  if (u > 0.0) {
    dir = -1;
  } else if (u < 0.0) {
    dir = +1;
  } else {
    dir = e0.f >= 0.0 ? +1 : -1;
  }

  const double se = 1.0 / std::sqrt(e0.k2);
  const double step0 = se * std::max(0.5, std::abs(u));
  const bool log_steps =
      bound.lo == 0.0 && std::isinf(bound.hi) && psi0 > 0.0;

  double prev_x = psi0;
  double prev_f = e0.f;
  double lo = 0.0, hi = 0.0, flo = 0.0, fhi = 0.0;
  bool bracketed = false;
  double t = step0;
  double scan_last = psi0;
  for (int k = 0; k < kMaxScanSteps && !bracketed; ++k, t *= 1.6) {
    double x;
    if (log_steps) {
      double ex = dir * t / psi0;
      if (std::abs(ex) > 60.0) break;
      x = psi0 * std::exp(ex);
    } else {
      x = psi0 + dir * t;
      if (x <= bound.lo) x = bound.lo + 0.1 * (prev_x - bound.lo);
      if (x >= bound.hi) x = bound.hi - 0.1 * (bound.hi - prev_x);
      if (x == prev_x) break;
    }
    ProfileEvaluator::Eval e = eval(x);
    scan_last = x;
    if (converged(e)) return finish(e, 0, prev_x, x);
    if ((prev_f > 0.0 && e.f < 0.0) || (prev_f < 0.0 && e.f > 0.0)) {
      lo = std::min(prev_x, x);
      hi = std::max(prev_x, x);
      flo = prev_x < x ? prev_f : e.f;
      fhi = prev_x < x ? e.f : prev_f;
      bracketed = true;
    }
    prev_x = x;
    prev_f = e.f;
  }
  if (!bracketed) {
    std::ostringstream os;
    os << "no root of the " << alpha
       << "-quantile modified profile score in the scanned range ["
       << std::min(psi0, scan_last) << ", " << std::max(psi0, scan_last)
       << "]";
    throw no_root_error(os.str(), std::min(psi0, scan_last),
                        std::max(psi0, scan_last));
  }

  // Safeguarded Newton refinement inside the bracket; the derivative comes
  // from a central difference of the modified profile score.
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < kMaxRefineIterations; ++it) {
    ProfileEvaluator::Eval e = eval(x);
    if (converged(e)) return finish(e, it + 1, lo, hi);
    if ((e.f > 0.0) == (flo > 0.0)) {
      lo = x;
      flo = e.f;
    } else {
      hi = x;
      fhi = e.f;
    }
    if (hi - lo <= 8.0 * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, std::abs(x))) {
      // Bracket at machine width: accept the best available point.
      return finish(e, it + 1, lo, hi);
    }
    double h = 1e-6 * std::max(1.0, std::abs(x));
    h = std::min({h, 0.45 * (hi - x), 0.45 * (x - lo)});
    double xn;
    if (h > 0.0) {
      ProfileEvaluator::Eval ep = eval(x + h);
      if (converged(ep)) return finish(ep, it + 1, lo, hi);
      ProfileEvaluator::Eval em = eval(x - h);
      if (converged(em)) return finish(em, it + 1, lo, hi);
      double d = (ep.f - em.f) / (2.0 * h);
      xn = (std::isfinite(d) && d != 0.0) ? x - e.f / d : 0.5 * (lo + hi);
    } else {
      xn = 0.5 * (lo + hi);
    }
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    x = xn;
  }
  throw convergence_error(
      "quantile solve: refinement iteration limit reached",
      std::abs(0.5 * (flo + fhi)));
}

Eigen::VectorXd mbr_estimates(const ScoreModel& model, const FitResult& fit) {
  Eigen::VectorXd out(model.dim());
  for (int i = 0; i < model.dim(); ++i) {
    out[i] = solve_profile_quantile(model, i, 0.5, fit.theta).root;
  }
  return out;
}

namespace {

double wald_se(const ScoreModel& model, const Eigen::VectorXd& at, int psi) {
  Eigen::MatrixXd info = model.expected_information(at);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(model.dim());
  e[psi] = 1.0;
  Eigen::VectorXd col = checked_info_solve(info, e, "build_interval");
  double var = col[psi];
  if (!(var > 0.0)) {
    throw singular_error("build_interval: non-positive variance estimate");
  }
  return std::sqrt(var);
}

}  // namespace

ConfidenceInterval build_interval(const ScoreModel& model, int psi,
                                  double level, Kind kind, Method method,
                                  const FitResult& fit,
                                  const Eigen::VectorXd* mbr_theta) {
  if (psi < 0 || psi >= model.dim()) {
    throw config_error("build_interval: psi index out of range");
  }
  if (!(level > 0.0 && level < 1.0)) {
    std::ostringstream os;
    os << "build_interval: requires 0 < level < 1, got " << level;
    throw domain_error(os.str());
  }
  const Bound& bound = model.space().bound(psi);
  ConfidenceInterval ci;
  ci.parameter = model.parameter_names().at(psi);
  ci.method = method;
  ci.kind = kind;
  ci.level = level;

  if (method == Method::ml || method == Method::mbr) {
    Eigen::VectorXd centre = fit.theta;
    if (method == Method::mbr) {
      centre = mbr_theta ? *mbr_theta : mbr_estimates(model, fit);
    }
    double se = wald_se(model, centre, psi);
    double c = centre[psi];
    switch (kind) {
      case Kind::two_sided: {
        double uu = special::normal_quantile(0.5 * (1.0 + level));
        ci.lo = c - uu * se;
        ci.hi = c + uu * se;
        break;
      }
      case Kind::upper: {
        double uu = special::normal_quantile(level);
        ci.lo = c - uu * se;
        ci.hi = bound.hi;
        ci.diag.hi_open = true;
        break;
      }
      case Kind::lower: {
        double uu = special::normal_quantile(level);
        ci.lo = bound.lo;
        ci.hi = c + uu * se;
        ci.diag.lo_open = true;
        break;
      }
    }
    return ci;
  }

  if (method == Method::qbr) {
    auto endpoint = [&](double alpha, bool* open_flag,
                        double fallback) -> double {
      try {
        SolveReport r = solve_profile_quantile(model, psi, alpha, fit.theta);
        ci.diag.n_sign_changes =
            std::max(ci.diag.n_sign_changes, r.n_sign_changes);
        return r.root;
      } catch (const no_root_error&) {
        *open_flag = true;
        return fallback;
      }
    };
    switch (kind) {
      case Kind::two_sided:
        ci.lo = endpoint(0.5 * (1.0 + level), &ci.diag.lo_open, bound.lo);
        ci.hi = endpoint(0.5 * (1.0 - level), &ci.diag.hi_open, bound.hi);
        break;
      case Kind::upper:
        ci.lo = endpoint(level, &ci.diag.lo_open, bound.lo);
        ci.hi = bound.hi;
        ci.diag.hi_open = true;
        break;
      case Kind::lower:
        ci.lo = bound.lo;
        ci.diag.lo_open = true;
        ci.hi = endpoint(1.0 - level, &ci.diag.hi_open, bound.hi);
        break;
    }
    return ci;
  }

  throw config_error(
      "build_interval: the exact method is family specific; use "
      "exact_interval");
}

std::vector<ConfidenceInterval> model_intervals(
    const ScoreModel& model, const std::vector<int>& targets,
    const std::vector<Method>& methods, const std::vector<double>& levels,
    const std::vector<Kind>& kinds) {
  FitResult fit = fit_mle(model);

  bool wants_mbr = false;
  for (Method m : methods) wants_mbr = wants_mbr || m == Method::mbr;
  Eigen::VectorXd mbr;
  if (wants_mbr) mbr = mbr_estimates(model, fit);

  std::vector<ConfidenceInterval> out;
  out.reserve(targets.size() * methods.size() * levels.size() * kinds.size());
  for (int psi : targets) {
    for (Method m : methods) {
      for (double level : levels) {
        for (Kind k : kinds) {
          out.push_back(build_interval(model, psi, level, k, m, fit,
                                       wants_mbr ? &mbr : nullptr));
        }
      }
    }
  }
  return out;
}

}  // namespace qbr
