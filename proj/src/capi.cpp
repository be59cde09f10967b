#include "qbr.h"

#include <charconv>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "mc.hpp"
#include "regression.hpp"
#include "solver.hpp"
#include "special_functions.hpp"
#include "univariate_models.hpp"

struct qbr_model {
  std::unique_ptr<qbr::ScoreModel> model;
  std::optional<qbr::FitResult> fit;
  std::optional<Eigen::VectorXd> mbr;
};

namespace {

thread_local std::string g_last_error;

qbr_status classify(const std::exception& e) {
  g_last_error = e.what();
  if (dynamic_cast<const qbr::config_error*>(&e)) return QBR_CONFIG_ERROR;
  if (dynamic_cast<const qbr::io_error*>(&e)) return QBR_IO_ERROR;
  if (dynamic_cast<const qbr::no_root_error*>(&e)) return QBR_NO_ROOT_ERROR;
  if (dynamic_cast<const qbr::boundary_error*>(&e)) return QBR_BOUNDARY_ERROR;
  if (dynamic_cast<const qbr::singular_error*>(&e)) return QBR_SINGULAR_ERROR;
  if (dynamic_cast<const qbr::convergence_error*>(&e)) {
    return QBR_CONVERGENCE_ERROR;
  }
  if (dynamic_cast<const qbr::accuracy_error*>(&e)) return QBR_ACCURACY_ERROR;
  if (dynamic_cast<const qbr::domain_error*>(&e)) return QBR_DOMAIN_ERROR;
  return QBR_ERROR;
}

template <typename F>
qbr_status guarded(F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return classify(e);
  } catch (...) {
    g_last_error = "unknown failure";
    return QBR_ERROR;
  }
}

template <typename F>
qbr_model* guarded_new(F&& f) {
  try {
    auto handle = std::make_unique<qbr_model>();
    handle->model = f();
    return handle.release();
  } catch (const std::exception& e) {
    classify(e);
    return nullptr;
  } catch (...) {
    g_last_error = "unknown failure";
    return nullptr;
  }
}

std::vector<double> copy_vector(const double* y, int n) {
  if (y == nullptr || n <= 0) {
    throw qbr::config_error("response pointer is null or n is not positive");
  }
  return std::vector<double>(y, y + n);
}

Eigen::MatrixXd copy_matrix(const double* m, int rows, int cols,
                            const char* what) {
  if (m == nullptr || rows <= 0 || cols <= 0) {
    throw qbr::config_error(std::string(what) +
                            " pointer is null or a dimension is not "
                            "positive");
  }
  Eigen::MatrixXd out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out(i, j) = m[i * cols + j];
  }
  return out;
}

std::vector<std::string> copy_names(const char* const* names, int count) {
  std::vector<std::string> out;
  if (names == nullptr) return out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    if (names[i] == nullptr) {
      throw qbr::config_error("parameter name pointer is null");
    }
    out.emplace_back(names[i]);
  }
  return out;
}

qbr::SymmetricDgf parse_dgf(const char* family, double nu) {
  if (family == nullptr) {
    throw qbr::config_error("symmetric family name is null");
  }
  std::string f(family);
  if (f == "normal") return qbr::SymmetricDgf::normal();
  if (f == "student_t") return qbr::SymmetricDgf::student_t(nu);
  if (f == "logistic_i") return qbr::SymmetricDgf::logistic_i();
  if (f == "logistic_ii") return qbr::SymmetricDgf::logistic_ii();
  if (f == "power_exp") return qbr::SymmetricDgf::power_exp(nu);
  throw qbr::config_error("unknown symmetric family '" + f +
                          "'; expected normal, student_t, logistic_i, "
                          "logistic_ii, or power_exp");
}

qbr::Method to_method(qbr_method m) {
  switch (m) {
    case QBR_METHOD_ML: return qbr::Method::ml;
    case QBR_METHOD_MBR: return qbr::Method::mbr;
    case QBR_METHOD_QBR: return qbr::Method::qbr;
    case QBR_METHOD_EXACT: return qbr::Method::exact;
  }
  throw qbr::config_error("unknown method code");
}

qbr::Kind to_kind(qbr_kind k) {
  switch (k) {
    case QBR_KIND_TWO_SIDED: return qbr::Kind::two_sided;
    case QBR_KIND_LOWER: return qbr::Kind::lower;
    case QBR_KIND_UPPER: return qbr::Kind::upper;
  }
  throw qbr::config_error("unknown kind code");
}

void require_handle(const qbr_model* model) {
  if (model == nullptr || !model->model) {
    throw qbr::config_error("model handle is null");
  }
}

const qbr::FitResult& ensure_fit(qbr_model* model) {
  if (!model->fit) model->fit = qbr::fit_mle(*model->model);
  return *model->fit;
}

const Eigen::VectorXd& ensure_mbr(qbr_model* model) {
  if (!model->mbr) {
    model->mbr = qbr::mbr_estimates(*model->model, ensure_fit(model));
  }
  return *model->mbr;
}

std::vector<std::string> split_list(const char* text, const char* what) {
  if (text == nullptr || *text == '\0') {
    throw qbr::config_error(std::string(what) + " list is empty");
  }
  std::vector<std::string> out;
  std::string s(text);
  size_t start = 0;
  for (;;) {
    size_t comma = s.find(',', start);
    std::string item = s.substr(
        start, comma == std::string::npos ? std::string::npos
                                          : comma - start);
    if (item.empty()) {
      throw qbr::config_error(std::string(what) +
                              " list has an empty entry: '" + s + "'");
    }
    out.push_back(item);
    if (comma == std::string::npos) return out;
    start = comma + 1;
  }
}

double parse_double(const std::string& s, const char* what) {
  double value = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw qbr::config_error(std::string("cannot parse ") + what + " '" + s +
                            "' as a number");
  }
  return value;
}

qbr::Method parse_method(const std::string& s) {
  if (s == "ml") return qbr::Method::ml;
  if (s == "mbr") return qbr::Method::mbr;
  if (s == "qbr") return qbr::Method::qbr;
  if (s == "exact") return qbr::Method::exact;
  throw qbr::config_error("unknown method '" + s +
                          "'; expected ml, mbr, qbr, or exact");
}

qbr::Kind parse_kind(const std::string& s) {
  if (s == "two-sided") return qbr::Kind::two_sided;
  if (s == "lower") return qbr::Kind::lower;
  if (s == "upper") return qbr::Kind::upper;
  throw qbr::config_error("unknown interval kind '" + s +
                          "'; expected two-sided, lower, or upper");
}

qbr::Scenario parse_scenario(const char* s) {
  if (s == nullptr) throw qbr::config_error("scenario name is null");
  std::string name(s);
  if (name == "exp5") return qbr::Scenario::exp5;
  if (name == "gamma15") return qbr::Scenario::gamma15;
  if (name == "betareg25") return qbr::Scenario::betareg25;
  if (name == "readingskills") return qbr::Scenario::readingskills;
  throw qbr::config_error("unknown scenario '" + name +
                          "'; expected exp5, gamma15, betareg25, or "
                          "readingskills");
}

void fill_interval(const qbr::ConfidenceInterval& ci, qbr_interval* out) {
  out->lo = ci.lo;
  out->hi = ci.hi;
  out->lo_open = ci.diag.lo_open ? 1 : 0;
  out->hi_open = ci.diag.hi_open ? 1 : 0;
}

}  // namespace

extern "C" {

const char* qbr_last_error(void) { return g_last_error.c_str(); }

qbr_model* qbr_model_exponential(const double* y, int n) {
  return guarded_new(
      [&] { return qbr::exponential_model(copy_vector(y, n)); });
}

qbr_model* qbr_model_normal_variance(const double* y, int n) {
  return guarded_new(
      [&] { return qbr::normal_variance_model(copy_vector(y, n)); });
}

qbr_model* qbr_model_skew_normal(const double* y, int n) {
  return guarded_new(
      [&] { return qbr::skew_normal_model(copy_vector(y, n)); });
}

qbr_model* qbr_model_gamma(const double* y, int n) {
  return guarded_new([&] { return qbr::gamma_model(copy_vector(y, n)); });
}

qbr_model* qbr_model_beta_regression(const double* y, int n, const double* x,
                                     int q, const double* z, int m,
                                     const char* const* mean_names,
                                     const char* const* disp_names) {
  return guarded_new([&]() -> std::unique_ptr<qbr::ScoreModel> {
    auto yv = copy_vector(y, n);
    qbr::RegressionSpec spec;
    spec.family = qbr::RegressionSpec::Family::beta;
    spec.X = copy_matrix(x, n, q, "mean design");
    spec.Z = copy_matrix(z, n, m, "dispersion design");
    spec.mean_names = copy_names(mean_names, q);
    spec.disp_names = copy_names(disp_names, m);
    return qbr::regression_model(
        std::move(spec), Eigen::Map<const Eigen::VectorXd>(yv.data(), n));
  });
}

qbr_model* qbr_model_symmetric_regression(const char* family, double nu,
                                          const double* y, int n,
                                          const double* x, int q,
                                          const double* z, int m,
                                          const char* const* mean_names,
                                          const char* const* disp_names) {
  return guarded_new([&]() -> std::unique_ptr<qbr::ScoreModel> {
    auto yv = copy_vector(y, n);
    qbr::RegressionSpec spec;
    spec.family = qbr::RegressionSpec::Family::symmetric;
    spec.dgf = parse_dgf(family, nu);
    spec.mean_link = qbr::Link::identity;
    spec.X = copy_matrix(x, n, q, "mean design");
    spec.Z = copy_matrix(z, n, m, "dispersion design");
    spec.mean_names = copy_names(mean_names, q);
    spec.disp_names = copy_names(disp_names, m);
    return qbr::regression_model(
        std::move(spec), Eigen::Map<const Eigen::VectorXd>(yv.data(), n));
  });
}

void qbr_model_free(qbr_model* model) { delete model; }

int qbr_model_dim(const qbr_model* model) {
  if (model == nullptr || !model->model) return -1;
  return model->model->dim();
}

qbr_status qbr_parameter_name(const qbr_model* model, int psi, char* out,
                              size_t cap) {
  return guarded([&]() -> qbr_status {
    require_handle(model);
    if (out == nullptr || cap == 0) {
      throw qbr::config_error("output buffer is null or empty");
    }
    auto names = model->model->parameter_names();
    if (psi < 0 || psi >= static_cast<int>(names.size())) {
      throw qbr::config_error("parameter index out of range");
    }
    std::snprintf(out, cap, "%s", names[psi].c_str());
    return QBR_OK;
  });
}

qbr_status qbr_fit(qbr_model* model, double* theta) {
  return guarded([&]() -> qbr_status {
    require_handle(model);
    if (theta == nullptr) throw qbr::config_error("theta buffer is null");
    const qbr::FitResult& fit = ensure_fit(model);
    for (int i = 0; i < fit.theta.size(); ++i) theta[i] = fit.theta[i];
    return QBR_OK;
  });
}

qbr_status qbr_mbr(qbr_model* model, double* theta) {
  return guarded([&]() -> qbr_status {
    require_handle(model);
    if (theta == nullptr) throw qbr::config_error("theta buffer is null");
    const Eigen::VectorXd& mbr = ensure_mbr(model);
    for (int i = 0; i < mbr.size(); ++i) theta[i] = mbr[i];
    return QBR_OK;
  });
}

qbr_status qbr_interval_compute(qbr_model* model, int psi, qbr_method method,
                                double level, qbr_kind kind,
                                qbr_interval* out) {
  return guarded([&]() -> qbr_status {
    require_handle(model);
    if (out == nullptr) throw qbr::config_error("interval buffer is null");
    qbr::Method m = to_method(method);
    if (m == qbr::Method::exact) {
      throw qbr::config_error(
          "the exact method is family specific; use qbr_exact_interval");
    }
    const qbr::FitResult& fit = ensure_fit(model);
    const Eigen::VectorXd* mbr = nullptr;
    if (m == qbr::Method::mbr) mbr = &ensure_mbr(model);
    qbr::ConfidenceInterval ci = qbr::build_interval(
        *model->model, psi, level, to_kind(kind), m, fit, mbr);
    fill_interval(ci, out);
    return QBR_OK;
  });
}

qbr_status qbr_quantile_root(qbr_model* model, int psi, double alpha,
                             double* root) {
  return guarded([&]() -> qbr_status {
    require_handle(model);
    if (root == nullptr) throw qbr::config_error("root buffer is null");
    const qbr::FitResult& fit = ensure_fit(model);
    *root =
        qbr::solve_profile_quantile(*model->model, psi, alpha, fit.theta)
            .root;
    return QBR_OK;
  });
}

qbr_status qbr_exact_interval(const char* family, const double* y, int n,
                              double level, qbr_kind kind,
                              qbr_interval* out) {
  return guarded([&]() -> qbr_status {
    if (out == nullptr) throw qbr::config_error("interval buffer is null");
    if (family == nullptr) throw qbr::config_error("family name is null");
    std::string f(family);
    qbr::ExactFamily ef;
    if (f == "exponential") {
      ef = qbr::ExactFamily::exponential;
    } else if (f == "normal_variance") {
      ef = qbr::ExactFamily::normal_variance;
    } else {
      throw qbr::config_error("no exact pivot for family '" + f +
                              "'; expected exponential or normal_variance");
    }
    qbr::ConfidenceInterval ci =
        qbr::exact_interval(ef, copy_vector(y, n), level, to_kind(kind));
    fill_interval(ci, out);
    return QBR_OK;
  });
}

qbr_status qbr_simulate_csv(const char* scenario, const char* methods,
                            const char* levels, const char* kinds,
                            int replicates, uint64_t seed, int workers,
                            const char* data_dir, char** csv) {
  return guarded([&]() -> qbr_status {
    if (csv == nullptr) throw qbr::config_error("csv output pointer is null");
    qbr::SimConfig config;
    config.scenario = parse_scenario(scenario);
    config.methods.clear();
    for (const auto& s : split_list(methods, "method")) {
      config.methods.push_back(parse_method(s));
    }
    config.levels.clear();
    for (const auto& s : split_list(levels, "level")) {
      config.levels.push_back(parse_double(s, "level"));
    }
    config.kinds.clear();
    for (const auto& s : split_list(kinds, "kind")) {
      config.kinds.push_back(parse_kind(s));
    }
    config.replicates = replicates;
    config.seed = seed;
    config.workers = workers;
    if (data_dir != nullptr) config.data_dir = data_dir;
    std::string text = qbr::coverage_csv(qbr::simulate(config));
    char* owned = static_cast<char*>(std::malloc(text.size() + 1));
    if (owned == nullptr) throw std::bad_alloc();
    std::memcpy(owned, text.c_str(), text.size() + 1);
    *csv = owned;
    return QBR_OK;
  });
}

void qbr_string_free(char* s) { std::free(s); }

double qbr_normal_quantile(double p) {
  try {
    return qbr::special::normal_quantile(p);
  } catch (const std::exception& e) {
    classify(e);
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // extern "C"
