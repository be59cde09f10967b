#include "mc.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "csv.hpp"
#include "errors.hpp"
#include "regression.hpp"
#include "rng.hpp"
#include "univariate_models.hpp"

namespace qbr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ScenarioRuntime {
  std::vector<std::string> names;
  Eigen::VectorXd truth;
  std::optional<ExactFamily> exact;
  // Draws one replicate and builds its model. raw receives the sampled
  // responses for the exact pivot.
  std::function<std::unique_ptr<ScoreModel>(RandomStream&,
                                            std::vector<double>&)>
      make;
};

std::string resolve_data_dir(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("QBR_DATA_DIR")) {
    if (*env != '\0') return env;
  }
  return "data";
}

// Per-observation beta shape parameters implied by a regression truth.
struct BetaDesign {
  Eigen::MatrixXd X, Z;
  std::vector<double> a, b;
};

BetaDesign beta_design(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z,
                       const Eigen::VectorXd& truth) {
  BetaDesign d;
  d.X = x;
  d.Z = z;
  int n = static_cast<int>(x.rows());
  int q = static_cast<int>(x.cols());
  Eigen::VectorXd eta_m = x * truth.head(q);
  Eigen::VectorXd eta_d = z * truth.tail(truth.size() - q);
  d.a.resize(n);
  d.b.resize(n);
  for (int i = 0; i < n; ++i) {
    double mu = eval_link(Link::logit, eta_m[i]).value;
    double phi = eval_link(Link::log_link, eta_d[i]).value;
    d.a[i] = mu * phi;
    d.b[i] = (1.0 - mu) * phi;
  }
  return d;
}

std::unique_ptr<ScoreModel> make_beta_replicate(const BetaDesign& design,
                                                RandomStream& rng,
                                                std::vector<double>& raw) {
  int n = static_cast<int>(design.X.rows());
  Eigen::VectorXd y(n);
  raw.resize(n);
  for (int i = 0; i < n; ++i) {
    y[i] = rng.beta(design.a[i], design.b[i]);
    raw[i] = y[i];
  }
  RegressionSpec spec;
  spec.family = RegressionSpec::Family::beta;
  spec.X = design.X;
  spec.Z = design.Z;
  return regression_model(std::move(spec), y);
}

ScenarioRuntime scenario_runtime(const SimConfig& config) {
  ScenarioRuntime rt;
  switch (config.scenario) {
    case Scenario::exp5: {
      rt.names = {"theta"};
      rt.truth = Eigen::VectorXd::Constant(1, 1.0);
      rt.exact = ExactFamily::exponential;
      rt.make = [](RandomStream& rng, std::vector<double>& raw) {
        raw.resize(5);
        for (double& v : raw) v = rng.exponential(1.0);
        return exponential_model(raw);
      };
      return rt;
    }
    case Scenario::gamma15: {
      rt.names = {"mu", "phi"};
      rt.truth = Eigen::VectorXd(2);
      rt.truth << 10.0, 3.0;
      rt.make = [](RandomStream& rng, std::vector<double>& raw) {
        raw.resize(15);
        for (double& v : raw) v = (10.0 / 3.0) * rng.gamma(3.0);
        return gamma_model(raw);
      };
      return rt;
    }
    case Scenario::betareg25: {
      rt.names = {"beta0", "beta1", "gamma0", "gamma1"};
      rt.truth = Eigen::VectorXd(4);
      rt.truth << 1.0, 1.0, 1.0, 2.0;
      // The covariates are a fixed design: drawn once from the dedicated
      // sub-stream 0, identical for every replicate and worker count.
      RandomStream design_rng(config.seed, 0);
      int n = 25;
      Eigen::MatrixXd x(n, 2), z(n, 2);
      for (int i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = design_rng.uniform(-0.5, 0.5);
        z(i, 0) = 1.0;
        z(i, 1) = design_rng.uniform(1.0, 2.0);
      }
      auto design =
          std::make_shared<BetaDesign>(beta_design(x, z, rt.truth));
      rt.make = [design](RandomStream& rng, std::vector<double>& raw) {
        return make_beta_replicate(*design, rng, raw);
      };
      return rt;
    }
    case Scenario::readingskills: {
      std::string path =
          resolve_data_dir(config.data_dir) + "/reading_skills.csv";
      CsvTable table;
      try {
        table = read_csv_file(path);
      } catch (const io_error& e) {
        throw config_error(
            std::string("the readingskills scenario needs the reading "
                        "accuracy data: ") +
            e.what() + "; set QBR_DATA_DIR or place the file under ./data");
      }
      const auto& acc = table.column("accuracy");
      const auto& dys = table.column("dys");
      const auto& iq = table.column("iq");
      const auto& dys_iq = table.column("dys_iq");
      int n = table.rows();
      if (n < 8) {
        throw config_error(
            "the reading accuracy data must have at least 8 rows");
      }
      Eigen::MatrixXd x(n, 4), z(n, 3);
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = dys[i];
        x(i, 2) = iq[i];
        x(i, 3) = dys_iq[i];
        z(i, 0) = 1.0;
        z(i, 1) = dys[i];
        z(i, 2) = iq[i];
        y[i] = acc[i];
      }
      RegressionSpec spec;
      spec.family = RegressionSpec::Family::beta;
      spec.X = x;
      spec.Z = z;
      auto observed = regression_model(std::move(spec), y);
      rt.names = observed->parameter_names();
      // The generating truth is the model fitted to the observed data.
      rt.truth = fit_mle(*observed).theta;
      auto design = std::make_shared<BetaDesign>(beta_design(x, z, rt.truth));
      rt.make = [design](RandomStream& rng, std::vector<double>& raw) {
        return make_beta_replicate(*design, rng, raw);
      };
      return rt;
    }
  }
  throw config_error("unknown scenario");
}

struct Item {
  int psi = 0;
  Method method = Method::qbr;
  double level = 0.0;
  Kind kind = Kind::two_sided;
};

struct Outcome {
  uint8_t failed = 0;
  uint8_t covered = 0;
  uint8_t has_length = 0;
  double length = 0.0;
};

void run_replicate(const ScenarioRuntime& rt, const std::vector<Item>& items,
                   uint64_t seed, long r, Outcome* slot) {
  RandomStream rng(seed, static_cast<uint64_t>(r) + 1);
  std::vector<double> raw;
  std::unique_ptr<ScoreModel> model;
  try {
    model = rt.make(rng, raw);
  } catch (const std::exception&) {
    for (size_t k = 0; k < items.size(); ++k) slot[k].failed = 1;
    return;
  }

  std::optional<FitResult> fit;
  try {
    fit = fit_mle(*model);
  } catch (const std::exception&) {
  }

  Eigen::VectorXd mbr;
  bool mbr_tried = false, mbr_ok = false;

  for (size_t k = 0; k < items.size(); ++k) {
    const Item& it = items[k];
    Outcome& out = slot[k];
    ConfidenceInterval ci;
    if (it.method == Method::exact) {
      try {
        ci = exact_interval(*rt.exact, raw, it.level, it.kind);
      } catch (const std::exception&) {
        out.failed = 1;
        continue;
      }
    } else {
      if (!fit) {
        out.failed = 1;
        continue;
      }
      const Eigen::VectorXd* mbr_ptr = nullptr;
      if (it.method == Method::mbr) {
        if (!mbr_tried) {
          mbr_tried = true;
          try {
            mbr = mbr_estimates(*model, *fit);
            mbr_ok = true;
          } catch (const std::exception&) {
          }
        }
        if (!mbr_ok) {
          out.failed = 1;
          continue;
        }
        mbr_ptr = &mbr;
      }
      try {
        ci = build_interval(*model, it.psi, it.level, it.kind, it.method,
                            *fit, mbr_ptr);
      } catch (const std::exception&) {
        out.failed = 1;
        continue;
      }
    }

    double truth = rt.truth[it.psi];
    bool covered = false;
    switch (it.kind) {
      case Kind::two_sided:
        covered = ci.lo <= truth && truth <= ci.hi;
        break;
      case Kind::upper:
        covered = truth >= ci.lo;
        break;
      case Kind::lower:
        covered = truth <= ci.hi;
        break;
    }
    out.covered = covered ? 1 : 0;
    if (it.kind == Kind::two_sided && std::isfinite(ci.lo) &&
        std::isfinite(ci.hi)) {
      out.has_length = 1;
      out.length = ci.hi - ci.lo;
    }
  }
}

}  // namespace

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::exp5: return "exp5";
    case Scenario::gamma15: return "gamma15";
    case Scenario::betareg25: return "betareg25";
    case Scenario::readingskills: return "readingskills";
  }
  return "?";
}

CoverageReport simulate(const SimConfig& config) {
  if (config.replicates < 1) {
    throw config_error("simulate: replicates must be at least 1");
  }
  if (config.workers < 1) {
    throw config_error("simulate: workers must be at least 1");
  }
  if (config.methods.empty() || config.levels.empty() ||
      config.kinds.empty()) {
    throw config_error(
        "simulate: methods, levels, and kinds must all be nonempty");
  }
  for (double level : config.levels) {
    if (!(level > 0.0 && level < 1.0)) {
      std::ostringstream os;
      os << "simulate: requires 0 < level < 1, got " << level;
      throw config_error(os.str());
    }
  }

  ScenarioRuntime rt = scenario_runtime(config);
  for (Method m : config.methods) {
    if (m == Method::exact && !rt.exact) {
      throw config_error(std::string("the exact pivot is unavailable for "
                                     "scenario ") +
                         scenario_name(config.scenario));
    }
  }

  std::vector<Item> items;
  int dim = static_cast<int>(rt.names.size());
  for (int psi = 0; psi < dim; ++psi) {
    for (Method m : config.methods) {
      if (m == Method::exact && psi > 0) continue;
      for (double level : config.levels) {
        for (Kind kind : config.kinds) {
          items.push_back({psi, m, level, kind});
        }
      }
    }
  }

  const long reps = config.replicates;
  std::vector<Outcome> slab(static_cast<size_t>(reps) * items.size());

  std::atomic<long> next{0};
  auto work = [&]() {
    for (;;) {
      long r = next.fetch_add(1);
      if (r >= reps) return;
      run_replicate(rt, items, config.seed, r,
                    &slab[static_cast<size_t>(r) * items.size()]);
    }
  };
  int workers = static_cast<int>(
      std::min<long>(config.workers, reps));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  CoverageReport report;
  report.scenario = config.scenario;
  report.replicates = config.replicates;
  report.cells.reserve(items.size());
  for (size_t k = 0; k < items.size(); ++k) {
    const Item& it = items[k];
    long completed = 0, failures = 0, covered = 0, with_length = 0;
    double length_sum = 0.0;
    for (long r = 0; r < reps; ++r) {
      const Outcome& o = slab[static_cast<size_t>(r) * items.size() + k];
      if (o.failed) {
        ++failures;
        continue;
      }
      ++completed;
      covered += o.covered;
      if (o.has_length) {
        ++with_length;
        length_sum += o.length;
      }
    }
    CoverageCell cell;
    cell.parameter = rt.names[it.psi];
    cell.method = it.method;
    cell.kind = it.kind;
    cell.nominal_level = it.level;
    cell.completed = completed;
    cell.failures = failures;
    if (completed > 0) {
      cell.coverage = static_cast<double>(covered) / completed;
      cell.discrepancy = (1.0 - cell.coverage) / (1.0 - it.level);
      cell.mc_se =
          std::sqrt(cell.coverage * (1.0 - cell.coverage) / completed);
    } else {
      cell.coverage = kNaN;
      cell.discrepancy = kNaN;
      cell.mc_se = kNaN;
    }
    cell.mean_length =
        (it.kind == Kind::two_sided && with_length > 0)
            ? length_sum / with_length
            : kNaN;
    report.cells.push_back(std::move(cell));
  }
  return report;
}

void write_coverage_csv(const CoverageReport& report, std::ostream& out) {
  out << "parameter,method,kind,nominal_level,coverage,discrepancy,"
         "mean_length,mc_se,failures\n";
  for (const CoverageCell& c : report.cells) {
    out << c.parameter << ',' << method_name(c.method) << ','
        << kind_name(c.kind) << ',' << format_g17(c.nominal_level) << ','
        << format_g17(c.coverage) << ',' << format_g17(c.discrepancy) << ',';
    if (c.kind == Kind::two_sided) out << format_g17(c.mean_length);
    out << ',' << format_g17(c.mc_se) << ',' << c.failures << '\n';
  }
}

std::string coverage_csv(const CoverageReport& report) {
  std::ostringstream os;
  write_coverage_csv(report, os);
  return os.str();
}

}  // namespace qbr
