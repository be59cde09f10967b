#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli_error.hpp"
#include "dataset.hpp"
#include "formula.hpp"
#include "qbr.h"

namespace {

using cli::CliError;
using cli::Dataset;
using cli::Formula;

int exit_code_for(qbr_status st) {
  switch (st) {
    case QBR_ACCURACY_ERROR:
    case QBR_CONVERGENCE_ERROR:
    case QBR_BOUNDARY_ERROR:
    case QBR_NO_ROOT_ERROR:
    case QBR_SINGULAR_ERROR:
      return 3;
    default:
      return 2;
  }
}

void check(qbr_status st, const std::string& context) {
  if (st != QBR_OK)
    throw CliError{exit_code_for(st), context + ": " + qbr_last_error()};
}

struct ModelDeleter {
  void operator()(qbr_model* m) const { qbr_model_free(m); }
};
using ModelPtr = std::unique_ptr<qbr_model, ModelDeleter>;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = s.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> levels;
  for (const std::string& tok : split_list(text)) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = first + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || tok.empty())
      throw CliError{2, "--level: cannot parse '" + tok + "' as a number"};
    if (!(v > 0.0 && v < 1.0))
      throw CliError{2, "--level: " + tok + " is outside (0, 1)"};
    levels.push_back(v);
  }
  return levels;
}

std::vector<qbr_method> parse_methods(const std::string& text) {
  std::vector<qbr_method> methods;
  for (const std::string& tok : split_list(text)) {
    qbr_method m;
    if (tok == "ml")
      m = QBR_METHOD_ML;
    else if (tok == "mbr")
      m = QBR_METHOD_MBR;
    else if (tok == "qbr")
      m = QBR_METHOD_QBR;
    else
      throw CliError{2, "--method: unknown method '" + tok +
                            "'; valid methods are ml, mbr, qbr"};
    for (qbr_method seen : methods) {
      if (seen == m)
        throw CliError{2, "--method: duplicate method '" + tok + "'"};
    }
    methods.push_back(m);
  }
  return methods;
}

const char* method_label(qbr_method m) {
  switch (m) {
    case QBR_METHOD_ML:
      return "ml";
    case QBR_METHOD_MBR:
      return "mbr";
    case QBR_METHOD_QBR:
      return "qbr";
    default:
      return "exact";
  }
}

qbr_kind parse_kind(const std::string& name) {
  if (name == "two-sided") return QBR_KIND_TWO_SIDED;
  if (name == "lower") return QBR_KIND_LOWER;
  return QBR_KIND_UPPER;
}

std::string format_fixed(double x, int digits, int width) {
  char buf[64];
  if (std::isinf(x))
    std::snprintf(buf, sizeof buf, "%*s", width, x > 0 ? "inf" : "-inf");
  else
    std::snprintf(buf, sizeof buf, "%*.*f", width, digits, x);
  return buf;
}

std::string interval_cell(const qbr_interval& iv, int digits, int width) {
  std::string out;
  out += iv.lo_open ? '(' : '[';
  out += format_fixed(iv.lo, digits, width);
  out += ", ";
  out += format_fixed(iv.hi, digits, width);
  out += iv.hi_open ? ')' : ']';
  return out;
}

// Row-major design matrix with an implicit leading intercept column.
std::vector<double> build_design(const Dataset& data,
                                 const std::vector<std::string>& terms,
                                 const std::string& flag) {
  std::size_t n = data.rows();
  std::size_t p = terms.size() + 1;
  std::vector<double> m(n * p);
  for (std::size_t i = 0; i < n; ++i) m[i * p] = 1.0;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const std::vector<double>& col = data.column(terms[j], flag);
    for (std::size_t i = 0; i < n; ++i) m[i * p + 1 + j] = col[i];
  }
  return m;
}

std::string describe_terms(const std::vector<std::string>& terms) {
  if (terms.empty()) return "1";
  std::string out;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    if (j > 0) out += " + ";
    out += terms[j];
  }
  return out;
}

struct CiOptions {
  std::string data;
  std::string family;
  std::string mean;
  std::string disp;
  std::string levels = "0.95";
  std::string kind = "two-sided";
  std::string methods = "ml,mbr,qbr";
  std::string out;
  double nu = 0.0;
  int digits = 2;
  bool has_disp = false;
  bool has_nu = false;
  bool has_out = false;
};

int run_ci(const CiOptions& opt) {
  std::vector<double> levels = parse_levels(opt.levels);
  std::vector<qbr_method> methods = parse_methods(opt.methods);
  qbr_kind kind = parse_kind(opt.kind);
  Formula mean = cli::parse_formula(opt.mean, true, "--mean");

  bool regression = opt.family == "beta" || opt.family == "student_t";
  if (!regression) {
    if (!mean.terms.empty())
      throw CliError{2, "--mean: family '" + opt.family +
                            "' takes no covariates; use '" + mean.response +
                            " ~ 1'"};
    if (opt.has_disp)
      throw CliError{2, "--disp: not valid with family '" + opt.family + "'"};
  }
  if (opt.family == "student_t") {
    if (!opt.has_nu)
      throw CliError{2, "--nu: required with family 'student_t'"};
    if (!(opt.nu > 0.0))
      throw CliError{2, "--nu: degrees of freedom must be positive"};
  } else if (opt.has_nu) {
    throw CliError{2, "--nu: only valid with family 'student_t'"};
  }

  Dataset data = cli::read_dataset_file(opt.data);
  const std::vector<double>& y = data.column(mean.response, "--mean");
  int n = static_cast<int>(y.size());
  if (n == 0) throw CliError{2, opt.data + ": no data rows"};

  ModelPtr model;
  if (regression) {
    Formula disp = opt.has_disp ? cli::parse_formula(opt.disp, false, "--disp")
                                : Formula{};
    std::vector<double> x = build_design(data, mean.terms, "--mean");
    std::vector<double> z = build_design(data, disp.terms, "--disp");
    int q = static_cast<int>(mean.terms.size()) + 1;
    int m = static_cast<int>(disp.terms.size()) + 1;
    if (opt.family == "beta") {
      model.reset(qbr_model_beta_regression(y.data(), n, x.data(), q, z.data(),
                                            m, nullptr, nullptr));
    } else {
      model.reset(qbr_model_symmetric_regression("student_t", opt.nu, y.data(),
                                                 n, x.data(), q, z.data(), m,
                                                 nullptr, nullptr));
    }
    if (!model) throw CliError{2, qbr_last_error()};
    std::printf("family: %s\n", opt.family == "beta"
                                    ? "beta regression (logit mean link, "
                                      "log dispersion link)"
                                    : "student t regression (identity mean "
                                      "link, log dispersion link)");
    if (opt.family == "student_t")
      std::printf("degrees of freedom: %g\n", opt.nu);
    std::printf("mean model: %s ~ %s\n", mean.response.c_str(),
                describe_terms(mean.terms).c_str());
    std::printf("dispersion model: ~ %s\n",
                describe_terms(disp.terms).c_str());
  } else {
    if (opt.family == "exponential")
      model.reset(qbr_model_exponential(y.data(), n));
    else if (opt.family == "normal_variance")
      model.reset(qbr_model_normal_variance(y.data(), n));
    else if (opt.family == "skew_normal")
      model.reset(qbr_model_skew_normal(y.data(), n));
    else
      model.reset(qbr_model_gamma(y.data(), n));
    if (!model) throw CliError{2, qbr_last_error()};
    std::printf("family: %s\n", opt.family.c_str());
  }

  int dim = qbr_model_dim(model.get());
  std::printf("data: %s (%d observations, %d parameter%s)\n",
              opt.data.c_str(), n, dim, dim == 1 ? "" : "s");

  std::vector<double> ml(dim), mbr(dim);
  check(qbr_fit(model.get(), ml.data()), "fit");
  check(qbr_mbr(model.get(), mbr.data()), "median adjustment");

  std::vector<std::string> names(dim);
  std::size_t name_width = 9;
  for (int i = 0; i < dim; ++i) {
    char buf[128];
    check(qbr_parameter_name(model.get(), i, buf, sizeof buf),
          "parameter name");
    names[i] = buf;
    name_width = std::max(name_width, names[i].size());
  }

  int num_width = opt.digits + 6;
  std::printf("\nestimates\n");
  std::printf("  %-*s  %*s  %*s\n", static_cast<int>(name_width), "parameter",
              num_width + 2, "ml", num_width + 2, "mbr");
  for (int i = 0; i < dim; ++i) {
    std::printf("  %-*s  %s  %s\n", static_cast<int>(name_width),
                names[i].c_str(),
                format_fixed(ml[i], opt.digits, num_width + 2).c_str(),
                format_fixed(mbr[i], opt.digits, num_width + 2).c_str());
  }

  // Rows for the optional CSV report, one per parameter/method/level.
  std::vector<std::string> csv_rows;
  int cell_width = 2 * num_width + 4;
  for (double level : levels) {
    std::printf("\n%g%% %s intervals\n", level * 100.0, opt.kind.c_str());
    std::printf("  %-*s", static_cast<int>(name_width), "parameter");
    for (qbr_method m : methods)
      std::printf("  %*s", cell_width, method_label(m));
    std::printf("\n");
    for (int i = 0; i < dim; ++i) {
      std::printf("  %-*s", static_cast<int>(name_width), names[i].c_str());
      for (qbr_method m : methods) {
        qbr_interval iv;
        check(qbr_interval_compute(model.get(), i, m, level, kind, &iv),
              std::string(method_label(m)) + " interval for " + names[i]);
        std::printf("  %s", interval_cell(iv, opt.digits, num_width).c_str());
        if (opt.has_out) {
          csv_rows.push_back(names[i] + "," + method_label(m) + "," +
                             opt.kind + "," + cli::format_number(level) + "," +
                             cli::format_number(iv.lo) + "," +
                             cli::format_number(iv.hi) + "," +
                             cli::format_number(ml[i]) + "," +
                             cli::format_number(mbr[i]));
        }
      }
      std::printf("\n");
    }
  }

  if (opt.has_out) {
    std::ofstream out(opt.out);
    if (!out) throw CliError{2, "cannot open '" + opt.out + "' for writing"};
    out << "parameter,method,kind,level,lo,hi,estimate_ml,estimate_mbr\n";
    for (const std::string& row : csv_rows) out << row << '\n';
  }
  return 0;
}

struct TableOptions {
  std::string which;
  std::vector<int> ns;
};

int run_table(const TableOptions& opt) {
  bool exponential = opt.which == "table1";
  std::vector<int> ns = opt.ns;
  if (ns.empty()) ns = exponential ? std::vector<int>{3, 5, 7}
                                   : std::vector<int>{10, 15, 20};
  const double levels[] = {0.90, 0.95, 0.99};
  const char* family = exponential ? "exponential" : "normal_variance";

  std::printf("%s intervals at unit maximum likelihood estimate\n",
              exponential ? "exponential rate" : "normal variance");
  std::printf("  %2s  %-12s  %-16s  %-16s  %-16s\n", "n", "method", "90%",
              "95%", "99%");

  for (int n : ns) {
    std::vector<double> y(static_cast<std::size_t>(n), 1.0);
    ModelPtr model(exponential ? qbr_model_exponential(y.data(), n)
                               : qbr_model_normal_variance(y.data(), n));
    if (!model) throw CliError{2, qbr_last_error()};
    double theta_hat = 0.0, theta_tilde = 0.0;
    check(qbr_fit(model.get(), &theta_hat), "fit");
    check(qbr_mbr(model.get(), &theta_tilde), "median adjustment");

    auto print_row = [&](const char* label, const qbr_interval* cells) {
      std::printf("  %2d  %-12s", n, label);
      for (int k = 0; k < 3; ++k)
        std::printf("  %s", interval_cell(cells[k], 2, 6).c_str());
      std::printf("\n");
    };

    qbr_interval first[3], adjusted[3], third[3], exact[3];
    for (int k = 0; k < 3; ++k) {
      double level = levels[k];
      check(qbr_interval_compute(model.get(), 0, QBR_METHOD_ML, level,
                                 QBR_KIND_TWO_SIDED, &first[k]),
            "first-order interval");
      double u = qbr_normal_quantile(0.5 * (1.0 + level));
      double half = theta_tilde * u / std::sqrt(static_cast<double>(n));
      adjusted[k] = {theta_tilde - half, theta_tilde + half, 0, 0};
      check(qbr_interval_compute(model.get(), 0, QBR_METHOD_QBR, level,
                                 QBR_KIND_TWO_SIDED, &third[k]),
            "third-order interval");
      check(qbr_exact_interval(family, y.data(), n, level,
                               QBR_KIND_TWO_SIDED, &exact[k]),
            "exact interval");
    }
    print_row("first-order", first);
    print_row("adjusted", adjusted);
    print_row("third-order", third);
    print_row("exact", exact);
    if (n != ns.back()) std::printf("\n");
  }
  return 0;
}

struct SimulateOptions {
  std::string scenario;
  int reps = 10000;
  std::uint64_t seed = 20240915;
  int workers = 1;
  std::string out;
  bool has_out = false;
};

int run_simulate(const SimulateOptions& opt) {
  std::string methods = "ml,mbr,qbr";
  if (opt.scenario == "exp5") methods += ",exact";
  char* csv = nullptr;
  qbr_status st =
      qbr_simulate_csv(opt.scenario.c_str(), methods.c_str(), "0.9,0.95,0.99",
                       "two-sided,upper", opt.reps, opt.seed, opt.workers,
                       nullptr, &csv);
  check(st, "simulation");
  std::unique_ptr<char, void (*)(char*)> guard(csv, qbr_string_free);
  if (opt.has_out) {
    std::ofstream out(opt.out, std::ios::binary);
    if (!out) throw CliError{2, "cannot open '" + opt.out + "' for writing"};
    out << csv;
  } else {
    std::fputs(csv, stdout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Confidence intervals from quantile-adjusted score equations"};
  app.require_subcommand(1);

  CiOptions ci_opt;
  CLI::App* ci = app.add_subcommand(
      "ci", "Confidence intervals for a fitted model");
  ci->add_option("--data", ci_opt.data, "CSV data file")->required();
  ci->add_option("--family", ci_opt.family, "Model family")
      ->required()
      ->check(CLI::IsMember({"exponential", "normal_variance", "skew_normal",
                             "gamma", "beta", "student_t"}));
  ci->add_option("--mean", ci_opt.mean,
                 "Mean model formula, e.g. \"y ~ x1 + x2\"")
      ->required();
  CLI::Option* disp_opt = ci->add_option(
      "--disp", ci_opt.disp, "Dispersion model formula, e.g. \"~ x1\"");
  CLI::Option* nu_opt = ci->add_option(
      "--nu", ci_opt.nu, "Degrees of freedom for the student_t family");
  ci->add_option("--level", ci_opt.levels,
                 "Comma-separated confidence levels (default 0.95)");
  ci->add_option("--kind", ci_opt.kind, "Interval kind")
      ->check(CLI::IsMember({"two-sided", "lower", "upper"}));
  ci->add_option("--method", ci_opt.methods,
                 "Comma-separated methods (default ml,mbr,qbr)");
  ci->add_option("--digits", ci_opt.digits, "Printed decimal digits")
      ->check(CLI::Range(0, 12));
  CLI::Option* ci_out_opt =
      ci->add_option("--out", ci_opt.out, "Write results as CSV");

  TableOptions table_opt;
  CLI::App* table = app.add_subcommand(
      "table", "Reference interval grids for unit-estimate samples");
  table->add_option("--which", table_opt.which, "Grid to print")
      ->required()
      ->check(CLI::IsMember({"table1", "table2"}));
  table->add_option("--n", table_opt.ns, "Sample sizes")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);

  SimulateOptions sim_opt;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Monte Carlo coverage study");
  sim->add_option("--scenario", sim_opt.scenario, "Sampling scenario")
      ->required()
      ->check(CLI::IsMember(
          {"exp5", "gamma15", "betareg25", "readingskills"}));
  sim->add_option("--reps", sim_opt.reps, "Replicates (default 10000)")
      ->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_opt.seed, "RNG seed (default 20240915)");
  sim->add_option("--workers", sim_opt.workers, "Worker threads (default 1)")
      ->check(CLI::PositiveNumber);
  CLI::Option* sim_out_opt =
      sim->add_option("--out", sim_opt.out, "Write the CSV report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  ci_opt.has_disp = disp_opt->count() > 0;
  ci_opt.has_nu = nu_opt->count() > 0;
  ci_opt.has_out = ci_out_opt->count() > 0;
  sim_opt.has_out = sim_out_opt->count() > 0;

  try {
    if (ci->parsed()) return run_ci(ci_opt);
    if (table->parsed()) return run_table(table_opt);
    return run_simulate(sim_opt);
  } catch (const CliError& err) {
    std::cerr << "qbr: " << err.message << "\n";
    return err.exit_code;
  } catch (const std::exception& err) {
    std::cerr << "qbr: " << err.what() << "\n";
    return 2;
  }
}
