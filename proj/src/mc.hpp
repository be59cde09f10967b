#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "solver.hpp"

namespace qbr {

// Built-in coverage scenarios.
//   exp5:          exponential rate 1, n = 5
//   gamma15:       gamma with mean 10 and shape 3, n = 15
//   betareg25:     beta regression, logit mean and log dispersion links,
//                  beta = (1, 1), gamma = (1, 2), n = 25; covariates drawn
//                  once from a dedicated sub-stream and held fixed
//   readingskills: beta regression on the reading accuracy design; the
//                  generating truth is a fresh fit to the observed data
enum class Scenario { exp5, gamma15, betareg25, readingskills };

const char* scenario_name(Scenario s);

struct SimConfig {
  Scenario scenario = Scenario::exp5;
  std::vector<Method> methods = {Method::ml, Method::mbr, Method::qbr};
  std::vector<double> levels = {0.90, 0.95, 0.99};
  std::vector<Kind> kinds = {Kind::two_sided, Kind::upper};
  int replicates = 10000;
  uint64_t seed = 20240915;
  int workers = 1;
  std::string data_dir;  // readingskills input; empty falls back to
                         // $QBR_DATA_DIR, then ./data
};

// One (parameter, method, kind, level) combination of a finished study.
struct CoverageCell {
  std::string parameter;
  Method method = Method::qbr;
  Kind kind = Kind::two_sided;
  double nominal_level = 0.0;
  double coverage = 0.0;     // covered / completed
  double discrepancy = 0.0;  // (1 - coverage) / (1 - nominal_level)
  double mean_length = 0.0;  // finite two-sided lengths; NaN when none apply
  double mc_se = 0.0;        // sqrt(coverage (1 - coverage) / completed)
  long completed = 0;        // replicates entering the denominator
  long failures = 0;         // replicates whose interval computation failed
};

struct CoverageReport {
  Scenario scenario = Scenario::exp5;
  int replicates = 0;
  std::vector<CoverageCell> cells;  // parameter x method x level x kind order
};

// Runs the study. Replicate r always consumes the random stream derived from
// (seed, r), so results are identical for any worker count. Replicates whose
// interval computation throws are excluded from that cell's denominator and
// counted in its failures column; a missing quantile root is not a failure,
// it widens the interval to the parameter-space bound.
CoverageReport simulate(const SimConfig& config);

// parameter,method,kind,nominal_level,coverage,discrepancy,mean_length,
// mc_se,failures with %.17g numbers; mean_length is empty for one-sided
// rows.
void write_coverage_csv(const CoverageReport& report, std::ostream& out);
std::string coverage_csv(const CoverageReport& report);

}  // namespace qbr
