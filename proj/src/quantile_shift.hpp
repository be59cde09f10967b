#pragma once

#include "cumulants.hpp"

namespace qbr {

// Additive adjustment that turns the profile score into the alpha-quantile
// estimating function. The shift is the Cornish-Fisher alpha-quantile of the
// score distribution, with the sign arranged so that the estimating equation
// U_psi(psi) + shift = 0 has the alpha-quantile estimator as its root.
struct QuantileShift {
  double alpha = 0.5;
  double u_alpha = 0.0;  // standard normal quantile of alpha
  double shift = 0.0;
};

QuantileShift cornish_fisher_shift(const CumulantSet& cumulants, double alpha);

inline double modified_score(double score_psi, const QuantileShift& s) {
  return score_psi + s.shift;
}

}  // namespace qbr
