#include "quantile_shift.hpp"

#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "special_functions.hpp"

namespace qbr {

QuantileShift cornish_fisher_shift(const CumulantSet& c, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    std::ostringstream os;
    os << "cornish_fisher_shift: requires 0 < alpha < 1, got " << alpha;
    throw domain_error(os.str());
  }
  if (!(c.k2 > 0.0) || !std::isfinite(c.k1) || !std::isfinite(c.k3) ||
      !std::isfinite(c.k4)) {
    throw domain_error("cornish_fisher_shift: invalid cumulant set");
  }
  QuantileShift out;
  out.alpha = alpha;
  out.u_alpha = (alpha == 0.5) ? 0.0 : special::normal_quantile(alpha);
  const double u = out.u_alpha;
  const double sd = std::sqrt(c.k2);
  out.shift = -c.k1 - u * sd - (c.k3 / c.k2) * (u * u - 1.0) / 6.0 -
              (c.k4 / (c.k2 * sd)) * (u * u * u - 3.0 * u) / 24.0 +
              (c.k3 * c.k3 / (c.k2 * c.k2 * sd)) *
                  (2.0 * u * u * u - 5.0 * u) / 36.0;
  return out;
}

}  // namespace qbr
