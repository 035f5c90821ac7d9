#include "pplbias/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "pplbias/error.hpp"

namespace pplbias {

double t_test_p_value(double t, double df) {
    if (!(df > 0)) throw Error(errc::invalid_argument, "degrees of freedom must be > 0");
    if (std::isnan(t)) throw Error(errc::invalid_argument, "t statistic is NaN");
    if (std::isinf(t)) return 0.0;
    boost::math::students_t dist(df);
    double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace pplbias
