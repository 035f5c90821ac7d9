#pragma once

namespace pplbias {

// Two-sided p-value of a t statistic with df > 0 degrees of freedom, from the
// exact Student-t CDF (no normal approximation; df as small as 1 is fine).
double t_test_p_value(double t, double df);

}  // namespace pplbias
