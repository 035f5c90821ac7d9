#pragma once

#include <vector>

#include "pplbias/datamodel.hpp"

namespace pplbias {

// One (instrument, treatment, outcome) row: document source as the binary
// instrument s, perplexity p as the treatment, relevance score r as outcome.
struct Observation {
    int s = 0;
    double p = 0.0;
    double r = 0.0;
};

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double se_slope = 0.0;
    double t = 0.0;
    double p = 1.0;
};

// Two-stage result. Stage 1: p on s (beta1, intercept a1). Stage 2: r on the
// stage-1 fitted values (beta2, intercept a2). weak_instrument is advisory,
// set when the first-stage |t| falls below 2.
struct BiasEstimate {
    double beta1 = 0.0;
    double beta2 = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
    double se1 = 0.0;
    double se2 = 0.0;
    double p1 = 1.0;
    double p2 = 1.0;
    long n = 0;
    bool weak_instrument = false;
};

// Simple regression of y on x with intercept. Needs n >= 3 and variance in x;
// exact fits report p below 1e-12 rather than a literal zero.
OlsFit ols(const std::vector<double>& x, const std::vector<double>& y);

// 2SLS with the binary source instrument. By construction beta2 equals the
// Wald estimator; with corrected_se the second-stage error uses residuals
// against actual (not fitted) perplexity.
BiasEstimate two_stage_iv(const std::vector<Observation>& obs, bool corrected_se = false);

// (mean r | s=1 - mean r | s=0) / (mean p | s=1 - mean p | s=0).
double wald_estimator(const std::vector<Observation>& obs);

// Expands each paired sample into a human (s=0) and a generated (s=1)
// observation, then runs the two-stage fit.
BiasEstimate diagnose(const std::vector<EstimationSample>& samples, bool corrected_se = false);

}  // namespace pplbias
