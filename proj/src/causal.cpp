#include "pplbias/causal.hpp"

#include <cmath>
#include <limits>

#include "pplbias/error.hpp"
#include "pplbias/stats.hpp"

namespace pplbias {

namespace {

struct GroupSums {
    long n0 = 0, n1 = 0;
    double p0 = 0.0, p1 = 0.0;
    double r0 = 0.0, r1 = 0.0;
};

GroupSums accumulate(const std::vector<Observation>& obs) {
    GroupSums g;
    for (const auto& o : obs) {
        if (o.s != 0 && o.s != 1)
            throw Error(errc::validation_error, "instrument must be 0 or 1");
        if (!(o.p > 0.0) || !std::isfinite(o.p))
            throw Error(errc::validation_error, "perplexity must be positive and finite");
        if (!std::isfinite(o.r))
            throw Error(errc::validation_error, "score must be finite");
        if (o.s == 0) {
            ++g.n0;
            g.p0 += o.p;
            g.r0 += o.r;
        } else {
            ++g.n1;
            g.p1 += o.p;
            g.r1 += o.r;
        }
    }
    return g;
}

// t and p conventions shared by both stages: a perfect fit drives p to the
// zero limit, a flat slope on a perfect fit is simply insignificant.
void slope_test(double slope, double se, double df, double* t_out, double* p_out) {
    if (se == 0.0) {
        if (slope == 0.0) {
            *t_out = 0.0;
            *p_out = 1.0;
        } else {
            *t_out = std::copysign(std::numeric_limits<double>::infinity(), slope);
            *p_out = 0.0;
        }
        return;
    }
    *t_out = slope / se;
    *p_out = t_test_p_value(*t_out, df);
}

}  // namespace

OlsFit ols(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error(errc::invalid_argument, "x and y differ in length");
    const std::size_t n = x.size();
    if (n < 3) throw Error(errc::insufficient_data, "need at least 3 points");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw Error(errc::validation_error, "non-finite value in regression input");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw Error(errc::singular_design, "regressor has zero variance");

    OlsFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = y[i] - fit.intercept - fit.slope * x[i];
        rss += e * e;
    }
    double sigma2 = rss / static_cast<double>(n - 2);
    fit.se_slope = std::sqrt(sigma2 / sxx);
    slope_test(fit.slope, fit.se_slope, static_cast<double>(n - 2), &fit.t, &fit.p);
    return fit;
}

double wald_estimator(const std::vector<Observation>& obs) {
    GroupSums g = accumulate(obs);
    if (g.n0 == 0 || g.n1 == 0)
        throw Error(errc::weak_instrument, "all observations share one source");
    double dp = g.p1 / static_cast<double>(g.n1) - g.p0 / static_cast<double>(g.n0);
    if (dp == 0.0)
        throw Error(errc::degenerate_instrument, "group mean perplexities are equal");
    double dr = g.r1 / static_cast<double>(g.n1) - g.r0 / static_cast<double>(g.n0);
    return dr / dp;
}

BiasEstimate two_stage_iv(const std::vector<Observation>& obs, bool corrected_se) {
    GroupSums g = accumulate(obs);
    if (g.n0 == 0 || g.n1 == 0)
        throw Error(errc::weak_instrument, "all observations share one source");
    if (g.n0 < 2 || g.n1 < 2)
        throw Error(errc::insufficient_data, "each source group needs at least 2 observations");
    double mean_p0 = g.p0 / static_cast<double>(g.n0);
    double mean_p1 = g.p1 / static_cast<double>(g.n1);
    if (mean_p1 - mean_p0 == 0.0)
        throw Error(errc::degenerate_instrument, "group mean perplexities are equal");

    const long n = g.n0 + g.n1;
    std::vector<double> s(n), p(n), r(n);
    for (long i = 0; i < n; ++i) {
        s[i] = static_cast<double>(obs[i].s);
        p[i] = obs[i].p;
        r[i] = obs[i].r;
    }

    OlsFit stage1 = ols(s, p);
    if (stage1.slope == 0.0)
        throw Error(errc::degenerate_instrument, "first stage has no perplexity variation");

    BiasEstimate est;
    est.beta1 = stage1.slope;
    est.a1 = stage1.intercept;
    est.se1 = stage1.se_slope;
    est.p1 = stage1.p;
    est.n = n;
    est.weak_instrument = std::fabs(stage1.t) < 2.0;

    // With a binary instrument the fitted perplexities take two values, so
    // the second-stage slope collapses to the score gap over the first-stage
    // slope. This keeps a null score gap at an exact zero instead of noise.
    double mean_r = (g.r0 + g.r1) / static_cast<double>(n);
    double dr = g.r1 / static_cast<double>(g.n1) - g.r0 / static_cast<double>(g.n0);
    est.beta2 = dr / est.beta1;

    double mean_s = static_cast<double>(g.n1) / static_cast<double>(n);
    double mean_fitted = est.a1 + est.beta1 * mean_s;
    est.a2 = mean_r - est.beta2 * mean_fitted;

    double sxx_fitted = 0.0;
    for (long i = 0; i < n; ++i) {
        double fitted = est.a1 + est.beta1 * s[i];
        sxx_fitted += (fitted - mean_fitted) * (fitted - mean_fitted);
    }
    double rss = 0.0;
    for (long i = 0; i < n; ++i) {
        // The corrected variant measures residuals against actual perplexity
        // rather than the first-stage fit.
        double regressor = corrected_se ? p[i] : est.a1 + est.beta1 * s[i];
        double e = r[i] - est.a2 - est.beta2 * regressor;
        rss += e * e;
    }
    double df = static_cast<double>(n - 2);
    est.se2 = std::sqrt(rss / df / sxx_fitted);
    double t2 = 0.0;
    slope_test(est.beta2, est.se2, df, &t2, &est.p2);
    return est;
}

BiasEstimate diagnose(const std::vector<EstimationSample>& samples, bool corrected_se) {
    if (samples.size() < 2)
        throw Error(errc::insufficient_data, "need at least 2 paired samples");
    std::vector<Observation> obs;
    obs.reserve(samples.size() * 2);
    for (const auto& s : samples) {
        obs.push_back({0, s.p_human, s.r_human});
        obs.push_back({1, s.p_gen, s.r_gen});
    }
    return two_stage_iv(obs, corrected_se);
}

}  // namespace pplbias
