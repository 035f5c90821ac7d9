#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pplbias/datamodel.hpp"

namespace pplbias {

// Per-query ranked candidate list. `ranking` is ordered by descending score,
// ties by ascending doc_id, no duplicate doc_id; use from_scores to build one
// from unordered (doc, score) pairs with those invariants enforced.
struct RankedRun {
    std::string query_id;
    std::vector<std::pair<std::string, double>> ranking;  // (doc_id, score)
    int k = 3;                                            // default metric cutoff

    static RankedRun from_scores(std::string query_id,
                                 std::vector<std::pair<std::string, double>> entries, int k = 3);
};

struct BiasReport {
    double metric_human = 0.0;
    double metric_llm = 0.0;
    double relative_delta = 0.0;  // percent, in [-200, 200]
};

enum class NdcgGain { linear, exponential };

// NDCG@k with linear gain rel_i and 1/log2(rank+1) discount, rank starting at
// 1; IDCG is taken over the query's full qrels. IDCG = 0 returns 0. An empty
// ranking returns 0 and sets *empty_warning when given.
double ndcg_at_k(const RankedRun& run, const Qrels& qrels, int k,
                 NdcgGain gain = NdcgGain::linear, bool* empty_warning = nullptr);

// (human - llm) / (0.5 (human + llm)) * 100. Throws undefined_delta when both
// metrics are zero.
double relative_delta(double metric_human, double metric_llm);

using SourceMap = std::map<std::string, Source>;

// Copy of `qrels` with documents not of source `keep` forced to relevance 0.
// Positive-relevance documents without a source label are an error.
Qrels restrict_qrels(const Qrels& qrels, const SourceMap& sources, Source keep);

// NDCG@k per source on one fixed run: each side is ndcg_at_k under the
// qrel restriction above (the list itself is never filtered).
std::pair<double, double> per_source_ndcg(const RankedRun& run, const Qrels& qrels, int k,
                                          const SourceMap& sources,
                                          NdcgGain gain = NdcgGain::linear);

BiasReport bias_report(const RankedRun& run, const Qrels& qrels, int k, const SourceMap& sources,
                       NdcgGain gain = NdcgGain::linear);

// Sample Pearson correlation; throws undefined_correlation on zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    long dof = 0;
};

// Two-sided paired t-test on a-b with n-1 degrees of freedom and exact
// t-distribution p-value. Zero-variance differences are a degenerate_test
// error (all-equal inputs carry no evidence either way).
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace pplbias
