#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pplbias/causal.hpp"
#include "pplbias/datamodel.hpp"
#include "pplbias/metrics.hpp"
#include "pplbias/theorylab.hpp"

namespace pplbias {

// Mean NDCG@k over a set of runs plus the source-bias summary. `bias` is the
// relative delta between the mean human-side and mean generated-side NDCG,
// already in percent.
struct RunScores {
    std::vector<double> per_query;  // NDCG@k in run order, unscaled
    double mean_ndcg = 0.0;
    double bias = 0.0;
};

// Scores every run against the judgments. Runs whose query has no judgment
// at all are a mismatched_ids error (the message lists the unmatched ids).
RunScores score_runs(const std::vector<RankedRun>& runs, const Qrels& qrels, int k,
                     const SourceMap& sources, NdcgGain gain = NdcgGain::linear);

struct EvalCell {
    double ndcg = 0.0;
    double bias = 0.0;
};

// One table row. With `scaled` (the default) ndcg is in [0,100] and bias in
// [-200,200] percent; with --raw ndcg is in [0,1] and bias in [-2,2].
struct EvalReport {
    std::string model;
    std::string dataset;
    int k = 3;
    bool scaled = true;
    long queries = 0;
    EvalCell raw;
    std::optional<EvalCell> cdc;
    std::optional<TTestResult> significance;  // paired t on per-query NDCG
};

// Builds the row, pairing raw and corrected runs by position. A corrected set
// that changes nothing has no defined t-test; significance stays empty then.
EvalReport make_eval_report(const std::string& model, const std::string& dataset,
                            const std::vector<RankedRun>& raw_runs,
                            const std::vector<RankedRun>* cdc_runs, const Qrels& qrels, int k,
                            const SourceMap& sources, bool scaled);

std::string eval_csv(const EvalReport& report);
std::string eval_json(const EvalReport& report);

// {beta1, beta2, se, p, n}; se and p are the second-stage values.
std::string diagnose_json(const BiasEstimate& est);
// One table row whose effect cell reads like "-0.5013 (0.0046)".
std::string diagnose_csv(const BiasEstimate& est, const std::string& model,
                         const std::string& dataset);

// {trials, pass_rate, max_identity_err, max_fd_err, kl_bound_ok}; pass_rate
// is null when no trials ran, non-finite errors print as the string "inf".
std::string theory_json(const IdentityReport& report);
std::string theory_trial_csv(const IdentityReport& report);

struct TempRow {
    double temperature = 0.0;
    double mean_perplexity = 0.0;
    double mean_score = 0.0;
    long n = 0;
};

struct TempReport {
    std::vector<TempRow> rows;  // ascending temperature
    double pearson = 0.0;       // between per-temperature mean ppl and mean score
};

// Groups records by exact temperature value; records without temperature
// metadata are ignored. Fewer than two distinct temperatures is an
// insufficient_data error; constant means are an undefined_correlation error.
TempReport temperature_report(const Dataset& ds);
std::string temp_json(const TempReport& report);
std::string temp_csv(const TempReport& report);

std::string validation_json(const ValidationReport& report);

}  // namespace pplbias
