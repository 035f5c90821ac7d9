#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pplbias/causal.hpp"
#include "pplbias/datamodel.hpp"
#include "pplbias/metrics.hpp"

namespace pplbias {

struct CdcConfig {
    int budget = 128;
    int top_k_correct = 10;
    std::optional<double> beta2_override;
    double beta2_scale = 1.0;
    SampleSelection selection = SampleSelection::sorted;
    std::uint64_t seed = 0;
    bool corrected_se = false;
};

struct CorrectedEntry {
    std::string doc_id;
    double raw_score = 0.0;
    std::optional<double> perplexity;
    double calibrated_score = 0.0;
    bool corrected = false;
};

// A run after correction. Entries within the corrected prefix are ordered by
// calibrated score; entries beyond it keep their raw order and never move
// above the prefix.
struct CorrectedRun {
    std::string query_id;
    std::vector<CorrectedEntry> entries;
    double beta2_used = 0.0;
    std::size_t corrected_count = 0;
};

struct CdcResult {
    std::vector<CorrectedRun> runs;
    std::optional<BiasEstimate> estimate;
    double beta2_used = 0.0;
};

using PerplexityMap = std::map<std::string, double>;

// Subtracts beta2 * perplexity from the scores of the top_k raw candidates
// and re-sorts them among themselves; the tail keeps raw scores and raw
// order.
CorrectedRun correct_scores(const RankedRun& run, const PerplexityMap& perplexities, double beta2,
                            int top_k);

// Full procedure: estimate the effect on a budgeted sample of train (unless
// an override is given), scale it, and correct every test run.
CdcResult run_cdc(const Dataset& train, const std::vector<RankedRun>& test_runs,
                  const PerplexityMap& perplexities, const CdcConfig& cfg);

}  // namespace pplbias
