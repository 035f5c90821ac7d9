#include "pplbias/cdc.hpp"

#include <algorithm>
#include <cmath>

#include "pplbias/error.hpp"

namespace pplbias {

CorrectedRun correct_scores(const RankedRun& run, const PerplexityMap& perplexities, double beta2,
                            int top_k) {
    if (!std::isfinite(beta2)) throw Error(errc::invalid_argument, "beta2 must be finite");
    if (top_k < 1) throw Error(errc::invalid_argument, "top_k must be >= 1");

    CorrectedRun out;
    out.query_id = run.query_id;
    out.beta2_used = beta2;
    out.corrected_count = std::min<std::size_t>(static_cast<std::size_t>(top_k),
                                                run.ranking.size());

    for (std::size_t i = 0; i < run.ranking.size(); ++i) {
        const auto& [doc, raw] = run.ranking[i];
        if (!std::isfinite(raw))
            throw Error(errc::validation_error, "non-finite score for doc " + doc);
        CorrectedEntry entry;
        entry.doc_id = doc;
        entry.raw_score = raw;
        auto it = perplexities.find(doc);
        if (it != perplexities.end()) {
            if (!std::isfinite(it->second) || it->second <= 0.0)
                throw Error(errc::validation_error,
                            "perplexity for doc " + doc + " must be positive and finite");
            entry.perplexity = it->second;
        }
        if (i < out.corrected_count) {
            if (!entry.perplexity)
                throw Error(errc::missing_perplexity, "no perplexity for doc " + doc);
            entry.corrected = true;
            entry.calibrated_score = raw - beta2 * *entry.perplexity;
        } else {
            entry.calibrated_score = raw;
        }
        out.entries.push_back(std::move(entry));
    }

    // Re-rank inside the corrected prefix only; the tail keeps its raw order
    // and can never climb past position top_k.
    std::sort(out.entries.begin(), out.entries.begin() + out.corrected_count,
              [](const CorrectedEntry& a, const CorrectedEntry& b) {
                  if (a.calibrated_score != b.calibrated_score)
                      return a.calibrated_score > b.calibrated_score;
                  return a.doc_id < b.doc_id;
              });
    return out;
}

CdcResult run_cdc(const Dataset& train, const std::vector<RankedRun>& test_runs,
                  const PerplexityMap& perplexities, const CdcConfig& cfg) {
    if (cfg.budget < 2) throw Error(errc::invalid_argument, "budget must be >= 2");
    if (cfg.top_k_correct < 1)
        throw Error(errc::invalid_argument, "top_k_correct must be >= 1");
    if (!(cfg.beta2_scale >= 0.0))
        throw Error(errc::invalid_argument, "beta2_scale must be >= 0");

    CdcResult result;
    double beta2 = 0.0;
    if (cfg.beta2_override) {
        beta2 = *cfg.beta2_override;
    } else {
        EstimationSet es = build_estimation_set(train, static_cast<std::size_t>(cfg.budget),
                                                cfg.selection, cfg.seed);
        result.estimate = diagnose(es.samples, cfg.corrected_se);
        beta2 = result.estimate->beta2;
    }
    result.beta2_used = beta2 * cfg.beta2_scale;

    result.runs.reserve(test_runs.size());
    for (const auto& run : test_runs)
        result.runs.push_back(
            correct_scores(run, perplexities, result.beta2_used, cfg.top_k_correct));
    return result;
}

}  // namespace pplbias
