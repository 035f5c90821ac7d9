#include "pplbias/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "pplbias/error.hpp"
#include "pplbias/stats.hpp"

namespace pplbias {

namespace {

double gain_of(int rel, NdcgGain gain) {
    return gain == NdcgGain::linear ? static_cast<double>(rel)
                                    : std::exp2(static_cast<double>(rel)) - 1.0;
}

double dcg(const std::vector<int>& rels, int k, NdcgGain gain) {
    double sum = 0.0;
    int limit = std::min<int>(k, static_cast<int>(rels.size()));
    for (int i = 0; i < limit; ++i)
        sum += gain_of(rels[i], gain) / std::log2(static_cast<double>(i) + 2.0);
    return sum;
}

}  // namespace

RankedRun RankedRun::from_scores(std::string query_id,
                                 std::vector<std::pair<std::string, double>> entries, int k) {
    if (k < 1) throw Error(errc::invalid_argument, "k must be >= 1");
    for (const auto& [doc, score] : entries)
        if (!std::isfinite(score))
            throw Error(errc::validation_error, "non-finite score for doc " + doc);
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    for (std::size_t i = 1; i < entries.size(); ++i)
        if (entries[i].first == entries[i - 1].first)
            throw Error(errc::duplicate_key, "duplicate doc " + entries[i].first + " in ranking");
    return RankedRun{std::move(query_id), std::move(entries), k};
}

double ndcg_at_k(const RankedRun& run, const Qrels& qrels, int k, NdcgGain gain,
                 bool* empty_warning) {
    if (k < 1) throw Error(errc::invalid_argument, "k must be >= 1");
    if (run.ranking.empty()) {
        if (empty_warning) *empty_warning = true;
        return 0.0;
    }
    std::vector<int> ranked_rels;
    ranked_rels.reserve(run.ranking.size());
    for (const auto& [doc, score] : run.ranking) {
        (void)score;
        auto it = qrels.find({run.query_id, doc});
        ranked_rels.push_back(it == qrels.end() ? 0 : it->second);
    }
    // Ideal ordering considers every judged document of the query, retrieved
    // or not, so a run cannot dodge relevant material it failed to rank.
    std::vector<int> ideal;
    auto lo = qrels.lower_bound({run.query_id, std::string()});
    for (auto it = lo; it != qrels.end() && it->first.first == run.query_id; ++it)
        ideal.push_back(it->second);
    std::sort(ideal.rbegin(), ideal.rend());

    double idcg = dcg(ideal, k, gain);
    if (idcg == 0.0) return 0.0;
    return dcg(ranked_rels, k, gain) / idcg;
}

double relative_delta(double metric_human, double metric_llm) {
    if (metric_human < 0 || metric_llm < 0)
        throw Error(errc::invalid_argument, "relative delta expects non-negative metrics");
    double mean = 0.5 * (metric_human + metric_llm);
    if (mean == 0.0)
        throw Error(errc::undefined_delta, "both metrics are zero; relative delta undefined");
    return (metric_human - metric_llm) / mean * 100.0;
}

Qrels restrict_qrels(const Qrels& qrels, const SourceMap& sources, Source keep) {
    Qrels out;
    for (const auto& [key, rel] : qrels) {
        if (rel <= 0) {
            out[key] = rel;
            continue;
        }
        auto it = sources.find(key.second);
        if (it == sources.end())
            throw Error(errc::missing_source, "no source label for doc " + key.second);
        out[key] = it->second == keep ? rel : 0;
    }
    return out;
}

std::pair<double, double> per_source_ndcg(const RankedRun& run, const Qrels& qrels, int k,
                                          const SourceMap& sources, NdcgGain gain) {
    for (const auto& [doc, score] : run.ranking) {
        (void)score;
        if (!sources.count(doc))
            throw Error(errc::missing_source, "no source label for ranked doc " + doc);
    }
    double human = ndcg_at_k(run, restrict_qrels(qrels, sources, Source::human), k, gain);
    double llm = ndcg_at_k(run, restrict_qrels(qrels, sources, Source::generated), k, gain);
    return {human, llm};
}

BiasReport bias_report(const RankedRun& run, const Qrels& qrels, int k, const SourceMap& sources,
                       NdcgGain gain) {
    auto [human, llm] = per_source_ndcg(run, qrels, k, sources, gain);
    return BiasReport{human, llm, relative_delta(human, llm)};
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error(errc::invalid_argument, "length mismatch");
    std::size_t n = x.size();
    if (n < 2) throw Error(errc::invalid_argument, "need at least 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw Error(errc::undefined_correlation, "zero variance; correlation undefined");
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw Error(errc::invalid_argument, "length mismatch");
    std::size_t n = a.size();
    if (n < 2) throw Error(errc::invalid_argument, "need at least 2 pairs");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    if (ss == 0.0)
        throw Error(errc::degenerate_test, "differences have zero variance");
    double sd = std::sqrt(ss / static_cast<double>(n - 1));
    double t = mean / (sd / std::sqrt(static_cast<double>(n)));
    TTestResult res;
    res.t = t;
    res.dof = static_cast<long>(n) - 1;
    res.p = t_test_p_value(t, static_cast<double>(res.dof));
    return res;
}

}  // namespace pplbias
