#include "pplbias/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include <json.hpp>

#include "pplbias/error.hpp"

namespace pplbias {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt_g6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// JSON has no inf; report it honestly instead of nlohmann's silent null.
ordered_json json_number(double v) {
    if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
    return v;
}

}  // namespace

RunScores score_runs(const std::vector<RankedRun>& runs, const Qrels& qrels, int k,
                     const SourceMap& sources, NdcgGain gain) {
    if (runs.empty()) throw Error(errc::insufficient_data, "no runs to evaluate");

    std::string unmatched;
    long unmatched_count = 0;
    for (const auto& run : runs) {
        auto begin = qrels.lower_bound({run.query_id, ""});
        if (begin == qrels.end() || begin->first.first != run.query_id) {
            ++unmatched_count;
            if (unmatched_count <= 8) {
                if (!unmatched.empty()) unmatched += ", ";
                unmatched += run.query_id;
            }
        }
    }
    if (unmatched_count > 0)
        throw Error(errc::mismatched_ids,
                    "queries without judgments: " + unmatched +
                        (unmatched_count > 8 ? ", ..." : ""));

    RunScores out;
    double sum = 0.0, sum_h = 0.0, sum_l = 0.0;
    for (const auto& run : runs) {
        double v = ndcg_at_k(run, qrels, k, gain);
        out.per_query.push_back(v);
        sum += v;
        auto [h, l] = per_source_ndcg(run, qrels, k, sources, gain);
        sum_h += h;
        sum_l += l;
    }
    double n = static_cast<double>(runs.size());
    out.mean_ndcg = sum / n;
    out.bias = relative_delta(sum_h / n, sum_l / n);
    return out;
}

EvalReport make_eval_report(const std::string& model, const std::string& dataset,
                            const std::vector<RankedRun>& raw_runs,
                            const std::vector<RankedRun>* cdc_runs, const Qrels& qrels, int k,
                            const SourceMap& sources, bool scaled) {
    EvalReport report;
    report.model = model;
    report.dataset = dataset;
    report.k = k;
    report.scaled = scaled;
    report.queries = static_cast<long>(raw_runs.size());

    // bias is natively a percent; --raw undoes that instead of the scaling
    double ndcg_scale = scaled ? 100.0 : 1.0;
    double bias_scale = scaled ? 1.0 : 0.01;

    RunScores raw = score_runs(raw_runs, qrels, k, sources);
    report.raw = {raw.mean_ndcg * ndcg_scale, raw.bias * bias_scale};

    if (cdc_runs) {
        if (cdc_runs->size() != raw_runs.size())
            throw Error(errc::mismatched_ids,
                        "raw and corrected run sets differ in query count (" +
                            std::to_string(raw_runs.size()) + " vs " +
                            std::to_string(cdc_runs->size()) + ")");
        RunScores cdc = score_runs(*cdc_runs, qrels, k, sources);
        report.cdc = EvalCell{cdc.mean_ndcg * ndcg_scale, cdc.bias * bias_scale};
        try {
            report.significance = paired_t_test(raw.per_query, cdc.per_query);
        } catch (const Error& e) {
            if (e.code() != errc::degenerate_test) throw;
        }
    }
    return report;
}

std::string eval_csv(const EvalReport& report) {
    std::string out = "model,dataset,ndcg_raw,ndcg_cdc,bias_raw,bias_cdc\n";
    out += report.model + "," + report.dataset + "," + fmt_g6(report.raw.ndcg) + ",";
    if (report.cdc) out += fmt_g6(report.cdc->ndcg);
    out += "," + fmt_g6(report.raw.bias) + ",";
    if (report.cdc) out += fmt_g6(report.cdc->bias);
    out += "\n";
    return out;
}

std::string eval_json(const EvalReport& report) {
    ordered_json row;
    row["model"] = report.model;
    row["dataset"] = report.dataset;
    row["queries"] = report.queries;
    row["raw"] = {{"ndcg", report.raw.ndcg}, {"bias", report.raw.bias}};
    if (report.cdc)
        row["cdc"] = {{"ndcg", report.cdc->ndcg}, {"bias", report.cdc->bias}};
    else
        row["cdc"] = nullptr;
    if (report.significance)
        row["significance"] = {{"t", report.significance->t},
                               {"p", report.significance->p},
                               {"dof", report.significance->dof}};
    else
        row["significance"] = nullptr;

    ordered_json doc;
    doc["metric"] = "ndcg@" + std::to_string(report.k);
    doc["scale"] = report.scaled ? 100 : 1;
    doc["rows"] = ordered_json::array({row});
    return doc.dump() + "\n";
}

std::string diagnose_json(const BiasEstimate& est) {
    ordered_json doc;
    doc["beta1"] = est.beta1;
    doc["beta2"] = est.beta2;
    doc["se"] = est.se2;
    doc["p"] = est.p2;
    doc["n"] = est.n;
    return doc.dump() + "\n";
}

std::string diagnose_csv(const BiasEstimate& est, const std::string& model,
                         const std::string& dataset) {
    char cell[64];
    std::snprintf(cell, sizeof cell, "%.4f (%.4g)", est.beta2, est.p2);
    return "model,dataset,beta2 (p)\n" + model + "," + dataset + "," + cell + "\n";
}

std::string theory_json(const IdentityReport& report) {
    ordered_json doc;
    doc["trials"] = report.trials;
    if (report.pass_rate_defined)
        doc["pass_rate"] = report.pass_rate;
    else
        doc["pass_rate"] = nullptr;
    doc["max_identity_err"] = json_number(report.max_identity_err);
    doc["max_fd_err"] = json_number(report.max_fd_err);
    doc["kl_bound_ok"] = report.k_bound_ok;
    return doc.dump() + "\n";
}

std::string theory_trial_csv(const IdentityReport& report) {
    std::string out = "trial,L,D,N,identity_err,fd_err_mlm,fd_err_retrieval,k_max,k_bound,pass\n";
    long i = 0;
    for (const auto& row : report.rows) {
        out += std::to_string(i++) + "," + std::to_string(row.L) + "," + std::to_string(row.D) +
               "," + std::to_string(row.N) + "," + fmt_g6(row.identity_err) + "," +
               fmt_g6(row.fd_err_mlm) + "," + fmt_g6(row.fd_err_retrieval) + "," +
               fmt_g6(row.k_max) + "," + fmt_g6(row.k_bound) + "," + (row.pass ? "1" : "0") +
               "\n";
    }
    return out;
}

TempReport temperature_report(const Dataset& ds) {
    struct Sums {
        double ppl = 0.0, score = 0.0;
        long n = 0;
    };
    std::map<double, Sums> groups;
    for (const auto& pair : ds.pairs) {
        if (!pair.temperature) continue;
        Sums& s = groups[*pair.temperature];
        s.ppl += pair.perplexity;
        s.score += pair.score;
        ++s.n;
    }
    if (groups.size() < 2)
        throw Error(errc::insufficient_data,
                    "need records at >= 2 distinct temperatures, found " +
                        std::to_string(groups.size()));

    TempReport report;
    std::vector<double> mean_ppl, mean_score;
    for (const auto& [temp, sums] : groups) {
        double n = static_cast<double>(sums.n);
        report.rows.push_back({temp, sums.ppl / n, sums.score / n, sums.n});
        mean_ppl.push_back(sums.ppl / n);
        mean_score.push_back(sums.score / n);
    }
    report.pearson = pearson(mean_ppl, mean_score);
    return report;
}

std::string temp_json(const TempReport& report) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : report.rows)
        rows.push_back({{"temperature", row.temperature},
                        {"mean_perplexity", row.mean_perplexity},
                        {"mean_score", row.mean_score},
                        {"n", row.n}});
    ordered_json doc;
    doc["temperatures"] = rows;
    doc["pearson"] = report.pearson;
    return doc.dump() + "\n";
}

std::string temp_csv(const TempReport& report) {
    std::string out = "temperature,mean_perplexity,mean_score,n\n";
    for (const auto& row : report.rows)
        out += fmt_g6(row.temperature) + "," + fmt_g6(row.mean_perplexity) + "," +
               fmt_g6(row.mean_score) + "," + std::to_string(row.n) + "\n";
    return out;
}

std::string validation_json(const ValidationReport& report) {
    ordered_json doc;
    doc["accepted"] = report.accepted;
    doc["skipped"] = report.skipped;
    doc["errors"] = report.errors;
    doc["messages"] = report.messages;
    return doc.dump() + "\n";
}

}  // namespace pplbias
