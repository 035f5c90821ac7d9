#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pplbias/causal.hpp"
#include "pplbias/cdc.hpp"
#include "pplbias/datamodel.hpp"
#include "pplbias/error.hpp"
#include "pplbias/metrics.hpp"
#include "pplbias/report.hpp"
#include "pplbias/theorylab.hpp"
#include "pplbias/trec.hpp"

using namespace pplbias;

namespace {

// Flag misuse and malformed config values; exits 1 instead of the data-error 2.
struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void emit_error_json(const std::string& code, const std::string& message) {
    nlohmann::ordered_json j;
    j["error"] = code;
    j["message"] = message;
    std::cerr << j.dump() << "\n";
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty())
        std::cout << text;
    else
        write_text_file(path, text);
}

// Flat key=value experiment manifest; '#' starts a comment, blank lines are
// skipped. Command-line flags take precedence over config values.
class Config {
public:
    Config() = default;

    explicit Config(const std::string& path) {
        std::istringstream in(read_text_file(path));
        std::string line;
        long lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto trim = [](std::string s) {
                s.erase(0, s.find_first_not_of(" \t\r"));
                s.erase(s.find_last_not_of(" \t\r") + 1);
                return s;
            };
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw Usage(path + ":" + std::to_string(lineno) + ": expected key=value");
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw Usage(path + ":" + std::to_string(lineno) + ": empty key");
            if (!kv_.emplace(key, value).second)
                throw Usage(path + ":" + std::to_string(lineno) + ": duplicate key " + key);
        }
    }

    // Each take() consumes the key so finish() can flag typos. A null flag
    // means the key has no command-line counterpart.
    template <typename T, typename Parse>
    void take(const char* key, const CLI::Option* flag, T& slot, Parse&& parse) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return;
        std::string value = it->second;
        kv_.erase(it);
        if (flag && flag->count() > 0) return;  // explicit flag wins
        try {
            slot = parse(value);
        } catch (const Usage&) {
            throw;
        } catch (const std::exception&) {
            throw Usage(std::string("config key ") + key + ": bad value '" + value + "'");
        }
    }

    void take_double(const char* key, const CLI::Option* flag, double& slot) {
        take(key, flag, slot, [](const std::string& v) { return std::stod(v); });
    }
    void take_int(const char* key, const CLI::Option* flag, int& slot) {
        take(key, flag, slot, [](const std::string& v) { return std::stoi(v); });
    }
    void take_long(const char* key, const CLI::Option* flag, long& slot) {
        take(key, flag, slot, [](const std::string& v) { return std::stol(v); });
    }
    void take_seed(const char* key, const CLI::Option* flag, std::uint64_t& slot) {
        take(key, flag, slot, [](const std::string& v) { return std::stoull(v); });
    }
    void take_string(const char* key, const CLI::Option* flag, std::string& slot) {
        take(key, flag, slot, [](const std::string& v) { return v; });
    }
    void take_bool(const char* key, const CLI::Option* flag, bool& slot) {
        take(key, flag, slot, [](const std::string& v) {
            if (v == "true" || v == "1" || v == "yes") return true;
            if (v == "false" || v == "0" || v == "no") return false;
            throw Usage("expected a boolean, got '" + v + "'");
        });
    }

    void finish() const {
        if (kv_.empty()) return;
        std::string keys;
        for (const auto& [k, v] : kv_) {
            if (!keys.empty()) keys += ", ";
            keys += k;
        }
        throw Usage("unknown config keys: " + keys);
    }

private:
    std::map<std::string, std::string> kv_;
};

SampleSelection parse_selection(const std::string& name) {
    if (name == "sorted") return SampleSelection::sorted;
    if (name == "seeded_random") return SampleSelection::seeded_random;
    throw Usage("selection must be sorted or seeded_random, got '" + name + "'");
}

BreakCondition parse_break(const std::string& name) {
    if (name == "none") return BreakCondition::none;
    if (name == "collinearity") return BreakCondition::collinearity;
    if (name == "orthogonality") return BreakCondition::orthogonality;
    if (name == "cooperation") return BreakCondition::cooperation;
    throw Usage("unknown break condition '" + name + "'");
}

// Document source labels: prefer the dataset's records, fall back to the
// doc_id suffix convention (-human / -gen / -generated / -llm).
SourceMap sources_from_dataset(const Dataset& ds) {
    SourceMap sources;
    for (const auto& pair : ds.pairs) {
        auto [it, fresh] = sources.emplace(pair.doc_id, pair.source);
        if (!fresh && it->second != pair.source)
            throw Error(errc::validation_error,
                        "document '" + pair.doc_id + "' appears with two different sources");
    }
    return sources;
}

SourceMap sources_from_suffix(const Qrels& qrels, const std::vector<RankedRun>& runs) {
    auto classify = [](const std::string& doc_id) -> std::optional<Source> {
        std::string stem = default_pair_key(doc_id);
        if (stem.size() == doc_id.size()) return std::nullopt;
        std::string suffix = doc_id.substr(stem.size() + 1);
        return suffix == "human" ? Source::human : Source::generated;
    };
    SourceMap sources;
    auto add = [&](const std::string& doc_id) {
        if (auto s = classify(doc_id)) sources.emplace(doc_id, *s);
    };
    for (const auto& [key, rel] : qrels) add(key.second);
    for (const auto& run : runs)
        for (const auto& [doc_id, score] : run.ranking) add(doc_id);
    return sources;
}

// Shard merge with cross-file duplicate detection; later shards may not
// repeat a (query, doc) pair of an earlier one.
Dataset ingest_many(const std::vector<std::string>& paths) {
    Dataset merged = ingest_jsonl(paths[0]);
    std::set<QrelKey> seen;
    for (const auto& p : merged.pairs) seen.insert({p.query_id, p.doc_id});
    for (std::size_t i = 1; i < paths.size(); ++i) {
        Dataset shard = ingest_jsonl(paths[i]);
        for (auto& p : shard.pairs) {
            if (!seen.insert({p.query_id, p.doc_id}).second)
                throw Error(errc::duplicate_key, "(" + p.query_id + ", " + p.doc_id +
                                                     ") appears in more than one input file");
            merged.pairs.push_back(std::move(p));
        }
        merged.qrels.insert(shard.qrels.begin(), shard.qrels.end());
        for (auto& [k, v] : shard.meta) merged.meta[k] = v;
    }
    return merged;
}

// Perplexity is a document property; the same doc under several queries must
// agree on it.
PerplexityMap perplexities_from_dataset(const Dataset& ds) {
    PerplexityMap ppl;
    for (const auto& pair : ds.pairs) {
        auto [it, fresh] = ppl.emplace(pair.doc_id, pair.perplexity);
        if (!fresh && it->second != pair.perplexity)
            throw Error(errc::validation_error, "document '" + pair.doc_id +
                                                    "' appears with two different perplexities");
    }
    return ppl;
}

// A one-source pool can never identify the effect, whatever the budget; the
// distinct pairing failure (insufficient_data) would mask that.
void require_two_sources(const Dataset& ds) {
    bool human = false, generated = false;
    for (const auto& p : ds.pairs) (p.source == Source::human ? human : generated) = true;
    if (!ds.pairs.empty() && human != generated)
        throw Error(errc::weak_instrument,
                    std::string("every record is ") + (human ? "human" : "generated") +
                        "-sourced; the source instrument never varies");
}

int cmd_validate(const std::string& input, const std::string& qrels_path,
                 const std::string& output) {
    std::string text = read_text_file(input);
    Qrels qrels;
    ValidationReport report;
    if (!qrels_path.empty()) {
        qrels = read_qrels(qrels_path);
        report = validate_jsonl_text(text, &qrels);
    } else {
        report = validate_jsonl_text(text);
    }
    write_output(output, validation_json(report));
    return report.errors > 0 ? 2 : 0;
}

struct DiagnoseArgs {
    std::vector<std::string> input;
    std::string output, model = "model", dataset = "data", selection = "sorted";
    long budget = 128;
    std::uint64_t seed = 0;
    bool corrected_se = false;
};

int cmd_diagnose(const DiagnoseArgs& args) {
    Dataset ds = ingest_many(args.input);
    require_two_sources(ds);
    EstimationSet est_set = build_estimation_set(ds, static_cast<std::size_t>(args.budget),
                                                 parse_selection(args.selection), args.seed);
    BiasEstimate est = diagnose(est_set.samples, args.corrected_se);
    std::cout << diagnose_json(est);
    if (!args.output.empty())
        write_text_file(args.output, diagnose_csv(est, args.model, args.dataset));
    return 0;
}

struct CorrectArgs {
    std::vector<std::string> input;
    std::string runs, output, selection = "sorted", tag = "cdc";
    long budget = 128;
    int top_k = 10;
    double beta2 = 0.0;
    bool has_beta2 = false;
    double beta2_scale = 1.0;
    std::uint64_t seed = 0;
    bool corrected_se = false;
};

int cmd_correct(const CorrectArgs& args) {
    // The first input file is the estimation pool; every input file
    // contributes document perplexities for the runs being corrected.
    Dataset pool = ingest_jsonl(args.input[0]);
    if (!args.has_beta2) require_two_sources(pool);
    PerplexityMap ppl = perplexities_from_dataset(ingest_many(args.input));
    std::vector<RankedRun> runs = read_trec_run(args.runs);

    CdcConfig cfg;
    cfg.budget = static_cast<int>(args.budget);
    cfg.top_k_correct = args.top_k;
    if (args.has_beta2) cfg.beta2_override = args.beta2;
    cfg.beta2_scale = args.beta2_scale;
    cfg.selection = parse_selection(args.selection);
    cfg.seed = args.seed;
    cfg.corrected_se = args.corrected_se;

    CdcResult result = run_cdc(pool, runs, ppl, cfg);
    write_trec_run(args.output, result.runs, args.tag);

    std::size_t corrected = 0;
    for (const auto& run : result.runs) corrected += run.corrected_count;
    nlohmann::ordered_json j;
    j["beta2_used"] = result.beta2_used;
    j["queries"] = result.runs.size();
    j["corrected_entries"] = corrected;
    if (result.estimate)
        j["estimate"] = nlohmann::ordered_json::parse(diagnose_json(*result.estimate));
    else
        j["estimate"] = nullptr;
    std::cout << j.dump() << "\n";
    return 0;
}

struct EvaluateArgs {
    std::vector<std::string> runs;
    std::vector<std::string> input;
    std::string qrels, output, model = "model", dataset = "data";
    int metric_k = 3;
    bool raw_units = false;
};

int cmd_evaluate(const EvaluateArgs& args) {
    Qrels qrels = read_qrels(args.qrels);
    std::vector<RankedRun> raw_runs = read_trec_run(args.runs[0]);
    std::optional<std::vector<RankedRun>> cdc_runs;
    if (args.runs.size() > 1) cdc_runs = read_trec_run(args.runs[1]);

    SourceMap sources;
    if (!args.input.empty()) {
        sources = sources_from_dataset(ingest_many(args.input));
    } else {
        std::vector<RankedRun> all = raw_runs;
        if (cdc_runs) all.insert(all.end(), cdc_runs->begin(), cdc_runs->end());
        sources = sources_from_suffix(qrels, all);
    }

    EvalReport report =
        make_eval_report(args.model, args.dataset, raw_runs, cdc_runs ? &*cdc_runs : nullptr,
                         qrels, args.metric_k, sources, !args.raw_units);
    std::cout << eval_json(report);
    if (!args.output.empty()) write_text_file(args.output, eval_csv(report));
    return 0;
}

int cmd_temp_corr(const std::string& input, const std::string& output) {
    TempReport report = temperature_report(ingest_jsonl(input));
    std::cout << temp_json(report);
    if (!output.empty()) write_text_file(output, temp_csv(report));
    return 0;
}

struct TheoryArgs {
    long trials = 100;
    std::uint64_t seed = 0;
    std::string break_name = "none", trial_csv, output;
    LabRanges ranges;
};

int cmd_theory_check(const TheoryArgs& args) {
    IdentityReport report =
        verify_overlap_identity(args.trials, args.ranges, args.seed, parse_break(args.break_name));
    write_output(args.output, theory_json(report));
    if (!args.trial_csv.empty()) write_text_file(args.trial_csv, theory_trial_csv(report));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Perplexity-bias diagnosis, correction and evaluation toolkit"};
    app.require_subcommand(1);

    // validate
    auto* validate = app.add_subcommand("validate", "Scan a JSONL dataset and report problems");
    std::string v_input, v_qrels, v_output, v_config;
    validate->add_option("--input", v_input, "dataset JSONL")->required();
    validate->add_option("--qrels", v_qrels, "qrels file to cross-check");
    validate->add_option("--output", v_output, "report path (default stdout)");
    validate->add_option("--config", v_config, "key=value manifest");

    // diagnose
    auto* diag = app.add_subcommand("diagnose", "Estimate the perplexity effect on scores");
    DiagnoseArgs d;
    std::string d_config;
    diag->add_option("--input", d.input, "paired dataset JSONL shards, merged")->required();
    diag->add_option("--output", d.output, "table row CSV path");
    auto* d_budget = diag->add_option("--budget", d.budget, "estimation set size")
                         ->check(CLI::PositiveNumber);
    auto* d_seed = diag->add_option("--seed", d.seed, "selection seed");
    auto* d_model = diag->add_option("--model", d.model, "model label for the CSV row");
    auto* d_dataset = diag->add_option("--dataset", d.dataset, "dataset label for the CSV row");
    diag->add_option("--config", d_config, "key=value manifest");

    // correct
    auto* correct = app.add_subcommand("correct", "Apply the calibration rule to a run file");
    CorrectArgs c;
    std::string c_config;
    correct
        ->add_option("--input", c.input,
                     "dataset JSONL; the first file is the estimation pool, "
                     "later files only add document perplexities")
        ->required();
    correct->add_option("--runs", c.runs, "raw run file")->required();
    correct->add_option("--output", c.output, "corrected run file")->required();
    auto* c_budget = correct->add_option("--budget", c.budget, "estimation set size")
                         ->check(CLI::PositiveNumber);
    auto* c_topk = correct->add_option("--top-k-correct", c.top_k, "corrected prefix length")
                       ->check(CLI::PositiveNumber);
    auto* c_beta2 = correct->add_option("--beta2", c.beta2, "skip diagnosis, use this effect");
    auto* c_scale = correct->add_option("--beta2-scale", c.beta2_scale, "preference knob");
    auto* c_seed = correct->add_option("--seed", c.seed, "selection seed");
    auto* c_tag = correct->add_option("--tag", c.tag, "run tag for the output file");
    correct->add_option("--config", c_config, "key=value manifest");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Score runs and report performance and bias");
    EvaluateArgs e;
    std::string e_config;
    eval->add_option("--runs", e.runs, "raw run file, optionally a corrected one")
        ->required()
        ->expected(1, 2);
    eval->add_option("--qrels", e.qrels, "qrels file")->required();
    eval->add_option("--input", e.input, "dataset JSONL shards supplying source labels");
    eval->add_option("--output", e.output, "CSV path");
    auto* e_k = eval->add_option("--metric-k", e.metric_k, "NDCG cutoff")
                    ->check(CLI::PositiveNumber);
    auto* e_raw = eval->add_flag("--raw", e.raw_units, "emit unscaled [0,1] metrics");
    auto* e_model = eval->add_option("--model", e.model, "model label");
    auto* e_dataset = eval->add_option("--dataset", e.dataset, "dataset label");
    eval->add_option("--config", e_config, "key=value manifest");

    // temp-corr
    auto* temp = app.add_subcommand("temp-corr",
                                    "Per-temperature means and their correlation");
    std::string t_input, t_output, t_config;
    temp->add_option("--input", t_input, "dataset JSONL with temperature metadata")->required();
    temp->add_option("--output", t_output, "CSV path");
    temp->add_option("--config", t_config, "key=value manifest");

    // theory-check
    auto* theory = app.add_subcommand("theory-check",
                                      "Verify the gradient-overlap identity numerically");
    TheoryArgs th;
    std::string th_config;
    auto* th_trials = theory->add_option("--trials", th.trials, "instances to sample")
                          ->check(CLI::NonNegativeNumber);
    auto* th_seed = theory->add_option("--seed", th.seed, "sweep seed");
    auto* th_break =
        theory->add_option("--break", th.break_name, "condition to violate deliberately")
            ->check(CLI::IsMember({"none", "collinearity", "orthogonality", "cooperation"}));
    auto* th_l_lo = theory->add_option("--l-lo", th.ranges.l_lo, "min sequence length");
    auto* th_l_hi = theory->add_option("--l-hi", th.ranges.l_hi, "max sequence length");
    auto* th_d_lo = theory->add_option("--d-lo", th.ranges.d_lo, "min vocabulary size");
    auto* th_d_hi = theory->add_option("--d-hi", th.ranges.d_hi, "max vocabulary size");
    auto* th_n_lo = theory->add_option("--n-lo", th.ranges.n_lo, "min embedding dimension");
    auto* th_n_hi = theory->add_option("--n-hi", th.ranges.n_hi, "max embedding dimension");
    theory->add_option("--trial-csv", th.trial_csv, "per-instance CSV path");
    theory->add_option("--output", th.output, "report path (default stdout)");
    theory->add_option("--config", th_config, "key=value manifest");

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& err) {
            if (err.get_exit_code() == 0) return app.exit(err);  // --help
            emit_error_json("usage", err.what());
            return 1;
        }

        if (validate->parsed()) {
            Config cfg(v_config.empty() ? Config() : Config(v_config));
            cfg.finish();
            return cmd_validate(v_input, v_qrels, v_output);
        }
        if (diag->parsed()) {
            Config cfg(d_config.empty() ? Config() : Config(d_config));
            cfg.take_long("budget", d_budget, d.budget);
            cfg.take_seed("seed", d_seed, d.seed);
            cfg.take_string("model", d_model, d.model);
            cfg.take_string("dataset", d_dataset, d.dataset);
            cfg.take_string("selection", nullptr, d.selection);
            cfg.take_bool("corrected-se", nullptr, d.corrected_se);
            cfg.finish();
            return cmd_diagnose(d);
        }
        if (correct->parsed()) {
            Config cfg(c_config.empty() ? Config() : Config(c_config));
            cfg.take_long("budget", c_budget, c.budget);
            cfg.take_int("top-k-correct", c_topk, c.top_k);
            double cfg_beta2 = 0.0;
            bool had = false;
            cfg.take("beta2", c_beta2, cfg_beta2, [&](const std::string& v) {
                had = true;
                return std::stod(v);
            });
            if (had && c_beta2->count() == 0) {
                c.beta2 = cfg_beta2;
                c.has_beta2 = true;
            }
            cfg.take_double("beta2-scale", c_scale, c.beta2_scale);
            cfg.take_seed("seed", c_seed, c.seed);
            cfg.take_string("tag", c_tag, c.tag);
            cfg.take_string("selection", nullptr, c.selection);
            cfg.take_bool("corrected-se", nullptr, c.corrected_se);
            cfg.finish();
            c.has_beta2 = c.has_beta2 || c_beta2->count() > 0;
            return cmd_correct(c);
        }
        if (eval->parsed()) {
            Config cfg(e_config.empty() ? Config() : Config(e_config));
            cfg.take_int("metric-k", e_k, e.metric_k);
            cfg.take_bool("raw", e_raw, e.raw_units);
            cfg.take_string("model", e_model, e.model);
            cfg.take_string("dataset", e_dataset, e.dataset);
            cfg.finish();
            return cmd_evaluate(e);
        }
        if (temp->parsed()) {
            Config cfg(t_config.empty() ? Config() : Config(t_config));
            cfg.finish();
            return cmd_temp_corr(t_input, t_output);
        }
        if (theory->parsed()) {
            Config cfg(th_config.empty() ? Config() : Config(th_config));
            cfg.take_long("trials", th_trials, th.trials);
            cfg.take_seed("seed", th_seed, th.seed);
            cfg.take_string("break", th_break, th.break_name);
            cfg.take_int("l-lo", th_l_lo, th.ranges.l_lo);
            cfg.take_int("l-hi", th_l_hi, th.ranges.l_hi);
            cfg.take_int("d-lo", th_d_lo, th.ranges.d_lo);
            cfg.take_int("d-hi", th_d_hi, th.ranges.d_hi);
            cfg.take_int("n-lo", th_n_lo, th.ranges.n_lo);
            cfg.take_int("n-hi", th_n_hi, th.ranges.n_hi);
            cfg.finish();
            return cmd_theory_check(th);
        }
        emit_error_json("usage", "no subcommand given");
        return 1;
    } catch (const Usage& err) {
        emit_error_json("usage", err.what());
        return 1;
    } catch (const Error& err) {
        emit_error_json(err.code(), err.what());
        return 2;
    } catch (const std::exception& err) {
        emit_error_json("internal", err.what());
        return 2;
    }
    return 0;
}
