#include "pplbias/datamodel.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "pplbias/error.hpp"

namespace pplbias {

namespace {

const char* kRequired[] = {"query_id", "doc_id", "source", "score", "perplexity"};
const char* kKnown[] = {"query_id", "doc_id",      "source",   "score",
                        "perplexity", "relevance", "temperature", "pair_key"};

bool is_known_field(const std::string& key) {
    return std::find(std::begin(kKnown), std::end(kKnown), key) != std::end(kKnown);
}

[[noreturn]] void fail(const char* code, long line, const std::string& what) {
    throw Error(code, "line " + std::to_string(line) + ": " + what);
}

// Parses one JSONL record. `line` is 1-based and only used for messages.
ScoredPair parse_record(const nlohmann::json& j, long line) {
    for (const char* f : kRequired)
        if (!j.contains(f)) fail(errc::validation_error, line, std::string("missing field ") + f);

    ScoredPair p;
    if (!j.at("query_id").is_string()) fail(errc::validation_error, line, "query_id must be a string");
    if (!j.at("doc_id").is_string()) fail(errc::validation_error, line, "doc_id must be a string");
    p.query_id = j.at("query_id").get<std::string>();
    p.doc_id = j.at("doc_id").get<std::string>();

    if (!j.at("source").is_number_integer() ||
        (j.at("source") != 0 && j.at("source") != 1))
        fail(errc::validation_error, line, "source must be 0 (human) or 1 (generated)");
    p.source = j.at("source") == 0 ? Source::human : Source::generated;

    if (!j.at("score").is_number()) fail(errc::validation_error, line, "score must be a number");
    p.score = j.at("score").get<double>();

    if (!j.at("perplexity").is_number())
        fail(errc::validation_error, line, "perplexity must be a number");
    p.perplexity = j.at("perplexity").get<double>();
    if (!(p.perplexity > 0)) fail(errc::validation_error, line, "perplexity must be > 0");

    if (j.contains("relevance")) {
        if (!j.at("relevance").is_number_integer() || j.at("relevance").get<long>() < 0)
            fail(errc::validation_error, line, "relevance must be a non-negative integer");
        p.relevance = j.at("relevance").get<int>();
        p.has_relevance = true;
    }
    if (j.contains("temperature")) {
        if (!j.at("temperature").is_number() || j.at("temperature").get<double>() < 0)
            fail(errc::validation_error, line, "temperature must be a non-negative number");
        p.temperature = j.at("temperature").get<double>();
    }
    p.pair_key = j.contains("pair_key") && j.at("pair_key").is_string()
                     ? j.at("pair_key").get<std::string>()
                     : default_pair_key(p.doc_id);

    for (auto it = j.begin(); it != j.end(); ++it)
        if (!is_known_field(it.key())) p.extras[it.key()] = it.value();
    return p;
}

}  // namespace

std::string default_pair_key(const std::string& doc_id) {
    static const char* suffixes[] = {"human", "gen", "generated", "llm"};
    auto sep = doc_id.find_last_of("-_:");
    if (sep == std::string::npos || sep == 0) return doc_id;
    std::string tail = doc_id.substr(sep + 1);
    for (const char* s : suffixes)
        if (tail == s) return doc_id.substr(0, sep);
    return doc_id;
}

Dataset ingest_jsonl_text(const std::string& text, const std::string& origin) {
    Dataset ds;
    std::map<QrelKey, long> seen;  // key -> first line number
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            fail(errc::parse_error, lineno, "not a JSON object (" + origin + ")");
        ScoredPair p = parse_record(j, lineno);
        QrelKey key{p.query_id, p.doc_id};
        if (auto it = seen.find(key); it != seen.end())
            fail(errc::duplicate_key, lineno,
                 "duplicate (" + p.query_id + ", " + p.doc_id + "), first seen at line " +
                     std::to_string(it->second));
        seen.emplace(key, lineno);
        if (p.has_relevance) ds.qrels[key] = p.relevance;
        ds.pairs.push_back(std::move(p));
    }
    return ds;
}

Dataset ingest_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io_error, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return ingest_jsonl_text(buf.str(), path);
}

std::string serialize_jsonl(const Dataset& ds) {
    std::string out;
    for (const auto& p : ds.pairs) {
        nlohmann::json j = p.extras;  // object; std::map gives sorted keys
        j["query_id"] = p.query_id;
        j["doc_id"] = p.doc_id;
        j["source"] = static_cast<int>(p.source);
        j["score"] = p.score;
        j["perplexity"] = p.perplexity;
        if (p.has_relevance) j["relevance"] = p.relevance;
        if (p.temperature) j["temperature"] = *p.temperature;
        if (p.pair_key != default_pair_key(p.doc_id)) j["pair_key"] = p.pair_key;
        out += j.dump();
        out += '\n';
    }
    return out;
}

ValidationReport validate_jsonl_text(const std::string& text, const Qrels* external_qrels) {
    ValidationReport report;
    std::map<QrelKey, long> seen;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object())
                fail(errc::parse_error, lineno, "not a JSON object");
            ScoredPair p = parse_record(j, lineno);
            QrelKey key{p.query_id, p.doc_id};
            if (auto it = seen.find(key); it != seen.end())
                fail(errc::duplicate_key, lineno,
                     "duplicate (" + p.query_id + ", " + p.doc_id + "), first seen at line " +
                         std::to_string(it->second));
            seen.emplace(key, lineno);
            ++report.accepted;
        } catch (const Error& e) {
            ++report.errors;
            report.messages.push_back(std::string(e.code()) + ": " + e.what());
        }
    }
    if (external_qrels) {
        for (const auto& [key, rel] : *external_qrels) {
            (void)rel;
            if (!seen.count(key)) {
                ++report.skipped;
                report.messages.push_back("qrel (" + key.first + ", " + key.second +
                                          ") matches no ingested record");
            }
        }
    }
    return report;
}

EstimationSet build_estimation_set(const Dataset& train, std::size_t budget,
                                   SampleSelection selection, std::uint64_t seed) {
    if (budget < 2) throw Error(errc::invalid_argument, "estimation budget must be >= 2");

    struct Group {
        const ScoredPair* human = nullptr;
        const ScoredPair* gen = nullptr;
    };
    std::map<std::pair<std::string, std::string>, Group> groups;  // (query_id, pair_key)
    for (const auto& p : train.pairs) {
        auto& g = groups[{p.query_id, p.pair_key}];
        const ScoredPair*& slot = p.source == Source::human ? g.human : g.gen;
        if (slot)
            throw Error(errc::validation_error,
                        "query " + p.query_id + ", pair key '" + p.pair_key +
                            "' has more than one " +
                            (p.source == Source::human ? "human" : "generated") + " record");
        slot = &p;
    }

    EstimationSet set;
    std::vector<EstimationSample> complete;
    for (const auto& [key, g] : groups) {
        if (!g.human || !g.gen) {
            ++set.skipped_queries;
            continue;
        }
        EstimationSample s;
        s.query_id = key.first;
        s.pair_key = key.second;
        s.r_human = g.human->score;
        s.r_gen = g.gen->score;
        s.p_human = g.human->perplexity;
        s.p_gen = g.gen->perplexity;
        s.temperature = g.gen->temperature ? g.gen->temperature : g.human->temperature;
        complete.push_back(std::move(s));
    }
    if (complete.size() < 2)
        throw Error(errc::insufficient_data,
                    "need at least 2 complete human/generated pairs, found " +
                        std::to_string(complete.size()));

    if (selection == SampleSelection::seeded_random) {
        // Fisher-Yates with our own engine so the order is stable across
        // standard libraries, not just across runs.
        std::mt19937_64 rng(seed);
        for (std::size_t i = complete.size() - 1; i > 0; --i)
            std::swap(complete[i], complete[rng() % (i + 1)]);
    }
    if (complete.size() > budget) complete.resize(budget);
    set.samples = std::move(complete);
    return set;
}

}  // namespace pplbias
