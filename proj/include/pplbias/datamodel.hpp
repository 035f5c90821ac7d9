#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace pplbias {

enum class Source : int { human = 0, generated = 1 };

// One (query, document) record: retriever score, language-model perplexity
// (mean per-token cross-entropy, natural-log units), source label and
// optional graded relevance / sampling temperature.
struct ScoredPair {
    std::string query_id;
    std::string doc_id;
    Source source = Source::human;
    double score = 0.0;
    double perplexity = 0.0;
    int relevance = 0;
    bool has_relevance = false;
    std::optional<double> temperature;
    // Key joining a human document with its generated rewrite. Defaults to
    // doc_id with a trailing source suffix ("-human", "-gen", ...) stripped.
    std::string pair_key;
    // Unknown input fields, preserved verbatim for round-tripping.
    nlohmann::json extras = nlohmann::json::object();

    bool operator==(const ScoredPair&) const = default;
};

using QrelKey = std::pair<std::string, std::string>;  // (query_id, doc_id)
using Qrels = std::map<QrelKey, int>;

struct Dataset {
    std::vector<ScoredPair> pairs;
    Qrels qrels;
    std::map<std::string, std::string> meta;

    bool operator==(const Dataset&) const = default;
};

// Paired scores/perplexities for one query, one underlying document and its
// rewrite (estimation-set element for bias diagnosis).
struct EstimationSample {
    std::string query_id;
    std::string pair_key;
    double r_human = 0.0;
    double r_gen = 0.0;
    double p_human = 0.0;
    double p_gen = 0.0;
    std::optional<double> temperature;
};

struct EstimationSet {
    std::vector<EstimationSample> samples;
    long skipped_queries = 0;  // (query, pair_key) groups missing one source
};

enum class SampleSelection { sorted, seeded_random };

// Strict single-pass ingestion: throws Error on the first malformed or
// invalid line (code parse_error / validation_error / duplicate_key).
Dataset ingest_jsonl(const std::string& path);
Dataset ingest_jsonl_text(const std::string& text, const std::string& origin = "<memory>");

// Inverse of ingestion: one canonical JSON object per line. Round trip
// (ingest, serialize, ingest) yields an identical Dataset.
std::string serialize_jsonl(const Dataset& ds);

// Lenient whole-file scan for the `validate` command: collects per-line
// problems instead of throwing. `skipped` counts qrel keys that reference no
// ingested record when external qrels are supplied for cross-checking.
struct ValidationReport {
    long accepted = 0;
    long skipped = 0;
    long errors = 0;
    std::vector<std::string> messages;
};
ValidationReport validate_jsonl_text(const std::string& text,
                                     const Qrels* external_qrels = nullptr);

// Builds the diagnosis estimation set: one sample per (query_id, pair_key)
// group holding exactly one human and one generated record. Selection is
// sorted-(query_id, pair_key) truncation by default; seeded_random shuffles
// complete pairs with the given seed before truncating.
EstimationSet build_estimation_set(const Dataset& train, std::size_t budget,
                                   SampleSelection selection = SampleSelection::sorted,
                                   std::uint64_t seed = 0);

// Default pairing key: doc_id minus one trailing source suffix
// (-human/-gen/-generated/-llm, also with '_' or ':'), if present.
std::string default_pair_key(const std::string& doc_id);

}  // namespace pplbias
