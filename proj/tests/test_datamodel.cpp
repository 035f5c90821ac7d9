#include <doctest.h>

#include <string>

#include "pplbias/datamodel.hpp"
#include "pplbias/error.hpp"

using namespace pplbias;

namespace {

std::string minimal_line(const std::string& qid, const std::string& did, int source,
                         double score, double ppl) {
    return "{\"query_id\":\"" + qid + "\",\"doc_id\":\"" + did +
           "\",\"source\":" + std::to_string(source) + ",\"score\":" + std::to_string(score) +
           ",\"perplexity\":" + std::to_string(ppl) + "}\n";
}

// Paired corpus: per query one human and one generated record sharing a pair key.
std::string paired_corpus(int n_queries) {
    std::string text;
    for (int i = 0; i < n_queries; ++i) {
        char qid[32];
        std::snprintf(qid, sizeof qid, "q%03d", i);
        text += minimal_line(qid, std::string(qid) + "-doc-human", 0, 0.5, 3.0);
        text += minimal_line(qid, std::string(qid) + "-doc-gen", 1, 0.7, 2.0);
    }
    return text;
}

}  // namespace

TEST_SUITE("datamodel") {

TEST_CASE("minimal valid record ingests to one pair") {
    auto ds = ingest_jsonl_text(
        R"({"query_id":"q1","doc_id":"d1","source":0,"score":0.5,"perplexity":2.0})");
    REQUIRE(ds.pairs.size() == 1);
    const auto& p = ds.pairs[0];
    CHECK(p.query_id == "q1");
    CHECK(p.doc_id == "d1");
    CHECK(p.source == Source::human);
    CHECK(p.score == doctest::Approx(0.5));
    CHECK(p.perplexity == doctest::Approx(2.0));
    CHECK_FALSE(p.has_relevance);
    CHECK(ds.qrels.empty());
}

TEST_CASE("non-positive perplexity is a validation error naming the field") {
    try {
        ingest_jsonl_text(
            R"({"query_id":"q1","doc_id":"d1","source":0,"score":0.5,"perplexity":-1.0})");
        FAIL("expected validation error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::validation_error);
        CHECK(std::string(e.what()).find("perplexity") != std::string::npos);
    }
}

TEST_CASE("duplicate (query_id, doc_id) cites both line numbers") {
    std::string text = minimal_line("q1", "d1", 0, 0.5, 2.0) + minimal_line("q2", "d2", 1, 0.4, 2.5) +
                       minimal_line("q1", "d1", 1, 0.6, 1.5);
    try {
        ingest_jsonl_text(text);
        FAIL("expected duplicate-key error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::duplicate_key);
        std::string msg = e.what();
        CHECK(msg.find("line 1") != std::string::npos);
        CHECK(msg.find("line 3") != std::string::npos);
    }
}

TEST_CASE("malformed line reports its line number") {
    std::string text = minimal_line("q1", "d1", 0, 0.5, 2.0) + "{not json\n";
    try {
        ingest_jsonl_text(text);
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::parse_error);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("missing required field is rejected") {
    CHECK_THROWS_AS(ingest_jsonl_text(R"({"query_id":"q1","doc_id":"d1","source":0,"score":1.0})"),
                    Error);
}

TEST_CASE("relevance populates qrels; temperature and extras are preserved") {
    auto ds = ingest_jsonl_text(
        R"({"query_id":"q1","doc_id":"d1","source":1,"score":0.5,"perplexity":2.0,)"
        R"("relevance":3,"temperature":0.7,"note":"kept"})");
    REQUIRE(ds.pairs.size() == 1);
    CHECK(ds.pairs[0].has_relevance);
    CHECK(ds.pairs[0].relevance == 3);
    CHECK(ds.pairs[0].temperature == 0.7);
    CHECK(ds.pairs[0].extras.at("note") == "kept");
    REQUIRE(ds.qrels.size() == 1);
    CHECK(ds.qrels.at({"q1", "d1"}) == 3);
}

TEST_CASE("round trip: ingest, serialize, ingest is the identity") {
    std::string text =
        R"({"query_id":"q1","doc_id":"d1-human","source":0,"score":0.51,"perplexity":2.25,"relevance":1})"
        "\n"
        R"({"query_id":"q1","doc_id":"d1-gen","source":1,"score":0.62,"perplexity":1.75,"relevance":1,"temperature":1.0})"
        "\n"
        R"({"query_id":"q2","doc_id":"d9","source":0,"score":-0.25,"perplexity":4.5,"tag":"x","weight":2.5})"
        "\n";
    auto first = ingest_jsonl_text(text);
    auto second = ingest_jsonl_text(serialize_jsonl(first));
    CHECK(first == second);
    CHECK(serialize_jsonl(first) == serialize_jsonl(second));
}

TEST_CASE("explicit pair_key wins; default strips one source suffix") {
    auto ds = ingest_jsonl_text(
        R"({"query_id":"q1","doc_id":"any","source":0,"score":0.1,"perplexity":1.0,"pair_key":"k7"})");
    CHECK(ds.pairs[0].pair_key == "k7");

    CHECK(default_pair_key("doc12-human") == "doc12");
    CHECK(default_pair_key("doc12-gen") == "doc12");
    CHECK(default_pair_key("doc12_generated") == "doc12");
    CHECK(default_pair_key("doc12:llm") == "doc12");
    CHECK(default_pair_key("doc12") == "doc12");
    CHECK(default_pair_key("d-1") == "d-1");  // only whole suffix tokens strip
}

TEST_CASE("estimation set: 200 pairs, budget 128, sorted prefix") {
    auto ds = ingest_jsonl_text(paired_corpus(200));
    auto set = build_estimation_set(ds, 128);
    REQUIRE(set.samples.size() == 128);
    CHECK(set.skipped_queries == 0);
    CHECK(set.samples.front().query_id == "q000");
    CHECK(set.samples.back().query_id == "q127");
    for (std::size_t i = 1; i < set.samples.size(); ++i)
        CHECK(set.samples[i - 1].query_id < set.samples[i].query_id);
}

TEST_CASE("estimation set pairs human and generated records of one query") {
    auto ds = ingest_jsonl_text(paired_corpus(5));
    auto set = build_estimation_set(ds, 128);
    REQUIRE(set.samples.size() == 5);
    for (const auto& s : set.samples) {
        CHECK(s.r_human == doctest::Approx(0.5));
        CHECK(s.r_gen == doctest::Approx(0.7));
        CHECK(s.p_human == doctest::Approx(3.0));
        CHECK(s.p_gen == doctest::Approx(2.0));
    }
}

TEST_CASE("estimation set: budget truncates, single pair is insufficient") {
    auto five = ingest_jsonl_text(paired_corpus(5));
    CHECK(build_estimation_set(five, 3).samples.size() == 3);

    auto one = ingest_jsonl_text(paired_corpus(1));
    try {
        build_estimation_set(one, 128);
        FAIL("expected insufficient-data error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::insufficient_data);
    }
}

TEST_CASE("queries with a lone source are skipped and counted") {
    std::string text = paired_corpus(3);
    text += minimal_line("q900", "orphan-human", 0, 0.4, 2.0);  // no generated twin
    auto ds = ingest_jsonl_text(text);
    auto set = build_estimation_set(ds, 128);
    CHECK(set.samples.size() == 3);
    CHECK(set.skipped_queries == 1);
}

TEST_CASE("build_estimation_set is deterministic; seeded mode is seed-stable") {
    auto ds = ingest_jsonl_text(paired_corpus(40));
    auto a = build_estimation_set(ds, 16);
    auto b = build_estimation_set(ds, 16);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        CHECK(a.samples[i].query_id == b.samples[i].query_id);

    auto r1 = build_estimation_set(ds, 16, SampleSelection::seeded_random, 99);
    auto r2 = build_estimation_set(ds, 16, SampleSelection::seeded_random, 99);
    auto r3 = build_estimation_set(ds, 16, SampleSelection::seeded_random, 100);
    REQUIRE(r1.samples.size() == 16);
    bool same_as_r2 = true, same_as_r3 = true;
    for (std::size_t i = 0; i < 16; ++i) {
        same_as_r2 &= r1.samples[i].query_id == r2.samples[i].query_id;
        same_as_r3 &= r1.samples[i].query_id == r3.samples[i].query_id;
    }
    CHECK(same_as_r2);
    CHECK_FALSE(same_as_r3);  // different seed reorders 40 candidates
}

TEST_CASE("two same-source records under one pair key are ambiguous") {
    std::string text = minimal_line("q1", "a-human", 0, 0.5, 3.0) +
                       minimal_line("q1", "b-human", 0, 0.6, 3.1) +
                       minimal_line("q1", "a-gen", 1, 0.7, 2.0);
    // all three share pair_key "a"/"b"? No: force one key explicitly
    text = std::string() +
           R"({"query_id":"q1","doc_id":"x1","source":0,"score":0.5,"perplexity":3.0,"pair_key":"k"})" "\n" +
           R"({"query_id":"q1","doc_id":"x2","source":0,"score":0.6,"perplexity":3.1,"pair_key":"k"})" "\n" +
           R"({"query_id":"q1","doc_id":"x3","source":1,"score":0.7,"perplexity":2.0,"pair_key":"k"})" "\n";
    auto ds = ingest_jsonl_text(text);
    CHECK_THROWS_AS(build_estimation_set(ds, 8), Error);
}

TEST_CASE("lenient validation counts problems instead of throwing") {
    std::string text = minimal_line("q1", "d1", 0, 0.5, 2.0) + "garbage\n" +
                       minimal_line("q1", "d1", 0, 0.5, 2.0) +  // duplicate
                       minimal_line("q2", "d2", 1, 0.4, 1.0);
    auto report = validate_jsonl_text(text);
    CHECK(report.accepted == 2);
    CHECK(report.errors == 2);
    CHECK(report.skipped == 0);

    Qrels external{{{"q1", "d1"}, 1}, {{"q9", "missing"}, 2}};
    auto cross = validate_jsonl_text(text, &external);
    CHECK(cross.skipped == 1);  // q9/missing matches no ingested record
}

}  // TEST_SUITE
