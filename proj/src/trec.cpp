#include "pplbias/trec.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pplbias/error.hpp"

namespace pplbias {

namespace {

std::string score_repr(double score) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", score);
    return buf;
}

void check_token(const std::string& value, const char* what) {
    if (value.empty()) throw Error(errc::invalid_argument, std::string(what) + " is empty");
    if (value.find_first_of(" \t\r\n") != std::string::npos)
        throw Error(errc::invalid_argument,
                    std::string(what) + " '" + value + "' contains whitespace");
}

[[noreturn]] void fail(const char* code, const std::string& origin, long lineno,
                       const std::string& message) {
    throw Error(code, origin + ":" + std::to_string(lineno) + ": " + message);
}

double parse_score(const std::string& token, const std::string& origin, long lineno) {
    try {
        std::size_t used = 0;
        double value = std::stod(token, &used);
        if (used != token.size())
            fail(errc::parse_error, origin, lineno, "trailing junk in score '" + token + "'");
        if (!std::isfinite(value))
            fail(errc::validation_error, origin, lineno, "score '" + token + "' is not finite");
        return value;
    } catch (const std::invalid_argument&) {
        fail(errc::parse_error, origin, lineno, "bad score '" + token + "'");
    } catch (const std::out_of_range&) {
        fail(errc::validation_error, origin, lineno, "score '" + token + "' overflows");
    }
}

long parse_count(const std::string& token, const char* what, const std::string& origin,
                 long lineno) {
    try {
        std::size_t used = 0;
        long value = std::stol(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return value;
    } catch (const std::exception&) {
        fail(errc::parse_error, origin, lineno,
             std::string("bad ") + what + " '" + token + "'");
    }
}

std::vector<std::string> split_fields(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> fields;
    std::string tok;
    while (in >> tok) fields.push_back(tok);
    return fields;
}

}  // namespace

std::string to_trec_text(const std::vector<RankedRun>& runs, const std::string& tag) {
    check_token(tag, "run tag");
    std::string out;
    for (const auto& run : runs) {
        check_token(run.query_id, "query_id");
        long rank = 1;
        for (const auto& [doc_id, score] : run.ranking) {
            check_token(doc_id, "doc_id");
            out += run.query_id + " Q0 " + doc_id + " " + std::to_string(rank++) + " " +
                   score_repr(score) + " " + tag + "\n";
        }
    }
    return out;
}

std::string to_trec_text(const std::vector<CorrectedRun>& runs, const std::string& tag) {
    std::vector<RankedRun> plain;
    plain.reserve(runs.size());
    for (const auto& run : runs) {
        RankedRun r;
        r.query_id = run.query_id;
        for (const auto& e : run.entries) r.ranking.emplace_back(e.doc_id, e.calibrated_score);
        plain.push_back(std::move(r));
    }
    return to_trec_text(plain, tag);
}

std::vector<RankedRun> from_trec_text(const std::string& text, const std::string& origin) {
    std::vector<RankedRun> runs;
    std::map<std::string, std::size_t> index;       // query_id -> slot in runs
    std::map<std::string, long> last_rank;          // rank monotonicity per query
    std::set<std::pair<std::string, std::string>> seen;

    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != 6)
            fail(errc::parse_error, origin, lineno,
                 "expected 6 fields (query_id Q0 doc_id rank score tag), got " +
                     std::to_string(fields.size()));
        const std::string& query_id = fields[0];
        const std::string& doc_id = fields[2];
        long rank = parse_count(fields[3], "rank", origin, lineno);
        double score = parse_score(fields[4], origin, lineno);

        if (!seen.emplace(query_id, doc_id).second)
            fail(errc::duplicate_key, origin, lineno,
                 "duplicate document '" + doc_id + "' for query '" + query_id + "'");
        auto [it, fresh] = index.emplace(query_id, runs.size());
        if (fresh) {
            runs.emplace_back();
            runs.back().query_id = query_id;
        }
        long& prev = last_rank[query_id];
        if (rank <= prev)
            fail(errc::parse_error, origin, lineno,
                 "rank " + std::to_string(rank) + " does not increase for query '" + query_id +
                     "'");
        prev = rank;
        runs[it->second].ranking.emplace_back(doc_id, score);
    }
    return runs;
}

std::vector<RankedRun> read_trec_run(const std::string& path) {
    return from_trec_text(read_text_file(path), path);
}

void write_trec_run(const std::string& path, const std::vector<RankedRun>& runs,
                    const std::string& tag) {
    write_text_file(path, to_trec_text(runs, tag));
}

void write_trec_run(const std::string& path, const std::vector<CorrectedRun>& runs,
                    const std::string& tag) {
    write_text_file(path, to_trec_text(runs, tag));
}

std::string to_qrels_text(const Qrels& qrels) {
    std::string out;
    for (const auto& [key, rel] : qrels) {
        check_token(key.first, "query_id");
        check_token(key.second, "doc_id");
        out += key.first + " 0 " + key.second + " " + std::to_string(rel) + "\n";
    }
    return out;
}

Qrels from_qrels_text(const std::string& text, const std::string& origin) {
    Qrels qrels;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != 4)
            fail(errc::parse_error, origin, lineno,
                 "expected 4 fields (query_id 0 doc_id relevance), got " +
                     std::to_string(fields.size()));
        long rel = parse_count(fields[3], "relevance", origin, lineno);
        if (rel < 0)
            fail(errc::validation_error, origin, lineno,
                 "negative relevance " + std::to_string(rel));
        QrelKey key{fields[0], fields[2]};
        if (!qrels.emplace(key, static_cast<int>(rel)).second)
            fail(errc::duplicate_key, origin, lineno,
                 "duplicate judgment for (" + key.first + ", " + key.second + ")");
    }
    return qrels;
}

Qrels read_qrels(const std::string& path) { return from_qrels_text(read_text_file(path), path); }

void write_qrels(const std::string& path, const Qrels& qrels) {
    write_text_file(path, to_qrels_text(qrels));
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io_error, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(errc::io_error, "cannot open " + path + " for writing");
    out << text;
    if (!out.flush()) throw Error(errc::io_error, "short write to " + path);
}

}  // namespace pplbias
