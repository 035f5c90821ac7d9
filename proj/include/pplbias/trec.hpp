#pragma once

#include <string>
#include <vector>

#include "pplbias/cdc.hpp"
#include "pplbias/datamodel.hpp"
#include "pplbias/metrics.hpp"

namespace pplbias {

// Run lines are "query_id Q0 doc_id rank score tag", rank 1-based per query.
// Scores print with %.17g so a written run reads back bit-identically.
std::string to_trec_text(const std::vector<RankedRun>& runs, const std::string& tag);
std::string to_trec_text(const std::vector<CorrectedRun>& runs, const std::string& tag);

// Parses run lines. File order is authoritative: the rank column must be
// strictly increasing within a query and the returned rankings keep it, so a
// corrected run (whose tail is not score-sorted) survives a round trip.
std::vector<RankedRun> from_trec_text(const std::string& text,
                                      const std::string& origin = "<memory>");

std::vector<RankedRun> read_trec_run(const std::string& path);
void write_trec_run(const std::string& path, const std::vector<RankedRun>& runs,
                    const std::string& tag);
void write_trec_run(const std::string& path, const std::vector<CorrectedRun>& runs,
                    const std::string& tag);

// Relevance judgments, one per line: "query_id 0 doc_id relevance".
std::string to_qrels_text(const Qrels& qrels);
Qrels from_qrels_text(const std::string& text, const std::string& origin = "<memory>");
Qrels read_qrels(const std::string& path);
void write_qrels(const std::string& path, const Qrels& qrels);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace pplbias
