// SPDX-License-Identifier: Apache-2.0
#pragma once

/// \file trec.hpp
/// \brief Ranked runs and relevance judgments, with TREC text I/O.
///
/// Run lines:   `qid Q0 docid rank score tag` (rank from 1, score %.6f)
/// Qrels lines: `qid 0 docid grade`

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace xmr {

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Score descending, then doc id ascending.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

/// Per-query ranked lists; list order is the ranking.
struct RetrievalRun {
    std::string tag = "xmr";
    std::map<std::string, std::vector<ScoredDoc>> queries;

    friend bool operator==(const RetrievalRun&, const RetrievalRun&) = default;
};

std::string format_trec_run(const RetrievalRun& run);
void write_trec_run(const RetrievalRun& run, const std::filesystem::path& path);
/// Lists are ordered by the rank column; the tag of the first line is kept.
RetrievalRun read_trec_run(const std::filesystem::path& path);

/// query id -> (doc id -> grade >= 1)
class Qrels {
public:
    using Judgments = std::map<std::string, int>;

    /// Throws if any grade < 1 or a query has no judgments.
    void add(const std::string& query_id, const std::string& doc_id, int grade);

    bool empty() const noexcept { return queries_.empty(); }
    std::size_t size() const noexcept { return queries_.size(); }
    const std::map<std::string, Judgments>& queries() const noexcept { return queries_; }

    bool is_relevant(const std::string& query_id, const std::string& doc_id) const;
    /// Empty map for unknown queries.
    const Judgments& judgments(const std::string& query_id) const;

    friend bool operator==(const Qrels&, const Qrels&) = default;

private:
    std::map<std::string, Judgments> queries_;
};

std::string format_qrels(const Qrels& qrels);
void write_qrels(const Qrels& qrels, const std::filesystem::path& path);

struct QrelsLoadStats {
    std::size_t zero_grade_lines = 0;
    std::vector<std::string> queries_without_relevant;
};

/// Lines with grade <= 0 are skipped; queries left with no relevant
/// document are dropped and listed in `stats`.
Qrels read_qrels(const std::filesystem::path& path, QrelsLoadStats* stats = nullptr);

}  // namespace xmr
