// SPDX-License-Identifier: Apache-2.0
#pragma once

/// \file answers.hpp
/// \brief Answer-string scoring: exact match, token F1, and the soft
/// matching rules for year and numeric answers.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmr/corpus.hpp"
#include "xmr/trec.hpp"

namespace xmr {

enum class AnswerKind { text, year, numeric };

std::string_view to_string(AnswerKind k);
AnswerKind parse_answer_kind(std::string_view name);

/// Lowercase (ASCII), drop ASCII punctuation, drop the tokens a/an/the,
/// collapse whitespace, trim.
std::string normalize_answer(std::string_view answer);

std::vector<std::string> answer_tokens(std::string_view answer);

bool exact_match(std::string_view prediction, std::span<const std::string> golds);
double token_f1(std::string_view prediction, std::span<const std::string> golds);

/// First number in the text: optional sign, digits with optional
/// comma thousands groups, optional decimal part.
std::optional<double> parse_first_number(std::string_view text);
/// First run of digits (with optional sign) as an integer.
std::optional<long long> parse_first_integer(std::string_view text);

/// year: a lone integer in [1000, 2999]; numeric: starts with a number;
/// otherwise text. Detection uses the first gold.
AnswerKind detect_kind(std::span<const std::string> golds);

struct SoftMatch {
    bool matched = false;
    bool parse_failure = false;
};

/// An exact match always counts. Otherwise year: |pred - gold| <= 1;
/// numeric: |pred - gold| <= 0.1 |gold| (gold 0 requires pred 0).
/// A year/numeric prediction without a number is a parse failure.
SoftMatch soft_match(std::string_view prediction, std::span<const std::string> golds, AnswerKind kind);

struct AnswerTarget {
    std::string entity_id;
    std::vector<std::string> golds;
    std::optional<AnswerKind> kind;  // detected when absent
};

using AnswerTargets = std::map<std::string, AnswerTarget>;

enum class Granularity { passage, entity };

/// True if the normalized gold occurs in the normalized text on token
/// boundaries, or (year/numeric kinds) a number token of the text
/// soft-matches the gold.
bool answer_present(std::string_view text, std::span<const std::string> golds, AnswerKind kind);

struct QrelsBuildStats {
    std::vector<std::string> queries_without_relevant;
};

/// Relevant iff the passage belongs to the target entity and contains the
/// answer. Queries with no relevant document are left out (and listed).
Qrels qrels_from_answers(std::span<const Passage> passages, const AnswerTargets& targets,
                         Granularity granularity = Granularity::passage,
                         QrelsBuildStats* stats = nullptr);

struct AnswerScore {
    std::string question_id;
    AnswerKind kind = AnswerKind::text;
    int exact = 0;
    double f1 = 0.0;
    int soft = 0;
    bool parse_failure = false;
};

struct AnswerSummary {
    std::vector<AnswerScore> per_question;
    double exact_match = 0.0;
    double f1 = 0.0;
    double soft_match = 0.0;
    std::size_t parse_failures = 0;
    std::vector<std::string> missing_predictions;
};

/// Questions without a prediction are scored against the empty string.
AnswerSummary score_answers(const std::map<std::string, std::string>& predictions,
                            const AnswerTargets& targets);

/// `question_id<TAB>prediction` per line.
std::map<std::string, std::string> read_predictions(const std::filesystem::path& path);
/// JSON lines: {"question_id", "entity_id", "golds": [...], "kind"?}.
AnswerTargets read_answer_targets(const std::filesystem::path& path);

}  // namespace xmr
