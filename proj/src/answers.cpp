// SPDX-License-Identifier: Apache-2.0
#include "xmr/answers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <unordered_map>

#include "xmr/error.hpp"

namespace xmr {

std::string_view to_string(AnswerKind k) {
    switch (k) {
        case AnswerKind::text: return "text";
        case AnswerKind::year: return "year";
        case AnswerKind::numeric: return "numeric";
    }
    return "unknown";
}

AnswerKind parse_answer_kind(std::string_view name) {
    for (auto k : {AnswerKind::text, AnswerKind::year, AnswerKind::numeric}) {
        if (to_string(k) == name) return k;
    }
    throw format_error("unknown answer kind '" + std::string(name) + "'");
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !is_space(s[j])) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

struct ScannedNumber {
    double value;
    bool integral;
};

// Scans every number in `text`, left to right.
std::vector<ScannedNumber> scan_numbers(std::string_view text) {
    std::vector<ScannedNumber> out;
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        std::size_t start = i;
        bool negative = false;
        if ((text[i] == '-' || text[i] == '+') && i + 1 < n && is_digit(text[i + 1]) &&
            (i == 0 || is_space(text[i - 1]) || text[i - 1] == '(')) {
            negative = text[i] == '-';
            start = i + 1;
        } else if (!is_digit(text[i])) {
            ++i;
            continue;
        }
        std::string digits;
        std::size_t j = start;
        while (j < n && is_digit(text[j])) digits.push_back(text[j++]);
        // Thousands groups: ",ddd" not followed by another digit.
        while (j + 3 < n && text[j] == ',' && is_digit(text[j + 1]) && is_digit(text[j + 2]) &&
               is_digit(text[j + 3]) && (j + 4 >= n || !is_digit(text[j + 4]))) {
            digits.append(text.substr(j + 1, 3));
            j += 4;
        }
        bool integral = true;
        if (j + 1 < n && text[j] == '.' && is_digit(text[j + 1])) {
            integral = false;
            digits.push_back('.');
            ++j;
            while (j < n && is_digit(text[j])) digits.push_back(text[j++]);
        }
        double v = std::strtod(digits.c_str(), nullptr);
        out.push_back({negative ? -v : v, integral});
        i = j;
    }
    return out;
}

bool contains_tokens(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

bool within_year(double pred, double gold) { return std::abs(pred - gold) <= 1.0; }

bool within_numeric(double pred, double gold) {
    if (gold == 0.0) return pred == 0.0;
    return std::abs(pred - gold) <= 0.1 * std::abs(gold);
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

void require_golds(std::span<const std::string> golds) {
    if (golds.empty()) throw validation_error("answer has an empty gold list");
}

}  // namespace

std::string normalize_answer(std::string_view answer) {
    std::string stripped;
    stripped.reserve(answer.size());
    for (char ch : answer) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::ispunct(c)) continue;
        stripped.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
    std::string out;
    for (const auto& tok : split_ws(stripped)) {
        if (tok == "a" || tok == "an" || tok == "the") continue;
        if (!out.empty()) out.push_back(' ');
        out += tok;
    }
    return out;
}

std::vector<std::string> answer_tokens(std::string_view answer) {
    return split_ws(normalize_answer(answer));
}

bool exact_match(std::string_view prediction, std::span<const std::string> golds) {
    require_golds(golds);
    const auto pred = normalize_answer(prediction);
    return std::any_of(golds.begin(), golds.end(),
                       [&](const std::string& g) { return normalize_answer(g) == pred; });
}

double token_f1(std::string_view prediction, std::span<const std::string> golds) {
    require_golds(golds);
    const auto pred = answer_tokens(prediction);
    double best = 0.0;
    for (const auto& g : golds) {
        const auto gold = answer_tokens(g);
        double f1 = 0.0;
        if (pred.empty() || gold.empty()) {
            f1 = pred.empty() && gold.empty() ? 1.0 : 0.0;
        } else {
            std::unordered_map<std::string, long> counts;
            for (const auto& t : gold) ++counts[t];
            long common = 0;
            for (const auto& t : pred) {
                auto it = counts.find(t);
                if (it != counts.end() && it->second > 0) {
                    --it->second;
                    ++common;
                }
            }
            if (common > 0) {
                const double p = static_cast<double>(common) / static_cast<double>(pred.size());
                const double r = static_cast<double>(common) / static_cast<double>(gold.size());
                f1 = 2.0 * p * r / (p + r);
            }
        }
        best = std::max(best, f1);
    }
    return best;
}

std::optional<double> parse_first_number(std::string_view text) {
    auto nums = scan_numbers(text);
    if (nums.empty()) return std::nullopt;
    return nums.front().value;
}

std::optional<long long> parse_first_integer(std::string_view text) {
    const std::size_t n = text.size();
    for (std::size_t i = 0; i < n; ++i) {
        bool negative = false;
        std::size_t j = i;
        if ((text[i] == '-' || text[i] == '+') && i + 1 < n && is_digit(text[i + 1]) &&
            (i == 0 || is_space(text[i - 1]) || text[i - 1] == '(')) {
            negative = text[i] == '-';
            j = i + 1;
        } else if (!is_digit(text[i])) {
            continue;
        }
        long long v = 0;
        while (j < n && is_digit(text[j]) && v < 1'000'000'000'000'000LL) v = v * 10 + (text[j++] - '0');
        return negative ? -v : v;
    }
    return std::nullopt;
}

AnswerKind detect_kind(std::span<const std::string> golds) {
    require_golds(golds);
    const auto g = trim(golds.front());
    if (g.size() == 4 && std::all_of(g.begin(), g.end(), is_digit)) {
        const int year = std::stoi(g);
        if (year >= 1000 && year <= 2999) return AnswerKind::year;
    }
    if (!g.empty()) {
        const std::size_t first = (g[0] == '-' || g[0] == '+') ? 1 : 0;
        if (first < g.size() && is_digit(g[first])) return AnswerKind::numeric;
    }
    return AnswerKind::text;
}

SoftMatch soft_match(std::string_view prediction, std::span<const std::string> golds, AnswerKind kind) {
    require_golds(golds);
    if (exact_match(prediction, golds)) return {true, false};
    if (kind == AnswerKind::text) return {};

    SoftMatch result;
    if (kind == AnswerKind::year) {
        const auto pred = parse_first_integer(prediction);
        if (!pred) return {false, true};
        for (const auto& g : golds) {
            if (auto gold = parse_first_integer(g)) {
                if (within_year(static_cast<double>(*pred), static_cast<double>(*gold))) return {true, false};
            } else if (normalize_answer(g) == normalize_answer(prediction)) {
                return {true, false};
            }
        }
        return result;
    }

    const auto pred = parse_first_number(prediction);
    if (!pred) return {false, true};
    for (const auto& g : golds) {
        if (auto gold = parse_first_number(g)) {
            if (within_numeric(*pred, *gold)) return {true, false};
        } else if (normalize_answer(g) == normalize_answer(prediction)) {
            return {true, false};
        }
    }
    return result;
}

bool answer_present(std::string_view text, std::span<const std::string> golds, AnswerKind kind) {
    const auto hay = answer_tokens(text);
    for (const auto& g : golds) {
        if (contains_tokens(hay, answer_tokens(g))) return true;
    }
    if (kind == AnswerKind::text) return false;

    const auto numbers = scan_numbers(text);
    for (const auto& g : golds) {
        if (kind == AnswerKind::year) {
            const auto gold = parse_first_integer(g);
            if (!gold) continue;
            for (const auto& n : numbers) {
                if (n.integral && within_year(n.value, static_cast<double>(*gold))) return true;
            }
        } else {
            const auto gold = parse_first_number(g);
            if (!gold) continue;
            for (const auto& n : numbers) {
                if (within_numeric(n.value, *gold)) return true;
            }
        }
    }
    return false;
}

Qrels qrels_from_answers(std::span<const Passage> passages, const AnswerTargets& targets,
                         Granularity granularity, QrelsBuildStats* stats) {
    std::unordered_map<std::string, std::vector<const Passage*>> by_entity;
    for (const auto& p : passages) by_entity[p.entity_id].push_back(&p);

    Qrels qrels;
    QrelsBuildStats local;
    for (const auto& [qid, target] : targets) {
        if (target.entity_id.empty()) {
            throw validation_error("question '" + qid + "' has no target entity");
        }
        require_golds(target.golds);
        const AnswerKind kind = target.kind.value_or(detect_kind(target.golds));
        bool any = false;
        if (auto it = by_entity.find(target.entity_id); it != by_entity.end()) {
            for (const Passage* p : it->second) {
                if (!answer_present(p->text, target.golds, kind)) continue;
                any = true;
                qrels.add(qid, granularity == Granularity::passage ? p->passage_id : p->entity_id, 1);
            }
        }
        if (!any) local.queries_without_relevant.push_back(qid);
    }
    if (stats) *stats = std::move(local);
    return qrels;
}

AnswerSummary score_answers(const std::map<std::string, std::string>& predictions,
                            const AnswerTargets& targets) {
    AnswerSummary summary;
    for (const auto& [qid, target] : targets) {
        auto it = predictions.find(qid);
        if (it == predictions.end()) summary.missing_predictions.push_back(qid);
        const std::string& pred = it == predictions.end() ? std::string() : it->second;

        AnswerScore s;
        s.question_id = qid;
        s.kind = target.kind.value_or(detect_kind(target.golds));
        s.exact = exact_match(pred, target.golds) ? 1 : 0;
        s.f1 = token_f1(pred, target.golds);
        const auto soft = soft_match(pred, target.golds, s.kind);
        s.soft = soft.matched ? 1 : 0;
        s.parse_failure = soft.parse_failure;

        summary.exact_match += s.exact;
        summary.f1 += s.f1;
        summary.soft_match += s.soft;
        summary.parse_failures += s.parse_failure ? 1 : 0;
        summary.per_question.push_back(std::move(s));
    }
    if (!summary.per_question.empty()) {
        const auto n = static_cast<double>(summary.per_question.size());
        summary.exact_match /= n;
        summary.f1 /= n;
        summary.soft_match /= n;
    }
    return summary;
}

std::map<std::string, std::string> read_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open predictions '" + path.string() + "'");
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (tab == std::string::npos) throw format_error(where + ": expected question_id<TAB>prediction");
        if (!out.emplace(line.substr(0, tab), line.substr(tab + 1)).second) {
            throw format_error(where + ": duplicate question id");
        }
    }
    return out;
}

AnswerTargets read_answer_targets(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open targets '" + path.string() + "'");
    AnswerTargets out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw format_error(where + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("question_id") || !j["question_id"].is_string()) {
            throw format_error(where + ": missing question_id");
        }
        AnswerTarget t;
        t.entity_id = j.value("entity_id", std::string{});
        const auto& golds = j.contains("golds") ? j["golds"] : nlohmann::json::array();
        if (!golds.is_array()) throw format_error(where + ": golds must be an array of strings");
        for (const auto& g : golds) {
            if (!g.is_string()) throw format_error(where + ": golds must be an array of strings");
            t.golds.push_back(g.get<std::string>());
        }
        if (t.golds.empty()) throw format_error(where + ": empty gold list");
        if (auto k = j.find("kind"); k != j.end() && k->is_string()) t.kind = parse_answer_kind(k->get<std::string>());
        if (!out.emplace(j["question_id"].get<std::string>(), std::move(t)).second) {
            throw format_error(where + ": duplicate question id");
        }
    }
    return out;
}

}  // namespace xmr
