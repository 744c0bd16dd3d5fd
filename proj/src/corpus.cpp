// SPDX-License-Identifier: Apache-2.0
#include "xmr/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <json.hpp>

#include "xmr/embedstore.hpp"
#include "xmr/error.hpp"
#include "xmr/parallel.hpp"

namespace xmr {

// ---------------------------------------------------------------------------
// EntityPassageMap

void EntityPassageMap::add(std::string entity_id, std::vector<std::string> passage_ids) {
    if (passage_ids.empty()) {
        throw validation_error("entity '" + entity_id + "' has no passages");
    }
    if (index_.contains(entity_id)) {
        throw validation_error("entity '" + entity_id + "' mapped twice");
    }
    for (const auto& p : passage_ids) {
        auto [it, inserted] = owner_.emplace(p, entity_id);
        if (!inserted) {
            throw validation_error("passage '" + p + "' belongs to both '" + it->second +
                                   "' and '" + entity_id + "'");
        }
    }
    index_.emplace(entity_id, entries_.size());
    entries_.emplace_back(std::move(entity_id), std::move(passage_ids));
}

bool EntityPassageMap::contains(std::string_view entity_id) const {
    return index_.contains(std::string(entity_id));
}

const std::vector<std::string>& EntityPassageMap::passages_of(std::string_view entity_id) const {
    auto it = index_.find(std::string(entity_id));
    if (it == index_.end()) {
        throw validation_error("unmapped entity '" + std::string(entity_id) + "'");
    }
    return entries_[it->second].second;
}

std::optional<std::string> EntityPassageMap::entity_of(std::string_view passage_id) const {
    auto it = owner_.find(std::string(passage_id));
    if (it == owner_.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// Sentence segmentation

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// U+201C, U+2018 (opening) and U+201D, U+2019 (closing) quotes.
bool starts_with_at(std::string_view s, std::size_t i, std::string_view needle) {
    return s.substr(i, needle.size()) == needle;
}

std::size_t opening_quote_len(std::string_view s, std::size_t i) {
    const char c = s[i];
    if (c == '"' || c == '\'' || c == '(' || c == '[') return 1;
    if (starts_with_at(s, i, "\xE2\x80\x9C") || starts_with_at(s, i, "\xE2\x80\x98")) return 3;
    return 0;
}

std::size_t closing_len(std::string_view s, std::size_t i) {
    const char c = s[i];
    if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
    if (starts_with_at(s, i, "\xE2\x80\x9D") || starts_with_at(s, i, "\xE2\x80\x99")) return 3;
    return 0;
}

bool starts_sentence(std::string_view s, std::size_t i) {
    const auto c = static_cast<unsigned char>(s[i]);
    return std::isupper(c) || std::isdigit(c) || opening_quote_len(s, i) > 0;
}

constexpr std::array<std::string_view, 48> kAbbreviations = {
    "mr",   "mrs",  "ms",   "dr",    "prof", "sr",   "jr",  "st",  "mt",   "vs",   "etc", "e.g",
    "i.e",  "inc",  "ltd",  "co",    "corp", "no",   "fig", "gen", "col",  "lt",   "sgt", "capt",
    "rev",  "hon",  "u.s",  "u.k",   "jan",  "feb",  "mar", "apr", "aug",  "sept", "sep", "oct",
    "nov",  "dec",  "dept", "approx", "ca",  "cf",   "op",  "vol", "pp",   "ed",   "al",  "ft",
};

// The token ending right before the '.' at `dot`.
bool is_abbreviation(std::string_view s, std::size_t dot) {
    std::size_t b = dot;
    while (b > 0 && !is_space(s[b - 1])) --b;
    std::string token(s.substr(b, dot - b));
    while (!token.empty() && (token.front() == '(' || token.front() == '"' || token.front() == '\'')) {
        token.erase(token.begin());
    }
    if (token.empty()) return false;
    if (token.size() == 1 && std::isalpha(static_cast<unsigned char>(token[0]))) return true;
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return std::find(kAbbreviations.begin(), kAbbreviations.end(), token) != kAbbreviations.end();
}

std::string collapse_ws(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view body) {
    std::vector<std::string> sentences;
    auto emit = [&](std::size_t from, std::size_t to) {
        auto s = collapse_ws(body.substr(from, to - from));
        if (!s.empty()) sentences.push_back(std::move(s));
    };

    const std::size_t n = body.size();
    std::size_t start = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const char c = body[i];
        if (c != '.' && c != '!' && c != '?') continue;
        std::size_t j = i + 1;
        while (j < n) {
            const auto len = closing_len(body, j);
            if (len == 0) break;
            j += len;
        }
        if (j >= n || !is_space(body[j])) continue;
        std::size_t k = j;
        while (k < n && is_space(body[k])) ++k;
        if (k >= n || !starts_sentence(body, k)) continue;
        if (c == '.' && is_abbreviation(body, i)) continue;
        emit(start, j);
        start = k;
        i = k - 1;
    }
    if (start < n) emit(start, n);
    return sentences;
}

std::size_t count_words(std::string_view text) {
    std::size_t words = 0;
    bool in_word = false;
    for (char c : text) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++words;
        }
    }
    return words;
}

std::string make_passage_id(std::string_view entity_id, std::size_t ordinal) {
    return std::string(entity_id) + "#" + std::to_string(ordinal);
}

std::pair<std::string, std::size_t> parse_passage_id(std::string_view passage_id) {
    const auto hash = passage_id.rfind('#');
    if (hash == std::string_view::npos || hash + 1 == passage_id.size()) {
        throw format_error("malformed passage id '" + std::string(passage_id) + "'");
    }
    std::size_t ordinal = 0;
    for (char c : passage_id.substr(hash + 1)) {
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            throw format_error("malformed passage id '" + std::string(passage_id) + "'");
        }
        ordinal = ordinal * 10 + static_cast<std::size_t>(c - '0');
    }
    return {std::string(passage_id.substr(0, hash)), ordinal};
}

std::vector<Passage> split_passages(const Article& article, std::size_t limit) {
    if (limit < 1) throw validation_error("passage word limit must be >= 1");
    std::vector<Passage> passages;
    std::string text;
    std::size_t words = 0;

    auto flush = [&] {
        if (text.empty()) return;
        const std::size_t ordinal = passages.size();
        passages.push_back({make_passage_id(article.entity_id, ordinal), article.entity_id,
                            ordinal, std::move(text)});
        text.clear();
        words = 0;
    };

    for (auto& sentence : split_sentences(article.body)) {
        const std::size_t w = count_words(sentence);
        if (words > 0 && words + w > limit) flush();
        if (!text.empty()) text.push_back(' ');
        text += sentence;
        words += w;
        if (words >= limit) flush();
    }
    flush();
    return passages;
}

Manifests build_manifests(std::span<const Article> articles, std::size_t limit,
                          std::size_t threads) {
    Manifests m;
    std::unordered_map<std::string, bool> seen;
    for (const auto& a : articles) {
        if (a.entity_id.empty()) throw validation_error("article with empty entity id");
        if (a.title.empty()) throw validation_error("article '" + a.entity_id + "' has no title");
        if (!seen.emplace(a.entity_id, true).second) {
            throw validation_error("duplicate entity id '" + a.entity_id + "'");
        }
    }
    std::vector<std::vector<Passage>> split(articles.size());
    parallel_for(articles.size(), threads, [&](std::size_t i) { split[i] = split_passages(articles[i], limit); });
    for (std::size_t i = 0; i < articles.size(); ++i) {
        const auto& a = articles[i];
        auto& passages = split[i];
        m.entity_names.push_back({a.entity_id, a.title});
        if (a.image) m.entity_images.emplace_back(a.entity_id, *a.image);
        if (passages.empty()) continue;
        std::vector<std::string> ids;
        ids.reserve(passages.size());
        for (auto& p : passages) {
            ids.push_back(p.passage_id);
            m.passages.push_back(std::move(p));
        }
        m.entity_passages.add(a.entity_id, std::move(ids));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Records I/O

namespace {

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        fn(line, path.string() + ":" + std::to_string(lineno));
    }
}

nlohmann::json parse_record(const std::string& line, const std::string& where) {
    try {
        auto j = nlohmann::json::parse(line);
        if (!j.is_object()) throw format_error(where + ": record is not a JSON object");
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw format_error(where + ": " + e.what());
    }
}

std::string required_string(const nlohmann::json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw format_error(where + ": missing string field '" + key + "'");
    }
    return it->get<std::string>();
}

}  // namespace

std::vector<Article> read_articles(const std::filesystem::path& path) {
    std::vector<Article> out;
    for_each_line(path, [&](const std::string& line, const std::string& where) {
        auto j = parse_record(line, where);
        Article a{required_string(j, "entity_id", where), required_string(j, "title", where),
                  j.value("body", std::string{}), std::nullopt};
        if (auto it = j.find("image"); it != j.end() && it->is_string()) a.image = it->get<std::string>();
        out.push_back(std::move(a));
    });
    return out;
}

void write_articles(std::span<const Article> articles, const std::filesystem::path& path) {
    std::string out;
    for (const auto& a : articles) {
        nlohmann::ordered_json j;
        j["entity_id"] = a.entity_id;
        j["title"] = a.title;
        j["body"] = a.body;
        if (a.image) j["image"] = *a.image;
        out += j.dump() + "\n";
    }
    detail::write_file(path, out);
}

std::vector<Passage> read_passages(const std::filesystem::path& path) {
    std::vector<Passage> out;
    for_each_line(path, [&](const std::string& line, const std::string& where) {
        auto j = parse_record(line, where);
        Passage p;
        p.passage_id = required_string(j, "passage_id", where);
        p.entity_id = required_string(j, "entity_id", where);
        p.text = required_string(j, "text", where);
        if (auto it = j.find("ordinal"); it != j.end() && it->is_number_unsigned()) {
            p.ordinal = it->get<std::size_t>();
        } else {
            p.ordinal = parse_passage_id(p.passage_id).second;
        }
        out.push_back(std::move(p));
    });
    return out;
}

void write_passages(std::span<const Passage> passages, const std::filesystem::path& path) {
    std::string out;
    for (const auto& p : passages) {
        nlohmann::ordered_json j;
        j["passage_id"] = p.passage_id;
        j["entity_id"] = p.entity_id;
        j["ordinal"] = p.ordinal;
        j["text"] = p.text;
        out += j.dump() + "\n";
    }
    detail::write_file(path, out);
}

std::vector<std::pair<std::string, std::string>> read_two_column(const std::filesystem::path& path) {
    std::vector<std::pair<std::string, std::string>> rows;
    for_each_line(path, [&](const std::string& line, const std::string& where) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw format_error(where + ": expected two tab-separated columns");
        rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    });
    return rows;
}

void write_two_column(const std::vector<std::pair<std::string, std::string>>& rows,
                      const std::filesystem::path& path) {
    std::string out;
    for (const auto& [a, b] : rows) {
        if (a.find_first_of("\t\n") != std::string::npos || b.find('\n') != std::string::npos) {
            throw validation_error("field for '" + a + "' contains tab or newline");
        }
        out += a + "\t" + b + "\n";
    }
    detail::write_file(path, out);
}

EntityPassageMap read_entity_passage_map(const std::filesystem::path& path) {
    EntityPassageMap map;
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::string>> grouped;
    for (auto& [entity, passage] : read_two_column(path)) {
        auto [it, inserted] = grouped.try_emplace(entity);
        if (inserted) order.push_back(entity);
        it->second.push_back(std::move(passage));
    }
    for (const auto& e : order) map.add(e, std::move(grouped[e]));
    return map;
}

void write_entity_passage_map(const EntityPassageMap& map, const std::filesystem::path& path) {
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& [entity, passages] : map.entries()) {
        for (const auto& p : passages) rows.emplace_back(entity, p);
    }
    write_two_column(rows, path);
}

}  // namespace xmr
