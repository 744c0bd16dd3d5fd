// SPDX-License-Identifier: Apache-2.0
#include "xmr/trec.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "xmr/embedstore.hpp"
#include "xmr/error.hpp"

namespace xmr {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

template <typename T>
T parse_number(const std::string& s, const std::string& where) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw format_error(where + ": cannot parse '" + s + "'");
    }
    return v;
}

}  // namespace

std::string format_trec_run(const RetrievalRun& run) {
    std::string out;
    char score[64];
    for (const auto& [qid, docs] : run.queries) {
        for (std::size_t i = 0; i < docs.size(); ++i) {
            std::snprintf(score, sizeof(score), "%.6f", docs[i].score);
            out += qid;
            out += " Q0 ";
            out += docs[i].doc_id;
            out += ' ';
            out += std::to_string(i + 1);
            out += ' ';
            out += score;
            out += ' ';
            out += run.tag;
            out += '\n';
        }
    }
    return out;
}

void write_trec_run(const RetrievalRun& run, const std::filesystem::path& path) {
    detail::write_file(path, format_trec_run(run));
}

RetrievalRun read_trec_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open run '" + path.string() + "'");
    struct Entry {
        long rank;
        ScoredDoc doc;
    };
    std::map<std::string, std::vector<Entry>> raw;
    RetrievalRun run;
    bool tag_set = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto f = split_ws(line);
        if (f.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (f.size() != 6) throw format_error(where + ": expected 6 columns in run line");
        Entry e{parse_number<long>(f[3], where), {f[2], parse_number<double>(f[4], where)}};
        raw[f[0]].push_back(std::move(e));
        if (!tag_set) {
            run.tag = f[5];
            tag_set = true;
        }
    }
    for (auto& [qid, entries] : raw) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const Entry& a, const Entry& b) { return a.rank < b.rank; });
        std::set<std::string> seen;
        auto& docs = run.queries[qid];
        for (auto& e : entries) {
            if (!seen.insert(e.doc.doc_id).second) {
                throw format_error(path.string() + ": duplicate doc '" + e.doc.doc_id +
                                   "' for query '" + qid + "'");
            }
            docs.push_back(std::move(e.doc));
        }
    }
    return run;
}

void Qrels::add(const std::string& query_id, const std::string& doc_id, int grade) {
    if (grade < 1) throw validation_error("qrels grade must be >= 1");
    queries_[query_id][doc_id] = grade;
}

bool Qrels::is_relevant(const std::string& query_id, const std::string& doc_id) const {
    auto it = queries_.find(query_id);
    return it != queries_.end() && it->second.contains(doc_id);
}

const Qrels::Judgments& Qrels::judgments(const std::string& query_id) const {
    static const Judgments kEmpty;
    auto it = queries_.find(query_id);
    return it == queries_.end() ? kEmpty : it->second;
}

std::string format_qrels(const Qrels& qrels) {
    std::string out;
    for (const auto& [qid, docs] : qrels.queries()) {
        for (const auto& [doc, grade] : docs) {
            out += qid + " 0 " + doc + " " + std::to_string(grade) + "\n";
        }
    }
    return out;
}

void write_qrels(const Qrels& qrels, const std::filesystem::path& path) {
    detail::write_file(path, format_qrels(qrels));
}

Qrels read_qrels(const std::filesystem::path& path, QrelsLoadStats* stats) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open qrels '" + path.string() + "'");
    Qrels qrels;
    std::set<std::string> mentioned;
    QrelsLoadStats local;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto f = split_ws(line);
        if (f.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (f.size() != 4) throw format_error(where + ": expected 4 columns in qrels line");
        const int grade = parse_number<int>(f[3], where);
        mentioned.insert(f[0]);
        if (grade <= 0) {
            ++local.zero_grade_lines;
            continue;
        }
        qrels.add(f[0], f[2], grade);
    }
    for (const auto& q : mentioned) {
        if (!qrels.queries().contains(q)) local.queries_without_relevant.push_back(q);
    }
    if (stats) *stats = std::move(local);
    return qrels;
}

}  // namespace xmr
