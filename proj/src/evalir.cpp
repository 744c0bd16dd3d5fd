// SPDX-License-Identifier: Apache-2.0
#include "xmr/evalir.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "xmr/error.hpp"
#include "xmr/parallel.hpp"

namespace xmr {

MetricSpec MetricSpec::parse(std::string_view text) {
    const auto at = text.find('@');
    const std::string_view head = text.substr(0, at);
    MetricSpec spec;
    if (head == "mrr") {
        spec.kind = MetricKind::mrr;
    } else if (head == "p" || head == "precision") {
        spec.kind = MetricKind::precision;
    } else if (head == "r" || head == "recall") {
        spec.kind = MetricKind::recall;
    } else if (head == "success" || head == "s") {
        spec.kind = MetricKind::success;
    } else {
        throw usage_error("unknown metric '" + std::string(text) + "'");
    }
    if (at == std::string_view::npos) {
        if (spec.kind != MetricKind::mrr) {
            throw usage_error("metric '" + std::string(text) + "' needs a cutoff, e.g. p@1");
        }
        spec.k = 100;
        return spec;
    }
    const auto digits = text.substr(at + 1);
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), spec.k);
    if (ec != std::errc() || p != digits.data() + digits.size() || spec.k < 1) {
        throw usage_error("bad cutoff in metric '" + std::string(text) + "'");
    }
    return spec;
}

std::string MetricSpec::name() const {
    const char* head = "mrr";
    switch (kind) {
        case MetricKind::mrr: head = "mrr"; break;
        case MetricKind::precision: head = "p"; break;
        case MetricKind::recall: head = "r"; break;
        case MetricKind::success: head = "success"; break;
    }
    return std::string(head) + "@" + std::to_string(k);
}

namespace {

double query_value(const std::vector<ScoredDoc>& docs, const Qrels::Judgments& relevant,
                   const MetricSpec& spec) {
    const std::size_t depth = std::min(docs.size(), spec.k);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (!relevant.contains(docs[i].doc_id)) continue;
        if (spec.kind == MetricKind::mrr) return 1.0 / static_cast<double>(i + 1);
        if (spec.kind == MetricKind::success) return 1.0;
        ++hits;
    }
    switch (spec.kind) {
        case MetricKind::precision: return static_cast<double>(hits) / static_cast<double>(spec.k);
        case MetricKind::recall: return static_cast<double>(hits) / static_cast<double>(relevant.size());
        default: return 0.0;
    }
}

}  // namespace

MetricReport evaluate(const RetrievalRun& run, const Qrels& qrels, const MetricSpec& spec) {
    if (run.queries.empty()) throw validation_error("cannot evaluate an empty run");
    if (qrels.empty()) throw validation_error("cannot evaluate against empty qrels");
    if (spec.k < 1) throw validation_error("metric cutoff must be >= 1");

    MetricReport report;
    report.metric = spec.name();
    report.run_tag = run.tag;
    report.cutoff = spec.k;
    double sum = 0.0;
    for (const auto& [qid, relevant] : qrels.queries()) {
        auto it = run.queries.find(qid);
        double v = 0.0;
        if (it == run.queries.end()) {
            report.missing_queries.push_back(qid);
        } else {
            v = query_value(it->second, relevant, spec);
        }
        report.per_query.emplace(qid, v);
        sum += v;
    }
    report.mean = sum / static_cast<double>(report.per_query.size());
    return report;
}

MetricReport mrr(const RetrievalRun& run, const Qrels& qrels, std::size_t cutoff) {
    return evaluate(run, qrels, {MetricKind::mrr, cutoff});
}

MetricReport precision_at(const RetrievalRun& run, const Qrels& qrels, std::size_t k) {
    return evaluate(run, qrels, {MetricKind::precision, k});
}

MetricReport recall_at(const RetrievalRun& run, const Qrels& qrels, std::size_t k) {
    return evaluate(run, qrels, {MetricKind::recall, k});
}

MetricReport success_at(const RetrievalRun& run, const Qrels& qrels, std::size_t k) {
    return evaluate(run, qrels, {MetricKind::success, k});
}

std::pair<std::vector<double>, std::vector<double>> paired_values(const MetricReport& a,
                                                                  const MetricReport& b) {
    if (a.per_query.size() != b.per_query.size()) {
        throw validation_error("reports cover different query sets");
    }
    std::pair<std::vector<double>, std::vector<double>> out;
    for (const auto& [qid, v] : a.per_query) {
        auto it = b.per_query.find(qid);
        if (it == b.per_query.end()) throw validation_error("query '" + qid + "' missing from second report");
        out.first.push_back(v);
        out.second.push_back(it->second);
    }
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Ties in the statistic are common (metric values are often 0, 1/2, 1/3...).
bool at_least(double stat, double observed) {
    return stat >= observed - 1e-12 * std::max(1.0, observed);
}

constexpr std::uint64_t kRoundsPerTask = 4096;

}  // namespace

FisherResult fisher_randomization(std::span<const double> a, std::span<const double> b,
                                  const FisherOptions& options) {
    if (a.size() != b.size()) throw validation_error("paired samples differ in length");
    if (a.empty()) throw validation_error("paired samples are empty");
    const std::size_t n = a.size();
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
    const double inv_n = 1.0 / static_cast<double>(n);

    double total = 0.0;
    for (double d : diff) total += d;

    FisherResult result;
    result.observed = std::abs(total) * inv_n;

    if (n <= options.exhaustive_max_n && n < 63) {
        const std::uint64_t assignments = std::uint64_t{1} << n;
        std::uint64_t hits = 0;
        for (std::uint64_t mask = 0; mask < assignments; ++mask) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += (mask >> i & 1u) ? -diff[i] : diff[i];
            if (at_least(std::abs(s) * inv_n, result.observed)) ++hits;
        }
        result.exhaustive = true;
        result.assignments = assignments;
        result.p_value = static_cast<double>(hits) / static_cast<double>(assignments);
        return result;
    }

    if (options.rounds == 0) throw validation_error("randomization test needs rounds >= 1");
    const std::uint64_t tasks = (options.rounds + kRoundsPerTask - 1) / kRoundsPerTask;
    std::vector<std::uint64_t> task_hits(tasks, 0);
    parallel_for(tasks, options.threads, [&](std::size_t t) {
        const std::uint64_t begin = t * kRoundsPerTask;
        const std::uint64_t end = std::min(options.rounds, begin + kRoundsPerTask);
        std::uint64_t hits = 0;
        for (std::uint64_t round = begin; round < end; ++round) {
            // Counter-based stream: round r depends only on (seed, r).
            std::uint64_t state = options.seed ^ (round * 0xD1B54A32D192ED03ull);
            splitmix64(state);
            std::uint64_t bits = 0;
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (i % 64 == 0) bits = splitmix64(state);
                s += (bits >> (i % 64) & 1u) ? -diff[i] : diff[i];
            }
            if (at_least(std::abs(s) * inv_n, result.observed)) ++hits;
        }
        task_hits[t] = hits;
    });
    std::uint64_t hits = 0;
    for (auto h : task_hits) hits += h;
    result.assignments = options.rounds;
    result.p_value = static_cast<double>(hits + 1) / static_cast<double>(options.rounds + 1);
    return result;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10f", v);
    return buf;
}

}  // namespace

std::string format_report_tsv(std::span<const MetricReport> reports) {
    std::string out = "metric\tquery\tvalue\n";
    for (const auto& r : reports) {
        for (const auto& [qid, v] : r.per_query) out += r.metric + "\t" + qid + "\t" + fmt(v) + "\n";
        out += r.metric + "\tall\t" + fmt(r.mean) + "\n";
    }
    return out;
}

std::string format_report_table(std::span<const MetricReport> reports) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %-14s %10s %8s %8s\n", "metric", "run", "mean", "queries",
                  "missing");
    out += line;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof(line), "%-12s %-14s %10.4f %8zu %8zu\n", r.metric.c_str(),
                      r.run_tag.c_str(), r.mean, r.per_query.size(), r.missing_queries.size());
        out += line;
    }
    return out;
}

std::string format_report_json(std::span<const MetricReport> reports) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json m;
        m["metric"] = r.metric;
        m["run"] = r.run_tag;
        m["cutoff"] = r.cutoff;
        m["mean"] = r.mean;
        m["queries"] = r.per_query.size();
        m["missing_queries"] = r.missing_queries;
        m["per_query"] = r.per_query;
        j.push_back(std::move(m));
    }
    return j.dump(2) + "\n";
}

}  // namespace xmr
