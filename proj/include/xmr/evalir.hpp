// SPDX-License-Identifier: Apache-2.0
#pragma once

/// \file evalir.hpp
/// \brief Rank metrics over runs and qrels, and the paired randomization
/// significance test.
///
/// The evaluated query set is the qrels query set. A query the run does not
/// contain scores 0 and is listed in MetricReport::missing_queries.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmr/trec.hpp"

namespace xmr {

enum class MetricKind {
    mrr,        // reciprocal rank of the first relevant doc within k
    precision,  // |relevant in top-k| / k
    recall,     // |relevant in top-k| / |relevant|
    success,    // 1 if any relevant in top-k
};

struct MetricSpec {
    MetricKind kind = MetricKind::mrr;
    std::size_t k = 100;

    /// "mrr@100", "p@1", "r@10", "success@5"; bare "mrr" means mrr@100.
    static MetricSpec parse(std::string_view text);
    std::string name() const;

    friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

struct MetricReport {
    std::string metric;
    std::string run_tag;
    std::size_t cutoff = 0;
    std::map<std::string, double> per_query;
    double mean = 0.0;
    std::vector<std::string> missing_queries;
};

MetricReport evaluate(const RetrievalRun& run, const Qrels& qrels, const MetricSpec& spec);

MetricReport mrr(const RetrievalRun& run, const Qrels& qrels, std::size_t cutoff);
MetricReport precision_at(const RetrievalRun& run, const Qrels& qrels, std::size_t k);
MetricReport recall_at(const RetrievalRun& run, const Qrels& qrels, std::size_t k);
MetricReport success_at(const RetrievalRun& run, const Qrels& qrels, std::size_t k);

/// Per-query value vectors aligned on the queries of `a` (which must equal
/// those of `b`).
std::pair<std::vector<double>, std::vector<double>> paired_values(const MetricReport& a,
                                                                  const MetricReport& b);

struct FisherOptions {
    std::uint64_t rounds = 100000;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    /// Enumerate all 2^n swap assignments when n <= this.
    std::size_t exhaustive_max_n = 20;
};

struct FisherResult {
    double p_value = 1.0;
    double observed = 0.0;  // |mean(a) - mean(b)|
    bool exhaustive = false;
    std::uint64_t assignments = 0;
};

/// Two-sided paired randomization test on per-query values. Exhaustive mode
/// reports count/2^n; Monte-Carlo mode reports (hits + 1) / (rounds + 1).
FisherResult fisher_randomization(std::span<const double> a, std::span<const double> b,
                                  const FisherOptions& options = {});

/// Tab-separated `metric query value` rows followed by `metric all mean`.
std::string format_report_tsv(std::span<const MetricReport> reports);
std::string format_report_table(std::span<const MetricReport> reports);
std::string format_report_json(std::span<const MetricReport> reports);

}  // namespace xmr
