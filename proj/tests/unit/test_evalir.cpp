// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <json.hpp>
#include <random>

#include "oracles.hpp"
#include "xmr/error.hpp"
#include "xmr/evalir.hpp"

namespace {

using namespace xmr;

RetrievalRun run_of(std::map<std::string, std::vector<std::string>> lists) {
    RetrievalRun run;
    for (auto& [qid, docs] : lists) {
        double s = 1.0;
        for (auto& d : docs) run.queries[qid].push_back({d, s -= 0.01});
    }
    return run;
}

struct RandomCase {
    RetrievalRun run;
    Qrels qrels;
};

RandomCase random_case(std::mt19937_64& rng, std::size_t queries) {
    RandomCase c;
    for (std::size_t q = 0; q < queries; ++q) {
        const std::string qid = "q" + std::to_string(q);
        std::vector<std::string> docs;
        for (int d = 0; d < 25; ++d) docs.push_back("d" + std::to_string(d));
        std::shuffle(docs.begin(), docs.end(), rng);
        const std::size_t depth = rng() % 25;
        if (rng() % 10 != 0) {
            for (std::size_t i = 0; i < depth; ++i) c.run.queries[qid].push_back({docs[i], 1.0 - 0.01 * double(i)});
        }
        std::shuffle(docs.begin(), docs.end(), rng);
        for (std::size_t i = 0, n = 1 + rng() % 4; i < n; ++i) c.qrels.add(qid, docs[i], 1);
    }
    if (c.run.queries.empty()) c.run.queries["unjudged"] = {{"d0", 1.0}};
    return c;
}

TEST(EvalIr, MrrDirectFormula) {
    Qrels qrels;
    qrels.add("q1", "r", 1);
    qrels.add("q2", "r", 1);
    qrels.add("q3", "r", 1);
    const auto run = run_of({{"q1", {"r", "x"}}, {"q2", {"x", "r"}}, {"q3", {"x", "y", "z", "r"}}});
    const auto rep = mrr(run, qrels, 100);
    EXPECT_NEAR(rep.mean, (1 + 0.5 + 0.25) / 3.0, 1e-15);
    EXPECT_EQ(rep.metric, "mrr@100");
    EXPECT_EQ(rep.per_query.at("q2"), 0.5);
    EXPECT_NEAR(mrr(run, qrels, 3).mean, 1.5 / 3.0, 1e-15);
}

TEST(EvalIr, NothingRetrievedScoresZero) {
    Qrels qrels;
    qrels.add("q1", "r", 1);
    qrels.add("q2", "r", 1);
    const auto run = run_of({{"q1", {"x"}}, {"q2", {"y", "z"}}});
    EXPECT_EQ(mrr(run, qrels, 100).mean, 0.0);
    EXPECT_EQ(precision_at(run, qrels, 1).mean, 0.0);
}

TEST(EvalIr, MissingQueriesScoreZeroAndAreListed) {
    Qrels qrels;
    qrels.add("q1", "r", 1);
    qrels.add("q2", "r", 1);
    const auto rep = mrr(run_of({{"q1", {"r"}}, {"extra", {"r"}}}), qrels, 10);
    EXPECT_EQ(rep.mean, 0.5);
    EXPECT_EQ(rep.missing_queries, std::vector<std::string>{"q2"});
    EXPECT_EQ(rep.per_query.size(), 2u);
}

TEST(EvalIr, PrecisionExamples) {
    Qrels qrels;
    qrels.add("q", "a", 1);
    qrels.add("q", "c", 1);
    qrels.add("q", "z", 1);
    EXPECT_EQ(precision_at(run_of({{"q", {"a", "b"}}}), qrels, 1).mean, 1.0);
    EXPECT_DOUBLE_EQ(precision_at(run_of({{"q", {"a", "b", "c", "d", "e", "z"}}}), qrels, 5).mean, 0.4);
    // a short list still divides by k
    EXPECT_DOUBLE_EQ(precision_at(run_of({{"q", {"a"}}}), qrels, 5).mean, 0.2);
    EXPECT_DOUBLE_EQ(recall_at(run_of({{"q", {"a", "b", "c"}}}), qrels, 5).mean, 2.0 / 3.0);
    EXPECT_EQ(success_at(run_of({{"q", {"b", "c"}}}), qrels, 1).mean, 0.0);
    EXPECT_EQ(success_at(run_of({{"q", {"b", "c"}}}), qrels, 2).mean, 1.0);
}

TEST(EvalIr, RandomRunsMatchScanOracles) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const auto c = random_case(rng, 30);
        for (std::size_t k : {1, 3, 10, 100}) {
            EXPECT_NEAR(mrr(c.run, c.qrels, k).mean, oracle::mean_reciprocal_rank(c.run, c.qrels, k), 1e-12);
            EXPECT_NEAR(precision_at(c.run, c.qrels, k).mean, oracle::mean_precision(c.run, c.qrels, k), 1e-12);
        }
    }
}

TEST(EvalIr, ValuesBoundedAndPerfectMrr) {
    std::mt19937_64 rng(18);
    for (int trial = 0; trial < 20; ++trial) {
        const auto c = random_case(rng, 10);
        for (const char* m : {"mrr", "p@1", "p@5", "r@10", "success@3"}) {
            const auto rep = evaluate(c.run, c.qrels, MetricSpec::parse(m));
            for (const auto& [q, v] : rep.per_query) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        }
    }
    Qrels qrels;
    qrels.add("a", "x", 1);
    qrels.add("b", "y", 1);
    EXPECT_EQ(mrr(run_of({{"a", {"x", "y"}}, {"b", {"y"}}}), qrels, 100).mean, 1.0);
    EXPECT_LT(mrr(run_of({{"a", {"x", "y"}}, {"b", {"x", "y"}}}), qrels, 100).mean, 1.0);
}

TEST(EvalIr, MetricSpecParsing) {
    EXPECT_EQ(MetricSpec::parse("mrr"), (MetricSpec{MetricKind::mrr, 100}));
    EXPECT_EQ(MetricSpec::parse("mrr@10"), (MetricSpec{MetricKind::mrr, 10}));
    EXPECT_EQ(MetricSpec::parse("p@1"), (MetricSpec{MetricKind::precision, 1}));
    EXPECT_EQ(MetricSpec::parse("r@20").name(), "r@20");
    EXPECT_EQ(MetricSpec::parse("success@5").kind, MetricKind::success);
    EXPECT_THROW(MetricSpec::parse("p"), Error);
    EXPECT_THROW(MetricSpec::parse("p@0"), Error);
    EXPECT_THROW(MetricSpec::parse("p@x"), Error);
    EXPECT_THROW(MetricSpec::parse("ndcg@10"), Error);
}

TEST(EvalIr, EmptyInputsRejected) {
    Qrels qrels;
    qrels.add("q", "d", 1);
    EXPECT_THROW(mrr(RetrievalRun{}, qrels, 10), Error);
    EXPECT_THROW(mrr(run_of({{"q", {"d"}}}), Qrels{}, 10), Error);
}

TEST(EvalIr, PairedValues) {
    Qrels qrels;
    qrels.add("a", "x", 1);
    qrels.add("b", "x", 1);
    const auto r1 = mrr(run_of({{"a", {"x"}}, {"b", {"y", "x"}}}), qrels, 10);
    const auto r2 = mrr(run_of({{"a", {"y", "x"}}}), qrels, 10);
    const auto [va, vb] = paired_values(r1, r2);
    EXPECT_EQ(va, (std::vector<double>{1.0, 0.5}));
    EXPECT_EQ(vb, (std::vector<double>{0.5, 0.0}));
}

TEST(Fisher, IdenticalSamplesGiveOne) {
    const std::vector<double> a = {0.1, 0.5, 1.0, 0.0};
    EXPECT_EQ(fisher_randomization(a, a).p_value, 1.0);
    std::vector<double> big(40, 0.25);
    EXPECT_EQ(fisher_randomization(big, big, {.rounds = 1000}).p_value, 1.0);
}

TEST(Fisher, ThreeQueriesExhaustive) {
    const std::vector<double> a = {1, 1, 1}, b = {0, 0, 0};
    const auto r = fisher_randomization(a, b);
    EXPECT_TRUE(r.exhaustive);
    EXPECT_EQ(r.assignments, 8u);
    EXPECT_DOUBLE_EQ(r.p_value, 0.25);
    EXPECT_DOUBLE_EQ(r.observed, 1.0);
}

TEST(Fisher, ExhaustiveMatchesOracle) {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + rng() % 12;
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<double>(rng() % 5) / 4.0;
            b[i] = static_cast<double>(rng() % 5) / 4.0;
        }
        EXPECT_DOUBLE_EQ(fisher_randomization(a, b).p_value, oracle::fisher_exhaustive(a, b));
    }
}

TEST(Fisher, MonteCarloAgreesWithExhaustive) {
    std::mt19937_64 rng(20);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> a(12), b(12);
    for (int i = 0; i < 12; ++i) {
        a[i] = u(rng);
        b[i] = u(rng) * 0.8;
    }
    const double exact = fisher_randomization(a, b).p_value;
    const auto mc = fisher_randomization(a, b, {.rounds = 100000, .seed = 3, .exhaustive_max_n = 0});
    EXPECT_FALSE(mc.exhaustive);
    EXPECT_NEAR(mc.p_value, exact, 0.01);
}

TEST(Fisher, SymmetricAndDeterministic) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> a(50), b(50);
    for (int i = 0; i < 50; ++i) a[i] = u(rng), b[i] = u(rng);
    const FisherOptions opt{.rounds = 20000, .seed = 42, .threads = 1};
    const auto ab = fisher_randomization(a, b, opt);
    EXPECT_EQ(ab.p_value, fisher_randomization(b, a, opt).p_value);
    EXPECT_EQ(ab.p_value, fisher_randomization(a, b, opt).p_value);
    auto threaded = opt;
    threaded.threads = 4;
    EXPECT_EQ(ab.p_value, fisher_randomization(a, b, threaded).p_value);
    auto other = opt;
    other.seed = 43;
    EXPECT_NE(ab.p_value, 0.0);
    EXPECT_GT(fisher_randomization(a, b, other).p_value, 0.0);
}

TEST(Fisher, StrongDifferenceIsSignificant) {
    std::vector<double> a(60, 0.9), b(60, 0.1);
    const auto r = fisher_randomization(a, b, {.rounds = 9999});
    EXPECT_DOUBLE_EQ(r.p_value, 1.0 / 10000.0);
}

TEST(Fisher, Errors) {
    const std::vector<double> a = {1.0}, b = {1.0, 2.0};
    EXPECT_THROW(fisher_randomization(a, b), Error);
    EXPECT_THROW(fisher_randomization(std::vector<double>{}, std::vector<double>{}), Error);
    std::vector<double> c(30, 1.0), d(30, 0.0);
    EXPECT_THROW(fisher_randomization(c, d, {.rounds = 0}), Error);
}

TEST(EvalIr, ReportFormats) {
    Qrels qrels;
    qrels.add("a", "x", 1);
    auto rep = mrr(run_of({{"a", {"y", "x"}}}), qrels, 10);
    rep.run_tag = "mono";
    const std::vector<MetricReport> reps = {rep};
    EXPECT_EQ(format_report_tsv(reps), "metric\tquery\tvalue\nmrr@10\ta\t0.5000000000\nmrr@10\tall\t0.5000000000\n");
    const auto j = nlohmann::json::parse(format_report_json(reps));
    EXPECT_EQ(j[0]["mean"], 0.5);
    EXPECT_EQ(j[0]["run"], "mono");
    EXPECT_NE(format_report_table(reps).find("mono"), std::string::npos);
}

}  // namespace
