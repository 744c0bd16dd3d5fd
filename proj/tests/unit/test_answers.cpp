// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tmpdir.hpp"
#include "xmr/answers.hpp"
#include "xmr/embedstore.hpp"
#include "xmr/error.hpp"

namespace {

using namespace xmr;
using Golds = std::vector<std::string>;

std::string random_answer(std::mt19937_64& rng) {
    static const std::vector<std::string> words = {"The", "a", "an", "Winston", "churchill", "eiffel",
                                                   "TOWER", "paris", "1999", "42", "river", "Nile",
                                                   "of", "the", "new", "york", "x"};
    static const std::string punct = ".,!?'\"-;:()";
    std::string out;
    const int n = static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) {
        if (i > 0 || rng() % 4 == 0) out += std::string(1 + rng() % 2, rng() % 5 == 0 ? '\t' : ' ');
        out += words[rng() % words.size()];
        if (rng() % 4 == 0) out.push_back(punct[rng() % punct.size()]);
    }
    if (rng() % 5 == 0) out += "  ";
    return out;
}

TEST(Answers, Normalize) {
    EXPECT_EQ(normalize_answer("The Eiffel Tower!"), "eiffel tower");
    EXPECT_EQ(normalize_answer(""), "");
    EXPECT_EQ(normalize_answer("  A   cat,\tan   OWL "), "cat owl");
    EXPECT_EQ(normalize_answer("theme"), "theme");
    EXPECT_EQ(normalize_answer("Café"), "café");
    EXPECT_EQ(answer_tokens("The U.S. Army"), (std::vector<std::string>{"us", "army"}));
}

TEST(Answers, NormalizeIdempotentFuzz) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 2000; ++i) {
        const auto s = random_answer(rng);
        const auto once = normalize_answer(s);
        EXPECT_EQ(normalize_answer(once), once) << s;
    }
}

TEST(Answers, ExactMatch) {
    EXPECT_TRUE(exact_match("the Winston Churchill", Golds{"Winston Churchill"}));
    EXPECT_FALSE(exact_match("Churchill", Golds{"Winston Churchill"}));
    EXPECT_TRUE(exact_match("paris", Golds{"London", "Paris."}));
    EXPECT_THROW(exact_match("x", Golds{}), Error);
}

TEST(Answers, TokenF1) {
    EXPECT_DOUBLE_EQ(token_f1("winston churchill", Golds{"winston churchill"}), 1.0);
    EXPECT_DOUBLE_EQ(token_f1("winston", Golds{"winston churchill"}), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(token_f1("", Golds{""}), 1.0);
    EXPECT_DOUBLE_EQ(token_f1("the", Golds{"a"}), 1.0);
    EXPECT_DOUBLE_EQ(token_f1("", Golds{"x"}), 0.0);
    EXPECT_DOUBLE_EQ(token_f1("x x y", Golds{"x y y"}), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(token_f1("new york", Golds{"york", "new york city"}), 0.8);
}

TEST(Answers, TokenF1MatchesMultisetOracle) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 3000; ++i) {
        const auto p = random_answer(rng), g = random_answer(rng);
        EXPECT_NEAR(token_f1(p, Golds{g}), oracle::token_f1_normalized(normalize_answer(p), normalize_answer(g)),
                    1e-12)
            << p << " | " << g;
    }
}

TEST(Answers, SoftMatchBoundaries) {
    EXPECT_TRUE(soft_match("2000", Golds{"1999"}, AnswerKind::year).matched);
    EXPECT_TRUE(soft_match("1998", Golds{"1999"}, AnswerKind::year).matched);
    EXPECT_FALSE(soft_match("2001", Golds{"1999"}, AnswerKind::year).matched);
    EXPECT_TRUE(soft_match("in 1999 or so", Golds{"1999"}, AnswerKind::year).matched);
    EXPECT_TRUE(soft_match("109", Golds{"100"}, AnswerKind::numeric).matched);
    EXPECT_FALSE(soft_match("111", Golds{"100"}, AnswerKind::numeric).matched);
    EXPECT_TRUE(soft_match("110", Golds{"100"}, AnswerKind::numeric).matched);
    EXPECT_TRUE(soft_match("90", Golds{"100"}, AnswerKind::numeric).matched);
    EXPECT_FALSE(soft_match("89", Golds{"100"}, AnswerKind::numeric).matched);
    EXPECT_TRUE(soft_match("1,050 metres", Golds{"1000 m"}, AnswerKind::numeric).matched);
    EXPECT_TRUE(soft_match("-95", Golds{"-100"}, AnswerKind::numeric).matched);
    EXPECT_TRUE(soft_match("0", Golds{"0"}, AnswerKind::numeric).matched);
    EXPECT_FALSE(soft_match("0.001", Golds{"0"}, AnswerKind::numeric).matched);
    EXPECT_TRUE(soft_match("Paris", Golds{"paris"}, AnswerKind::text).matched);
    EXPECT_FALSE(soft_match("Pariss", Golds{"paris"}, AnswerKind::text).matched);
}

TEST(Answers, SoftMatchParseFailure) {
    const auto r = soft_match("unknown", Golds{"1999"}, AnswerKind::year);
    EXPECT_FALSE(r.matched);
    EXPECT_TRUE(r.parse_failure);
    EXPECT_TRUE(soft_match("", Golds{"12 kg"}, AnswerKind::numeric).parse_failure);
    EXPECT_FALSE(soft_match("anything", Golds{"x"}, AnswerKind::text).parse_failure);
}

TEST(Answers, SoftMatchYearOracle) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 2000; ++i) {
        const long gold = 1000 + static_cast<long>(rng() % 2000);
        const long delta = static_cast<long>(rng() % 7) - 3;
        const bool want = std::labs(delta) <= 1;
        EXPECT_EQ(soft_match(std::to_string(gold + delta), Golds{std::to_string(gold)}, AnswerKind::year).matched,
                  want);
        // symmetric in direction
        EXPECT_EQ(soft_match(std::to_string(gold - delta), Golds{std::to_string(gold)}, AnswerKind::year).matched,
                  want);
    }
}

TEST(Answers, SoftMatchNumericOracle) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 2000; ++i) {
        const long gold = 1 + static_cast<long>(rng() % 5000);
        const long delta = static_cast<long>(rng() % (gold / 4 + 3)) - static_cast<long>(gold / 8 + 1);
        const bool want = 10 * std::labs(delta) <= gold;
        EXPECT_EQ(
            soft_match(std::to_string(gold + delta), Golds{std::to_string(gold)}, AnswerKind::numeric).matched,
            want)
            << gold << " " << delta;
    }
    // tolerance scales with the gold, not the prediction
    EXPECT_TRUE(soft_match("100", Golds{"111"}, AnswerKind::numeric).matched);
    EXPECT_FALSE(soft_match("111", Golds{"100"}, AnswerKind::numeric).matched);
}

TEST(Answers, ImplicationChainFuzz) {
    std::mt19937_64 rng(5);
    int em_cases = 0;
    for (int i = 0; i < 5000; ++i) {
        const auto g = random_answer(rng);
        const auto p = rng() % 3 == 0 ? g : random_answer(rng);
        const Golds golds{g};
        const bool em = exact_match(p, golds);
        const bool soft = soft_match(p, golds, AnswerKind::text).matched;
        if (em) ++em_cases;
        if (em) EXPECT_TRUE(soft);
        if (soft) EXPECT_GT(token_f1(p, golds), 0.0);
        if (em) EXPECT_DOUBLE_EQ(token_f1(p, golds), 1.0);
        for (auto kind : {AnswerKind::year, AnswerKind::numeric}) {
            if (em) EXPECT_TRUE(soft_match(p, golds, kind).matched);
        }
    }
    EXPECT_GT(em_cases, 1000);
}

TEST(Answers, ParseNumbers) {
    EXPECT_EQ(parse_first_number("about 1,234.5 km"), 1234.5);
    EXPECT_EQ(parse_first_number("-3 degrees"), -3.0);
    EXPECT_EQ(parse_first_number("well-3"), 3.0);
    EXPECT_EQ(parse_first_number("12,34"), 12.0);
    EXPECT_EQ(parse_first_number("3.14."), 3.14);
    EXPECT_FALSE(parse_first_number("none").has_value());
    EXPECT_EQ(parse_first_integer("AD 1066 and 1067"), 1066);
    EXPECT_EQ(parse_first_integer("(-44)"), -44);
    EXPECT_FALSE(parse_first_integer("").has_value());
}

TEST(Answers, DetectKind) {
    EXPECT_EQ(detect_kind(Golds{"1999"}), AnswerKind::year);
    EXPECT_EQ(detect_kind(Golds{" 2024 "}), AnswerKind::year);
    EXPECT_EQ(detect_kind(Golds{"3000"}), AnswerKind::numeric);
    EXPECT_EQ(detect_kind(Golds{"0999"}), AnswerKind::numeric);
    EXPECT_EQ(detect_kind(Golds{"42 km"}), AnswerKind::numeric);
    EXPECT_EQ(detect_kind(Golds{"-5"}), AnswerKind::numeric);
    EXPECT_EQ(detect_kind(Golds{"Paris", "1999"}), AnswerKind::text);
    EXPECT_EQ(detect_kind(Golds{"in 1999"}), AnswerKind::text);
    EXPECT_EQ(parse_answer_kind("numeric"), AnswerKind::numeric);
    EXPECT_THROW(parse_answer_kind("date"), Error);
}

TEST(Answers, AnswerPresent) {
    EXPECT_TRUE(answer_present("He met Winston Churchill in 1940.", Golds{"Winston Churchill"}, AnswerKind::text));
    EXPECT_FALSE(answer_present("Churchillian style", Golds{"Churchill"}, AnswerKind::text));
    EXPECT_TRUE(answer_present("It opened in 1889.", Golds{"1890"}, AnswerKind::year));
    EXPECT_FALSE(answer_present("It opened in 1887.", Golds{"1890"}, AnswerKind::year));
    EXPECT_TRUE(answer_present("It is 324 metres tall", Golds{"300 m"}, AnswerKind::numeric));
    EXPECT_FALSE(answer_present("It is 324 metres tall", Golds{"300 m"}, AnswerKind::text));
}

TEST(Answers, QrelsFromAnswersEntityGate) {
    const std::vector<Passage> passages = {
        {"E#0", "E", 0, "He was led by winston churchill."},
        {"E#1", "E", 1, "Nothing here."},
        {"F#0", "F", 0, "Winston Churchill also appears here."},
    };
    AnswerTargets targets;
    targets["q1"] = {"E", {"Winston Churchill"}, std::nullopt};
    targets["q2"] = {"F", {"Paris"}, std::nullopt};
    QrelsBuildStats stats;
    const auto qrels = qrels_from_answers(passages, targets, Granularity::passage, &stats);
    EXPECT_TRUE(qrels.is_relevant("q1", "E#0"));
    EXPECT_FALSE(qrels.is_relevant("q1", "E#1"));
    EXPECT_FALSE(qrels.is_relevant("q1", "F#0"));
    EXPECT_EQ(qrels.size(), 1u);
    EXPECT_EQ(stats.queries_without_relevant, std::vector<std::string>{"q2"});

    const auto by_entity = qrels_from_answers(passages, targets, Granularity::entity);
    EXPECT_TRUE(by_entity.is_relevant("q1", "E"));
}

TEST(Answers, QrelsFromAnswersScanOracle) {
    std::mt19937_64 rng(6);
    static const std::vector<std::string> vocab = {"red", "river", "stone", "bridge", "old", "town", "king",
                                                   "queen", "north", "sea"};
    std::vector<Passage> passages;
    for (int i = 0; i < 50; ++i) {
        const std::string e = "e" + std::to_string(i % 10);
        std::string text;
        for (int w = 0; w < 12; ++w) text += (w ? " " : "") + vocab[rng() % vocab.size()];
        passages.push_back({e + "#" + std::to_string(i / 10), e, static_cast<std::size_t>(i / 10), text});
    }
    AnswerTargets targets;
    for (int q = 0; q < 30; ++q) {
        std::string gold = vocab[rng() % vocab.size()] + " " + vocab[rng() % vocab.size()];
        targets["q" + std::to_string(q)] = {"e" + std::to_string(rng() % 10), {gold}, AnswerKind::text};
    }
    const auto qrels = qrels_from_answers(passages, targets);
    for (const auto& [qid, t] : targets) {
        for (const auto& p : passages) {
            const bool want = p.entity_id == t.entity_id &&
                              (" " + p.text + " ").find(" " + t.golds[0] + " ") != std::string::npos;
            EXPECT_EQ(qrels.is_relevant(qid, p.passage_id), want) << qid << " " << p.passage_id;
        }
    }
}

TEST(Answers, ScoreAnswers) {
    AnswerTargets targets;
    targets["a"] = {"E", {"Paris"}, std::nullopt};
    targets["b"] = {"E", {"1999"}, std::nullopt};
    targets["c"] = {"E", {"100 kg"}, std::nullopt};
    targets["d"] = {"E", {"nothing"}, std::nullopt};
    const std::map<std::string, std::string> preds = {{"a", "paris"}, {"b", "2000"}, {"c", "none"}};
    const auto s = score_answers(preds, targets);
    EXPECT_DOUBLE_EQ(s.exact_match, 0.25);
    EXPECT_DOUBLE_EQ(s.soft_match, 0.5);
    EXPECT_EQ(s.parse_failures, 1u);
    EXPECT_EQ(s.missing_predictions, std::vector<std::string>{"d"});
    EXPECT_EQ(s.per_question[1].kind, AnswerKind::year);
}

TEST(Answers, ReadFiles) {
    const auto dir = test::scratch_dir("answers_io");
    detail::write_file(dir / "p.tsv", "a\tParis\nb\t\n");
    const auto preds = read_predictions(dir / "p.tsv");
    EXPECT_EQ(preds.at("a"), "Paris");
    EXPECT_EQ(preds.at("b"), "");
    detail::write_file(dir / "bad.tsv", "a Paris\n");
    EXPECT_THROW(read_predictions(dir / "bad.tsv"), Error);

    detail::write_file(dir / "t.jsonl",
                       "{\"question_id\":\"a\",\"entity_id\":\"E\",\"golds\":[\"Paris\"]}\n"
                       "\n"
                       "{\"question_id\":\"b\",\"entity_id\":\"F\",\"golds\":[\"12\"],\"kind\":\"numeric\"}\n");
    const auto t = read_answer_targets(dir / "t.jsonl");
    EXPECT_EQ(t.at("a").golds, Golds{"Paris"});
    EXPECT_FALSE(t.at("a").kind.has_value());
    EXPECT_EQ(t.at("b").kind, AnswerKind::numeric);
    detail::write_file(dir / "t2.jsonl", "{\"question_id\":\"a\",\"golds\":[]}\n");
    EXPECT_THROW(read_answer_targets(dir / "t2.jsonl"), Error);
    detail::write_file(dir / "t3.jsonl", "not json\n");
    EXPECT_THROW(read_answer_targets(dir / "t3.jsonl"), Error);
}

}  // namespace
