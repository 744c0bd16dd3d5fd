// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tmpdir.hpp"
#include "xmr/corpus.hpp"
#include "xmr/embedstore.hpp"
#include "xmr/error.hpp"

namespace {

using namespace xmr;

std::string sentence_of(std::size_t words, const std::string& first = "Alpha") {
    std::string s = first;
    for (std::size_t i = 1; i < words; ++i) s += " w" + std::to_string(i);
    return s + ".";
}

std::vector<std::string> texts(const std::vector<Passage>& ps) {
    std::vector<std::string> out;
    for (const auto& p : ps) out.push_back(p.text);
    return out;
}

TEST(Corpus, FiveSentencesOfThirtyWords) {
    std::string body;
    for (int i = 0; i < 5; ++i) body += (i ? " " : "") + sentence_of(30);
    const auto ps = split_passages({"E", "E", body, std::nullopt}, 100);
    ASSERT_EQ(ps.size(), 2u);
    EXPECT_EQ(count_words(ps[0].text), 90u);
    EXPECT_EQ(count_words(ps[1].text), 60u);
    EXPECT_EQ(split_sentences(ps[0].text).size(), 3u);
    EXPECT_EQ(ps[0].passage_id, "E#0");
    EXPECT_EQ(ps[1].passage_id, "E#1");
    EXPECT_EQ(ps[1].ordinal, 1u);
    EXPECT_EQ(ps[1].entity_id, "E");
}

TEST(Corpus, OversizedSentenceStandsAlone) {
    const auto ps = split_passages({"E", "E", sentence_of(150), std::nullopt}, 100);
    ASSERT_EQ(ps.size(), 1u);
    EXPECT_EQ(count_words(ps[0].text), 150u);

    const auto mixed = split_passages({"E", "E", sentence_of(10) + " " + sentence_of(150) + " " + sentence_of(10),
                                       std::nullopt},
                                      100);
    ASSERT_EQ(mixed.size(), 3u);
    EXPECT_EQ(count_words(mixed[1].text), 150u);
}

TEST(Corpus, ExactlyFullPassageFlushes) {
    const auto ps = split_passages({"E", "E", sentence_of(50) + " " + sentence_of(50) + " " + sentence_of(1),
                                    std::nullopt},
                                   100);
    ASSERT_EQ(ps.size(), 2u);
    EXPECT_EQ(count_words(ps[0].text), 100u);
}

TEST(Corpus, SentenceSplitting) {
    EXPECT_EQ(split_sentences("Hello world. This is it! Really? Yes."),
              (std::vector<std::string>{"Hello world.", "This is it!", "Really?", "Yes."}));
    EXPECT_EQ(split_sentences("Mr. Smith met Dr. Jones. They talked."),
              (std::vector<std::string>{"Mr. Smith met Dr. Jones.", "They talked."}));
    EXPECT_EQ(split_sentences("J. R. R. Tolkien wrote it. It sold."),
              (std::vector<std::string>{"J. R. R. Tolkien wrote it.", "It sold."}));
    EXPECT_EQ(split_sentences("He said \"stop.\" Then he left."),
              (std::vector<std::string>{"He said \"stop.\"", "Then he left."}));
    EXPECT_EQ(split_sentences("Pi is 3.14 exactly. ok then. Next one."),
              (std::vector<std::string>{"Pi is 3.14 exactly. ok then.", "Next one."}));
    EXPECT_EQ(split_sentences("Built in 1889. 300 workers helped."),
              (std::vector<std::string>{"Built in 1889.", "300 workers helped."}));
    EXPECT_EQ(split_sentences("  spaced\n\n out   text  "), (std::vector<std::string>{"spaced out text"}));
    EXPECT_TRUE(split_sentences("").empty());
    EXPECT_TRUE(split_sentences("   \n ").empty());
    EXPECT_EQ(split_sentences("No terminal punctuation"), (std::vector<std::string>{"No terminal punctuation"}));
}

TEST(Corpus, CountWords) {
    EXPECT_EQ(count_words(""), 0u);
    EXPECT_EQ(count_words("  a b\tc\n d "), 4u);
}

TEST(Corpus, RandomArticlesMatchPackingOracle) {
    std::mt19937_64 rng(1);
    static const std::vector<std::string> starts = {"The", "Any", "In", "Its", "He", "She", "1999", "\"Quoted"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> sentences;
        const std::size_t n = rng() % 12;
        for (std::size_t i = 0; i < n; ++i) {
            std::string s = sentence_of(1 + rng() % 60, starts[rng() % starts.size()]);
            if (rng() % 6 == 0) s.back() = "!?"[rng() % 2];
            sentences.push_back(s);
        }
        std::string body;
        for (const auto& s : sentences) body += (body.empty() ? "" : std::string(1 + rng() % 3, " \n"[rng() % 2])) + s;
        const std::size_t limit = 20 + rng() % 100;
        const auto ps = split_passages({"ent", "Ent", body, std::nullopt}, limit);
        EXPECT_EQ(texts(ps), oracle::pack_sentences(sentences, limit)) << body;

        std::vector<std::string> rejoined;
        for (const auto& p : ps) {
            for (auto& s : split_sentences(p.text)) rejoined.push_back(s);
            EXPECT_TRUE(count_words(p.text) <= limit || split_sentences(p.text).size() == 1);
        }
        EXPECT_EQ(rejoined, sentences);
        EXPECT_EQ(split_passages({"ent", "Ent", body, std::nullopt}, limit), ps);
    }
}

TEST(Corpus, PassageIds) {
    EXPECT_EQ(make_passage_id("Q42", 3), "Q42#3");
    EXPECT_EQ(parse_passage_id("a#b#12"), (std::pair<std::string, std::size_t>{"a#b", 12}));
    EXPECT_THROW(parse_passage_id("nohash"), Error);
    EXPECT_THROW(parse_passage_id("a#"), Error);
    EXPECT_THROW(parse_passage_id("a#x1"), Error);
}

TEST(Corpus, EntityPassageMap) {
    EntityPassageMap map;
    map.add("E1", {"E1#0", "E1#1"});
    EXPECT_TRUE(map.contains("E1"));
    EXPECT_EQ(map.entity_of("E1#1"), "E1");
    EXPECT_FALSE(map.entity_of("E2#0").has_value());
    EXPECT_THROW(map.passages_of("E2"), Error);
    EXPECT_THROW(map.add("E1", {"x"}), Error);
    EXPECT_THROW(map.add("E2", {"E1#0"}), Error);
    EXPECT_THROW(map.add("E3", {}), Error);
    EXPECT_EQ(map.passage_count(), 2u);
}

TEST(Corpus, BuildManifests) {
    const std::string two = sentence_of(60) + " " + sentence_of(60);
    const std::vector<Article> articles = {{"e1", "First", two, "e1.jpg"}, {"e2", "Second", two, std::nullopt}};
    const auto m = build_manifests(articles, 100, 2);
    EXPECT_EQ(m.entity_passages.size(), 2u);
    ASSERT_EQ(m.passages.size(), 4u);
    EXPECT_EQ(m.passages[0].passage_id, "e1#0");
    EXPECT_EQ(m.passages[3].passage_id, "e2#1");
    EXPECT_EQ(m.entity_passages.passages_of("e2"), (std::vector<std::string>{"e2#0", "e2#1"}));
    ASSERT_EQ(m.entity_names.size(), 2u);
    EXPECT_EQ(m.entity_names[1].name, "Second");
    EXPECT_EQ(m.entity_images, (std::vector<std::pair<std::string, std::string>>{{"e1", "e1.jpg"}}));

    const auto empty = build_manifests(std::vector<Article>{});
    EXPECT_EQ(empty.entity_passages.size(), 0u);
    EXPECT_TRUE(empty.passages.empty());

    EXPECT_THROW(build_manifests(std::vector<Article>{{"e", "a", "", {}}, {"e", "b", "", {}}}), Error);
    EXPECT_THROW(build_manifests(std::vector<Article>{{"e", "", "", {}}}), Error);
}

TEST(Corpus, ManifestsIndependentOfThreads) {
    std::vector<Article> articles;
    for (int i = 0; i < 40; ++i) {
        std::string body;
        for (int s = 0; s < 1 + i % 7; ++s) body += sentence_of(10 + (i * 7 + s) % 50) + " ";
        articles.push_back({"e" + std::to_string(i), "Name " + std::to_string(i), body, std::nullopt});
    }
    const auto a = build_manifests(articles, 60, 1);
    const auto b = build_manifests(articles, 60, 4);
    EXPECT_EQ(a.passages, b.passages);
    EXPECT_EQ(a.entity_passages.entries(), b.entity_passages.entries());
    std::set<std::string> ids;
    for (const auto& p : a.passages) {
        EXPECT_TRUE(ids.insert(p.passage_id).second);
        EXPECT_EQ(parse_passage_id(p.passage_id), (std::pair<std::string, std::size_t>{p.entity_id, p.ordinal}));
    }
}

TEST(Corpus, RecordsRoundTrip) {
    const auto dir = test::scratch_dir("corpus_io");
    const std::vector<Article> articles = {{"e1", "Tab\tName", "Body \"quoted\".\nLine.", "img.png"},
                                           {"e2", "Other", "", std::nullopt}};
    write_articles(articles, dir / "a.jsonl");
    const auto back = read_articles(dir / "a.jsonl");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].title, "Tab\tName");
    EXPECT_EQ(back[0].body, articles[0].body);
    EXPECT_EQ(back[0].image, "img.png");
    EXPECT_FALSE(back[1].image.has_value());

    const auto m = build_manifests(articles);
    write_passages(m.passages, dir / "p.jsonl");
    EXPECT_EQ(read_passages(dir / "p.jsonl"), m.passages);

    write_entity_passage_map(m.entity_passages, dir / "map.tsv");
    EXPECT_EQ(read_entity_passage_map(dir / "map.tsv").entries(), m.entity_passages.entries());

    detail::write_file(dir / "bad.jsonl", "{\"entity_id\": \"x\"}\n");
    EXPECT_THROW(read_articles(dir / "bad.jsonl"), Error);
    detail::write_file(dir / "bad2.jsonl", "[1,2]\n");
    EXPECT_THROW(read_articles(dir / "bad2.jsonl"), Error);
}

TEST(Corpus, TwoColumnManifest) {
    const auto dir = test::scratch_dir("corpus_two_col");
    const std::vector<std::pair<std::string, std::string>> rows = {{"e1", "Winston Churchill"},
                                                                   {"e2", "images/e2.jpg"}};
    write_two_column(rows, dir / "m.tsv");
    EXPECT_EQ(detail::read_file(dir / "m.tsv"), "e1\tWinston Churchill\ne2\timages/e2.jpg\n");
    EXPECT_EQ(read_two_column(dir / "m.tsv"), rows);
    EXPECT_THROW(write_two_column({{"a\tb", "x"}}, dir / "x.tsv"), Error);
    detail::write_file(dir / "bad.tsv", "no tab\n");
    EXPECT_THROW(read_two_column(dir / "bad.tsv"), Error);
}

TEST(Corpus, NameManifestAlignsWithEmbeddingSidecar) {
    const auto dir = test::scratch_dir("corpus_align");
    const std::vector<Article> articles = {{"b", "Bee", "One.", {}}, {"a", "Ay", "Two.", {}}, {"c", "Sea", "", {}}};
    const auto m = build_manifests(articles);
    std::vector<std::pair<std::string, std::string>> rows;
    std::vector<std::string> ids;
    std::vector<float> data;
    for (const auto& n : m.entity_names) {
        rows.emplace_back(n.entity_id, n.name);
        ids.push_back(n.entity_id);
        data.push_back(1.0f);
    }
    write_two_column(rows, dir / "names.tsv");
    write_embeddings(EmbeddingMatrix(ChannelRole::entity_name, ids, data, 1), dir / "names.emb");
    const auto manifest = read_two_column(dir / "names.tsv");
    const auto sidecar = read_id_lines(sidecar_path(dir / "names.emb"));
    ASSERT_EQ(manifest.size(), sidecar.size());
    for (std::size_t i = 0; i < sidecar.size(); ++i) EXPECT_EQ(manifest[i].first, sidecar[i]);
}

}  // namespace
