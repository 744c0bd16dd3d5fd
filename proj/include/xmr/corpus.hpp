// SPDX-License-Identifier: Apache-2.0
#pragma once

/// \file corpus.hpp
/// \brief Knowledge-base preprocessing: article -> passage splitting and
/// the entity/passage manifests consumed by fusion and the encoder bridge.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace xmr {

struct Article {
    std::string entity_id;
    std::string title;  // the entity name
    std::string body;
    std::optional<std::string> image;
};

struct Passage {
    std::string passage_id;  // "<entity_id>#<ordinal>"
    std::string entity_id;
    std::size_t ordinal = 0;
    std::string text;

    friend bool operator==(const Passage&, const Passage&) = default;
};

/// entity id -> ordered passage ids. Each passage belongs to one entity.
class EntityPassageMap {
public:
    using Entry = std::pair<std::string, std::vector<std::string>>;

    void add(std::string entity_id, std::vector<std::string> passage_ids);

    bool contains(std::string_view entity_id) const;
    const std::vector<std::string>& passages_of(std::string_view entity_id) const;
    std::optional<std::string> entity_of(std::string_view passage_id) const;

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t passage_count() const noexcept { return owner_.size(); }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, std::string> owner_;
};

inline constexpr std::size_t kDefaultPassageWords = 100;

/// Splits on '.', '!' or '?' (plus closing quotes/brackets) followed by
/// whitespace and an uppercase letter, digit or opening quote. Known
/// abbreviations and single-letter initials do not end a sentence.
/// Whitespace runs inside a sentence collapse to one space.
std::vector<std::string> split_sentences(std::string_view body);

std::size_t count_words(std::string_view text);

/// Greedy sentence packing: a sentence joins the current passage while the
/// total stays within `limit` words; an oversized sentence stands alone.
std::vector<Passage> split_passages(const Article& article, std::size_t limit = kDefaultPassageWords);

std::string make_passage_id(std::string_view entity_id, std::size_t ordinal);
/// Inverse of make_passage_id (splits at the last '#').
std::pair<std::string, std::size_t> parse_passage_id(std::string_view passage_id);

struct EntityName {
    std::string entity_id;
    std::string name;
};

struct Manifests {
    EntityPassageMap entity_passages;
    std::vector<Passage> passages;
    /// Row-aligned with the entity-name embedding matrix.
    std::vector<EntityName> entity_names;
    /// (entity id, image ref) for articles that carry one.
    std::vector<std::pair<std::string, std::string>> entity_images;
};

/// Articles are split in parallel; output order follows input order.
Manifests build_manifests(std::span<const Article> articles,
                          std::size_t limit = kDefaultPassageWords, std::size_t threads = 1);

// Records files: one JSON object per line.
std::vector<Article> read_articles(const std::filesystem::path& path);
void write_articles(std::span<const Article> articles, const std::filesystem::path& path);
std::vector<Passage> read_passages(const std::filesystem::path& path);
void write_passages(std::span<const Passage> passages, const std::filesystem::path& path);

// `entity_id<TAB>passage_id`, one row per passage in map order.
EntityPassageMap read_entity_passage_map(const std::filesystem::path& path);
void write_entity_passage_map(const EntityPassageMap& map, const std::filesystem::path& path);

/// Two-column `id<TAB>text` manifest for the encoder bridge.
void write_two_column(const std::vector<std::pair<std::string, std::string>>& rows,
                      const std::filesystem::path& path);
std::vector<std::pair<std::string, std::string>> read_two_column(const std::filesystem::path& path);

}  // namespace xmr
