// SPDX-License-Identifier: Apache-2.0
#pragma once

// Exact flat top-k search over one channel.

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xmr/embedstore.hpp"
#include "xmr/trec.hpp"

namespace xmr {

enum class Channel {
    mono_image,        // query image vs reference image
    cross_image_text,  // query image vs entity name
    text,              // question text vs passage text
};

/// Short names used in configs and file names: mono, cross, text.
std::string_view channel_name(Channel c);
Channel parse_channel(std::string_view name);

struct ChannelScores {
    std::string query_id;
    Channel channel = Channel::mono_image;
    std::vector<ScoredDoc> ranked;
};

struct SearchOptions {
    std::size_t threads = 1;
    /// Dot-product channels (e.g. text) may opt out of the unit-norm check.
    bool require_normalized = true;
};

/// Queries are scored in fixed blocks of this many rows, so results do
/// not depend on the thread count.
inline constexpr std::size_t kQueryBlock = 64;

/// For each query the k highest dot products (accumulated in double),
/// ties by ascending doc id.
std::vector<ChannelScores> topk(const EmbeddingMatrix& queries, const EmbeddingMatrix& corpus,
                                std::size_t k, Channel channel, const SearchOptions& options = {});

std::vector<double> score_pairs(const EmbeddingMatrix& queries, const EmbeddingMatrix& corpus,
                               const std::vector<std::pair<std::string, std::string>>& pairs,
                               const SearchOptions& options = {});

RetrievalRun to_run(const std::vector<ChannelScores>& scores, std::string tag);

}  // namespace xmr
